#include "cli_app.hpp"

int main(int argc, char** argv) { return genhull::cli::dispatch(argc, argv); }
