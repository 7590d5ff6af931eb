#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "genhull/core.hpp"
#include "genhull/dataset.hpp"

namespace genhull {

enum class TableFormat { csv, arff };

/// Target column selector: header name or 0-based index.
using ColumnRef = std::variant<std::string, std::size_t>;

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

inline std::string strip_quotes(const std::string& s) {
    if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') || (s.front() == '\'' && s.back() == '\'')))
        return s.substr(1, s.size() - 2);
    return s;
}

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep = ',') {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char ch : line) {
        if (ch == '"') {
            quoted = !quoted;
            cur.push_back(ch);
        } else if (ch == sep && !quoted) {
            out.push_back(strip_quotes(trim(cur)));
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(strip_quotes(trim(cur)));
    return out;
}

inline std::optional<double> parse_double(const std::string& s) {
    const std::string t = trim(s);
    if (t.empty()) return std::nullopt;
    double value = 0.0;
    const char* begin = t.data();
    const char* end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) return std::nullopt;
    return value;
}

inline std::size_t resolve_target(const ColumnRef& target, const std::vector<std::string>& names) {
    if (std::holds_alternative<std::size_t>(target)) {
        const std::size_t idx = std::get<std::size_t>(target);
        if (idx >= names.size())
            throw std::invalid_argument("load_table: target column index " + std::to_string(idx) +
                                        " out of range (" + std::to_string(names.size()) + " columns)");
        return idx;
    }
    const std::string& want = std::get<std::string>(target);
    for (std::size_t j = 0; j < names.size(); ++j)
        if (names[j] == want) return j;
    throw std::invalid_argument("load_table: target column '" + want + "' not found");
}

struct LabelEncoder {
    std::unordered_map<std::string, int> codes;
    std::vector<std::string> labels;

    int encode(const std::string& raw) {
        auto it = codes.find(raw);
        if (it != codes.end()) return it->second;
        const int code = static_cast<int>(labels.size());
        codes.emplace(raw, code);
        labels.push_back(raw);
        return code;
    }
};

inline Dataset load_csv(std::istream& in, const ColumnRef& target, const std::string& id) {
    std::string line;
    std::size_t line_no = 0;
    // header
    do {
        if (!std::getline(in, line)) throw ParseError("load_table: empty CSV source", 1, 1);
        ++line_no;
    } while (trim(line).empty());
    const std::vector<std::string> header = split_fields(line);
    const std::size_t target_idx = resolve_target(target, header);
    const std::size_t n_cols = header.size();

    Dataset ds;
    ds.id = id;
    for (std::size_t j = 0; j < n_cols; ++j)
        if (j != target_idx) ds.feature_names.push_back(header[j]);

    LabelEncoder enc;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != n_cols)
            throw ParseError("load_table: expected " + std::to_string(n_cols) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no, 1);
        std::vector<double> row;
        row.reserve(n_cols - 1);
        for (std::size_t j = 0; j < n_cols; ++j) {
            if (j == target_idx) {
                ds.y.push_back(enc.encode(fields[j]));
                continue;
            }
            const auto v = parse_double(fields[j]);
            if (!v)
                throw ParseError("load_table: non-numeric value '" + fields[j] + "' in feature column '" +
                                     header[j] + "'",
                                 line_no, j + 1);
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("load_table: CSV has no data rows", line_no, 1);
    ds.X = Matrix::from_rows(rows);
    ds.class_labels = std::move(enc.labels);
    return ds;
}

struct ArffAttribute {
    std::string name;
    bool numeric = false;
    std::vector<std::string> nominal_values;
};

inline Dataset load_arff(std::istream& in, const ColumnRef& target, const std::string& id) {
    std::vector<ArffAttribute> attrs;
    std::string line;
    std::size_t line_no = 0;
    bool in_data = false;

    Dataset ds;
    ds.id = id;
    LabelEncoder enc;
    std::vector<std::vector<double>> rows;
    std::size_t target_idx = 0;
    bool target_resolved = false;

    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '%') continue;
        if (!in_data) {
            const std::string low = lower(t);
            if (low.rfind("@relation", 0) == 0) continue;
            if (low.rfind("@attribute", 0) == 0) {
                std::string rest = trim(t.substr(10));
                ArffAttribute attr;
                if (!rest.empty() && (rest[0] == '"' || rest[0] == '\'')) {
                    const char quote = rest[0];
                    const std::size_t close = rest.find(quote, 1);
                    if (close == std::string::npos) throw ParseError("load_table: unterminated attribute name", line_no, 1);
                    attr.name = rest.substr(1, close - 1);
                    rest = trim(rest.substr(close + 1));
                } else {
                    const std::size_t sp = rest.find_first_of(" \t");
                    if (sp == std::string::npos) throw ParseError("load_table: @attribute missing type", line_no, 1);
                    attr.name = rest.substr(0, sp);
                    rest = trim(rest.substr(sp));
                }
                const std::string type = lower(rest);
                if (type == "numeric" || type == "real" || type == "integer") {
                    attr.numeric = true;
                } else if (!rest.empty() && rest.front() == '{' && rest.back() == '}') {
                    for (auto& v : split_fields(rest.substr(1, rest.size() - 2)))
                        attr.nominal_values.push_back(v);
                } else {
                    throw ParseError("load_table: unsupported ARFF attribute type '" + rest + "'", line_no, 1);
                }
                attrs.push_back(std::move(attr));
                continue;
            }
            if (low.rfind("@data", 0) == 0) {
                if (attrs.empty()) throw ParseError("load_table: @data before any @attribute", line_no, 1);
                std::vector<std::string> names;
                names.reserve(attrs.size());
                for (const auto& a : attrs) names.push_back(a.name);
                target_idx = resolve_target(target, names);
                target_resolved = true;
                for (std::size_t j = 0; j < attrs.size(); ++j) {
                    if (j == target_idx) continue;
                    if (!attrs[j].numeric)
                        throw std::invalid_argument("load_table: non-numeric feature attribute '" + attrs[j].name +
                                                    "' (only the target may be nominal)");
                    ds.feature_names.push_back(attrs[j].name);
                }
                in_data = true;
                continue;
            }
            throw ParseError("load_table: unexpected ARFF header line '" + t + "'", line_no, 1);
        }
        // data section
        const auto fields = split_fields(t);
        if (fields.size() != attrs.size())
            throw ParseError("load_table: expected " + std::to_string(attrs.size()) + " fields, found " +
                                 std::to_string(fields.size()),
                             line_no, 1);
        std::vector<double> row;
        row.reserve(attrs.size() - 1);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            if (j == target_idx) {
                const std::string& raw = fields[j];
                if (!attrs[j].nominal_values.empty() &&
                    std::find(attrs[j].nominal_values.begin(), attrs[j].nominal_values.end(), raw) ==
                        attrs[j].nominal_values.end())
                    throw ParseError("load_table: target value '" + raw + "' not among declared nominal values",
                                     line_no, j + 1);
                ds.y.push_back(enc.encode(raw));
                continue;
            }
            if (fields[j] == "?")
                throw ParseError("load_table: missing value in feature column '" + attrs[j].name + "'", line_no,
                                 j + 1);
            const auto v = parse_double(fields[j]);
            if (!v)
                throw ParseError("load_table: non-numeric value '" + fields[j] + "' in feature column '" +
                                     attrs[j].name + "'",
                                 line_no, j + 1);
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (!target_resolved) throw ParseError("load_table: ARFF source has no @data section", line_no, 1);
    if (rows.empty()) throw ParseError("load_table: ARFF has no data rows", line_no, 1);
    ds.X = Matrix::from_rows(rows);
    ds.class_labels = std::move(enc.labels);
    return ds;
}

}  // namespace detail

/// Parse a CSV or ARFF table from a stream, splitting off the target column.
inline Dataset load_table(std::istream& in, TableFormat format, const ColumnRef& target,
                          const std::string& id = "") {
    switch (format) {
        case TableFormat::csv: return detail::load_csv(in, target, id);
        case TableFormat::arff: return detail::load_arff(in, target, id);
    }
    throw std::invalid_argument("load_table: unknown format");
}

inline Dataset load_table(const std::string& path, TableFormat format, const ColumnRef& target,
                          std::string id = "") {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_table: cannot open '" + path + "'");
    if (id.empty()) id = path;
    return load_table(in, format, target, id);
}

/// Infer csv/arff from a file extension; defaults to csv.
inline TableFormat guess_format(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos && detail::lower(path.substr(dot + 1)) == "arff") return TableFormat::arff;
    return TableFormat::csv;
}

/// Column names of a table without loading the data; the CLI uses this to
/// default the target to the last column.
inline std::vector<std::string> peek_columns(const std::string& path, TableFormat format) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("peek_columns: cannot open '" + path + "'");
    std::string line;
    if (format == TableFormat::csv) {
        while (std::getline(in, line))
            if (!detail::trim(line).empty()) return detail::split_fields(line);
        throw ParseError("peek_columns: empty CSV", 1, 1);
    }
    std::vector<std::string> names;
    while (std::getline(in, line)) {
        const std::string t = detail::trim(line);
        if (t.empty() || t[0] == '%') continue;
        const std::string low = detail::lower(t);
        if (low.rfind("@data", 0) == 0) break;
        if (low.rfind("@attribute", 0) != 0) continue;
        std::string rest = detail::trim(t.substr(10));
        if (!rest.empty() && (rest[0] == '"' || rest[0] == '\'')) {
            const std::size_t close = rest.find(rest[0], 1);
            names.push_back(rest.substr(1, close == std::string::npos ? std::string::npos : close - 1));
        } else {
            names.push_back(rest.substr(0, rest.find_first_of(" \t")));
        }
    }
    if (names.empty()) throw ParseError("peek_columns: no @attribute lines", 1, 1);
    return names;
}

/// Headered all-numeric CSV (no target column) -> matrix; used by `hull`.
inline Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("read_matrix_csv: cannot open '" + path + "'");
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError("read_matrix_csv: empty file", 1, 1);
    ++line_no;
    const std::size_t n_cols = detail::split_fields(line).size();
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        const auto fields = detail::split_fields(line);
        if (fields.size() != n_cols)
            throw ParseError("read_matrix_csv: ragged row", line_no, 1);
        std::vector<double> row;
        row.reserve(n_cols);
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const auto v = detail::parse_double(fields[j]);
            if (!v) throw ParseError("read_matrix_csv: non-numeric value '" + fields[j] + "'", line_no, j + 1);
            row.push_back(*v);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("read_matrix_csv: no data rows", line_no, 1);
    return Matrix::from_rows(rows);
}

/// Write a dataset as CSV with the target appended as the last column.
inline void write_dataset_csv(std::ostream& out, const Dataset& ds, const std::string& target_name = "target") {
    for (std::size_t j = 0; j < ds.n_features(); ++j) out << ds.feature_names[j] << ',';
    out << target_name << '\n';
    out.precision(17);
    for (std::size_t i = 0; i < ds.n_samples(); ++i) {
        for (std::size_t j = 0; j < ds.n_features(); ++j) out << ds.X(i, j) << ',';
        out << ds.class_labels[static_cast<std::size_t>(ds.y[i])] << '\n';
    }
}

inline void write_matrix_csv(std::ostream& out, const Matrix& m, const std::vector<std::string>& names = {}) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
        out << (j < names.size() ? names[j] : "f" + std::to_string(j));
        out << (j + 1 < m.cols() ? ',' : '\n');
    }
    out.precision(17);
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < m.cols(); ++j)
            out << m(i, j) << (j + 1 < m.cols() ? ',' : '\n');
}

}  // namespace genhull
