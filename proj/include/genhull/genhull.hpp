#pragma once

#include "genhull/core.hpp"
#include "genhull/dataset.hpp"
#include "genhull/io.hpp"
#include "genhull/folds.hpp"
#include "genhull/synthetic.hpp"
#include "genhull/numerics.hpp"
#include "genhull/hull.hpp"
#include "genhull/metafeatures.hpp"
#include "genhull/classifiers.hpp"
#include "genhull/harness.hpp"
#include "genhull/metamodel.hpp"
