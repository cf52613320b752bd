#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace equicert {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

// Error taxonomy. Commands map these onto process exit codes:
// config/usage -> 2, I/O -> 3, everything else -> 1.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Two elements from different group tables were combined.
struct GroupMismatchError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A bounded-range group operation left its effective support
// (shift composition or shift action escaping the padded window).
struct GroupRangeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Input is fixed by a non-identity element; orbit decomposition undefined.
struct NonFreeOrbitError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// The (family, action, kernel) combination is not in the closure registry,
// or its projection failed verification.
struct ClosureNotCertifiedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Non-finite value where a finite one is required (e.g. optimizer gradients).
struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tabular predictor evaluated outside its enumerated input set.
struct UnknownInputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace equicert
