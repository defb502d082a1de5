#pragma once

#include <stdexcept>
#include <string>

namespace lbpf {

/// Unusable input: missing/corrupt files, wrong color space, shape mismatches.
struct bad_input : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Structurally valid input that cannot be learned from or evaluated:
/// single-class label sets, empty sample sets, folds that lose a class.
struct degenerate_data : std::runtime_error {
    using std::runtime_error::runtime_error;
};

} // namespace lbpf
