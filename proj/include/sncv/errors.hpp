#pragma once

#include <stdexcept>
#include <string>

namespace sncv {

// Thrown when a sample is too short for the requested estimator.
struct insufficient_data_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Thrown when a sample has zero spread (all values equal), which leaves the
// scale parameter unidentifiable.
struct degenerate_sample_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

}  // namespace sncv
