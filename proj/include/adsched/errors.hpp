#pragma once
#include <stdexcept>
#include <string>

namespace adsched {

// Thrown when the filter normalizer sigma(pi, y) is zero, i.e. the observation
// has zero probability under the predicted belief. Signals model/data mismatch.
struct FilterDegeneracyError : std::runtime_error {
    explicit FilterDegeneracyError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace adsched
