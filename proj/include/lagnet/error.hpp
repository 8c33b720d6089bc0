#pragma once

#include <stdexcept>
#include <string>

namespace lagnet {

// Bad arguments or malformed input data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Training produced a non-finite loss or gradient.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(const std::string& what, double weight_norm)
        : std::runtime_error(what), weight_norm_(weight_norm) {}

    double weight_norm() const noexcept { return weight_norm_; }

private:
    double weight_norm_;
};

}  // namespace lagnet
