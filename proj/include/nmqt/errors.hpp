#pragma once

#include <stdexcept>
#include <string>

namespace nmqt {

// Bad user input: malformed config file, parameter out of range, inconsistent
// channel set. CLI maps this to exit code 2.
struct config_error : std::runtime_error {
    explicit config_error(const std::string& what) : std::runtime_error(what) {}
};

// Numerical fault while stepping: per-step probabilities exceeding one,
// window overflow under the strict policy. CLI maps this to exit code 3.
struct numerical_error : std::runtime_error {
    enum class kind { step_size, window_overflow, underflow, other };
    kind fault;
    numerical_error(kind k, const std::string& what)
        : std::runtime_error(what), fault(k) {}
};

} // namespace nmqt
