#pragma once

#include <stdexcept>
#include <string>

namespace hmmcredit {

/// Precondition violated by a caller-supplied argument.
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Observed evidence has (numerically) zero likelihood under the model.
class DegenerateEvidence : public std::runtime_error {
public:
    DegenerateEvidence(const std::string& what, std::size_t event_index)
        : std::runtime_error(what), event_index_(event_index) {}

    std::size_t event_index() const noexcept { return event_index_; }

private:
    std::size_t event_index_;
};

/// A divided quantity Phi/P whose denominator vanishes.
class DegenerateDenominator : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Quadrature ran out of its evaluation budget.
class BudgetExceeded : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

namespace detail {
inline void require(bool cond, const char* msg) {
    if (!cond) throw InvalidArgument(msg);
}
inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidArgument(msg);
}
}  // namespace detail

}  // namespace hmmcredit
