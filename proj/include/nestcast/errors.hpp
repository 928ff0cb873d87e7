#ifndef NESTCAST_ERRORS_HPP
#define NESTCAST_ERRORS_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace nestcast {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid user configuration (bad fractions, too-short samples, bad flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of a function.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Segment or array index out of range.
class IndexError : public Error {
public:
    using Error::Error;
};

/// A variance that standardizes a statistic is zero or negative.
class DegeneracyError : public Error {
public:
    using Error::Error;
};

/// Gram matrix numerically rank deficient.  Carries the offending pivot and,
/// when raised from a recursive fit, the observation count at which it failed.
class SingularityError : public Error {
public:
    SingularityError(std::size_t pivot, std::optional<std::size_t> at = std::nullopt)
        : Error(make_message(pivot, at)), pivot_(pivot), at_(at) {}

    std::size_t pivot() const noexcept { return pivot_; }
    std::optional<std::size_t> at() const noexcept { return at_; }

    SingularityError with_position(std::size_t at) const { return SingularityError(pivot_, at); }

private:
    static std::string make_message(std::size_t pivot, std::optional<std::size_t> at) {
        std::string msg = "singular Gram matrix at pivot " + std::to_string(pivot);
        if (at) msg += " (t=" + std::to_string(*at) + ")";
        return msg;
    }

    std::size_t pivot_;
    std::optional<std::size_t> at_;
};

}  // namespace nestcast

#endif  // NESTCAST_ERRORS_HPP
