#ifndef FLEX_ERRORS_HPP
#define FLEX_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace flex {

// Bad input data (schema violations, negative costs, shape mismatches).
// `field` names the offending entry so CLI messages can point at it.
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Solver did not reach a certified optimum (iteration cap, non-finite loss).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace flex

#endif
