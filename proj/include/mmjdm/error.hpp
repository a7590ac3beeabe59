#pragma once

#include <stdexcept>
#include <string>

namespace mmjdm
{

/// Bad input: a parameter, file, or argument violates a documented invariant.
class ValidationError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// An estimation stage could not produce a result (empty mixture component,
/// stalled bridge sampler, unidentifiable parameter).
class NumericalError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

} // namespace mmjdm
