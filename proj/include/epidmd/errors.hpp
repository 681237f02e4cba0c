#pragma once

#include <stdexcept>
#include <string>

namespace epidmd {

// Base class for all library errors. Subclasses carry the failure
// category in the type so callers can catch selectively.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SeriesTooShort : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct UnknownNode : Error {
    using Error::Error;
};
struct ParseError : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct ZeroMatrix : Error {
    using Error::Error;
};
struct DegenerateEigenproblem : Error {
    using Error::Error;
};
struct SplitTooSmall : Error {
    using Error::Error;
};
struct InfectExceedsPopulation : Error {
    using Error::Error;
};
struct ConfigError : Error {
    using Error::Error;
};

} // namespace epidmd
