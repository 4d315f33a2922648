#pragma once

#include <stdexcept>
#include <string>

namespace mldf {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Malformed input text (ARFF/CSV/XML/model files); message carries a line
// number when one is known.
struct ParseError : Error {
    using Error::Error;
};

// Input is well-formed but violates a structural contract (binary labels,
// duplicate label names, empty data section).
struct SchemaError : Error {
    using Error::Error;
};

struct ArgumentError : Error {
    using Error::Error;
};

// A measure has no defined value on the given input (every instance or
// label excluded as degenerate).
struct UndefinedMeasureError : Error {
    using Error::Error;
};

struct ConfigError : Error {
    using Error::Error;
};

struct DataError : Error {
    using Error::Error;
};

// Model file carries a format version this build does not understand.
struct VersionError : Error {
    using Error::Error;
};

}  // namespace mldf
