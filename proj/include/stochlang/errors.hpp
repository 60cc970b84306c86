#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace stochlang {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed expression/automaton text. `offset` is a byte position into the
// input, usable for caret diagnostics.
struct ParseError : Error {
    ParseError(const std::string& what, std::size_t offset)
        : Error(what + " (at byte " + std::to_string(offset) + ")"), offset(offset) {}
    std::size_t offset;
};

struct NormalizationError : Error {
    using Error::Error;
};

// An exhaustive pass would enumerate more words than the configured budget
// allows (or a size computation overflowed).
struct BudgetExceeded : Error {
    using Error::Error;
};

struct EmptySampleError : Error {
    using Error::Error;
};

struct AlphabetError : Error {
    using Error::Error;
};

struct SingularSystemError : Error {
    using Error::Error;
};

struct WeightError : Error {
    using Error::Error;
};

// A replay sample source ran out of recorded words.
struct ExhaustedSource : Error {
    using Error::Error;
};

}  // namespace stochlang
