#ifndef EGP_ERRORS_HPP
#define EGP_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace egp {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : Error { using Error::Error; };
struct NotPsd : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };

struct ParseError : Error { using Error::Error; };
struct EmptyFile : Error { using Error::Error; };
struct NonMonotoneTime : Error { using Error::Error; };
struct NoUsableSeries : Error { using Error::Error; };
struct NonPositiveValue : Error { using Error::Error; };
struct PathTooShort : Error { using Error::Error; };

struct EmptyCorpus : Error { using Error::Error; };
struct EmptyGrid : Error { using Error::Error; };
struct TooFewPaths : Error { using Error::Error; };

struct MissingBaseline : Error { using Error::Error; };
struct IncompleteGrid : Error { using Error::Error; };
struct ContextTooShort : Error { using Error::Error; };

}  // namespace egp

#endif  // EGP_ERRORS_HPP
