#ifndef MPD_ERRORS_H_
#define MPD_ERRORS_H_

#include <stdexcept>
#include <string>

namespace mpd {

// Non-finite input, broken invariant of a value type, or a shape mismatch.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A piecewise polynomial whose tail decreases without bound.
class UnboundedBelow : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Unreadable, malformed, or degenerate input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mpd

#endif  // MPD_ERRORS_H_
