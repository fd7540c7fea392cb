#pragma once

#include <stdexcept>
#include <string>

namespace amplify {

/// Parameters that cannot describe a runnable experiment.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A length or index outside the operand it addresses.
class RangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed text input (fixtures, cache files, transcripts, records).
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An exhaustive computation whose state space exceeds its configured bound.
class RefusedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace amplify
