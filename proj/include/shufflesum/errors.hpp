#pragma once

#include <stdexcept>
#include <string>

namespace shufflesum {

/// Thrown when a calculator's stated precondition fails. The message names
/// the violated inequality so callers can surface it verbatim.
class precondition_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when an exact computation is requested for a model that has no
/// closed-form probability mass function.
class unsupported_model_error : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace shufflesum
