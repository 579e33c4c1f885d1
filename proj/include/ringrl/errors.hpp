#pragma once

#include <stdexcept>

namespace ringrl {

// Non-finite values or failed factorizations inside numeric routines.
struct numerical_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// decode_action found no active neuron; callers fall back to a plain argmax.
struct no_winner_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace ringrl
