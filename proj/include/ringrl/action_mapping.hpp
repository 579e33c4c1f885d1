#pragma once

#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ringrl/rng.hpp"

namespace ringrl {

// Placement of the discrete action space on the ring: action a sits at
// angles[permutation[a]]. The permutation is identity unless an ablation
// scrambles it at run start.
struct ActionMapping {
  int n_actions = 0;
  std::vector<double> angles;
  std::vector<int> permutation;

  static ActionMapping uniform(int n_actions) {
    if (n_actions < 1)
      throw std::invalid_argument("ActionMapping: n_actions must be positive");
    ActionMapping m;
    m.n_actions = n_actions;
    m.angles.resize(n_actions);
    m.permutation.resize(n_actions);
    for (int a = 0; a < n_actions; ++a) {
      m.angles[a] = 2.0 * std::numbers::pi * a / n_actions;
      m.permutation[a] = a;
    }
    return m;
  }

  double angle(int a) const {
    if (a < 0 || a >= n_actions)
      throw std::invalid_argument("ActionMapping::angle: action out of range");
    return angles[static_cast<std::size_t>(permutation[static_cast<std::size_t>(a)])];
  }
};

// Fisher-Yates reshuffle of the action placement; identity is a legal outcome.
inline ActionMapping permute_mapping(const ActionMapping& mapping, Rng& rng) {
  ActionMapping out = mapping;
  for (int i = out.n_actions - 1; i > 0; --i) {
    int j = rng.uniform_int(i + 1);
    std::swap(out.permutation[static_cast<std::size_t>(i)],
              out.permutation[static_cast<std::size_t>(j)]);
  }
  return out;
}

}  // namespace ringrl
