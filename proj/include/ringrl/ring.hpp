#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ringrl/action_mapping.hpp"
#include "ringrl/errors.hpp"

namespace ringrl {

// Narrowest admissible Gaussian width (radians); keeps 1/sqrt(2*pi*sigma)
// bounded when a posterior variance collapses.
inline constexpr double kSigmaMin = 0.05;

// Amplitude assigned to the worst action after the shift-to-positive step, so
// every action keeps an excitatory footprint on the ring.
inline constexpr double kAmplitudeFloor = 0.1;

struct RingConfig {
  int n_excitatory = 64;
  double tau = 1.0;
  double dt_ratio = 0.1;                 // Euler step as a fraction of tau
  double threshold_h = 0.0;              // offset in f(x) = max(0, x + h)
  double excitatory_kernel_width = 1.5;  // scale of exp(-(d/width)^2)
  double inhibitory_gain = 2.0;
  double inhibitory_self_gain = 0.5;
  double excitatory_to_inhibitory_gain = 2.0;
  double settle_tolerance = 1e-8;
  int settle_max_steps = 4000;

  void validate() const {
    if (n_excitatory < 2)
      throw std::invalid_argument("RingConfig: n_excitatory must be >= 2");
    if (!(tau > 0.0)) throw std::invalid_argument("RingConfig: tau must be positive");
    if (!(dt_ratio > 0.0) || dt_ratio > 1.0)
      throw std::invalid_argument("RingConfig: dt_ratio must be in (0, 1]");
    if (!(excitatory_kernel_width > 0.0))
      throw std::invalid_argument("RingConfig: excitatory_kernel_width must be positive");
    if (!(inhibitory_gain > 0.0) || !(inhibitory_self_gain > 0.0) ||
        !(excitatory_to_inhibitory_gain > 0.0))
      throw std::invalid_argument("RingConfig: gains must be positive");
    if (!(settle_tolerance > 0.0))
      throw std::invalid_argument("RingConfig: settle_tolerance must be positive");
    if (settle_max_steps < 1)
      throw std::invalid_argument("RingConfig: settle_max_steps must be positive");
  }
};

struct RingState {
  Eigen::VectorXd v;  // excitatory activations
  double u = 0.0;     // shared inhibitory activation

  static RingState zero(const RingConfig& config) {
    return RingState{Eigen::VectorXd::Zero(config.n_excitatory), 0.0};
  }
};

// One Gaussian bump of drive on the ring.
struct InputSignal {
  double amplitude = 0.0;   // K
  double center = 0.0;      // mu, radians
  double width = kSigmaMin; // sigma, radians
};

struct RingKernels {
  Eigen::MatrixXd w_ee;  // excitatory -> excitatory, symmetric circulant
  Eigen::VectorXd w_ie;  // inhibitory -> excitatory, strictly negative
  Eigen::VectorXd w_ei;  // excitatory -> inhibitory, nonnegative
  double w_ii = 0.0;     // self-inhibition, strictly negative
};

inline int circular_distance(int m, int n, int ring_size) {
  if (ring_size < 1 || m < 0 || n < 0 || m >= ring_size || n >= ring_size)
    throw std::invalid_argument("circular_distance: index out of range");
  const int diff = std::abs(m - n);
  return std::min(diff, ring_size - diff);
}

// Signed shortest rotation taking b to a, in [-pi, pi].
inline double angular_difference(double a, double b) {
  return std::remainder(a - b, 2.0 * std::numbers::pi);
}

inline RingKernels build_kernels(const RingConfig& config) {
  config.validate();
  const int n = config.n_excitatory;
  RingKernels k;
  k.w_ee.resize(n, n);
  for (int m = 0; m < n; ++m) {
    for (int j = 0; j < n; ++j) {
      const double d = circular_distance(m, j, n) / config.excitatory_kernel_width;
      k.w_ee(m, j) = std::exp(-d * d);
    }
  }
  // The single inhibitory neuron sits at unit distance from every excitatory
  // neuron, so its couplings are uniform e^{-1} scaled by the gains.
  const double unit = std::exp(-1.0);
  k.w_ie = Eigen::VectorXd::Constant(n, -config.inhibitory_gain * unit);
  k.w_ei = Eigen::VectorXd::Constant(n, config.excitatory_to_inhibitory_gain * unit);
  k.w_ii = -config.inhibitory_self_gain;
  return k;
}

// Total drive per neuron as a sum of Gaussians; the 1/sqrt(2*pi*sigma)
// normalization keeps sigma inside the root.
inline Eigen::VectorXd gaussian_input(std::span<const InputSignal> signals,
                                      const RingConfig& config) {
  config.validate();
  const int n = config.n_excitatory;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  for (const InputSignal& s : signals) {
    if (!(s.width >= kSigmaMin))
      throw std::invalid_argument("gaussian_input: signal width below sigma floor");
    const double scale = s.amplitude / std::sqrt(2.0 * std::numbers::pi * s.width);
    for (int i = 0; i < n; ++i) {
      const double alpha = 2.0 * std::numbers::pi * i / n;
      const double delta = angular_difference(alpha, s.center);
      x[i] += scale * std::exp(-0.5 * delta * delta / (s.width * s.width));
    }
  }
  return x;
}

// One explicit Euler step of both populations. Synchronous update: both read
// the pre-step state.
inline RingState step_dynamics(const RingState& state, const Eigen::VectorXd& input,
                               const RingKernels& kernels, const RingConfig& config) {
  const int n = config.n_excitatory;
  if (state.v.size() != n || input.size() != n)
    throw std::invalid_argument("step_dynamics: dimension mismatch");
  if (!state.v.allFinite() || !std::isfinite(state.u) || !input.allFinite())
    throw numerical_error("step_dynamics: non-finite state or input");

  const double dt = config.dt_ratio;  // dt expressed in units of tau
  const double h = config.threshold_h;
  const auto relu = [h](double x) { return std::max(0.0, x + h); };

  const Eigen::VectorXd drive = kernels.w_ee * state.v + input + kernels.w_ie * state.u;
  RingState next;
  next.v = state.v + dt * (drive.unaryExpr(relu) - state.v);
  next.u = state.u + dt * (relu(kernels.w_ii * state.u + kernels.w_ei.dot(state.v)) - state.u);
  if (!next.v.allFinite() || !std::isfinite(next.u))
    throw numerical_error("step_dynamics: dynamics diverged to non-finite values");
  return next;
}

struct SettleResult {
  RingState state;
  int steps = 0;
  bool converged = false;
};

// Iterates the dynamics until the largest excitatory change falls under the
// tolerance or the step budget runs out.
inline SettleResult settle(RingState state, const Eigen::VectorXd& input,
                           const RingKernels& kernels, const RingConfig& config) {
  for (int i = 1; i <= config.settle_max_steps; ++i) {
    RingState next = step_dynamics(state, input, kernels, config);
    const double delta = (next.v - state.v).cwiseAbs().maxCoeff();
    state = std::move(next);
    if (delta < config.settle_tolerance) return {std::move(state), i, true};
  }
  return {std::move(state), config.settle_max_steps, false};
}

// Bump position to action index: round(argmax * A / N) with wraparound, ties
// in the argmax broken toward the lowest index.
inline int decode_action(const RingState& state, int n_actions) {
  const int n = static_cast<int>(state.v.size());
  if (n_actions < 1 || n_actions > n)
    throw std::invalid_argument("decode_action: n_actions must be in [1, N]");
  int best = 0;
  for (int i = 1; i < n; ++i)
    if (state.v[i] > state.v[best]) best = i;
  if (!(state.v[best] > 0.0))
    throw no_winner_error("decode_action: ring settled to zero activity");
  const long idx = std::lround(static_cast<double>(best) * n_actions / n);
  return static_cast<int>(idx % n_actions);
}

// Q-values to ring drive: amplitudes are shifted so the worst action sits at
// the floor (order preserved, inputs stay excitatory), centers come from the
// action mapping, widths are clamped at the sigma floor.
inline std::vector<InputSignal> encode_actions(std::span<const double> q_values,
                                               std::span<const double> sigmas,
                                               const ActionMapping& mapping) {
  if (q_values.size() != sigmas.size() ||
      static_cast<int>(q_values.size()) != mapping.n_actions)
    throw std::invalid_argument("encode_actions: q_values, sigmas and mapping must agree");
  const double q_min = *std::min_element(q_values.begin(), q_values.end());
  std::vector<InputSignal> signals(q_values.size());
  for (int a = 0; a < mapping.n_actions; ++a) {
    signals[static_cast<std::size_t>(a)] = InputSignal{
        q_values[static_cast<std::size_t>(a)] - q_min + kAmplitudeFloor,
        mapping.angle(a),
        std::max(sigmas[static_cast<std::size_t>(a)], kSigmaMin)};
  }
  return signals;
}

}  // namespace ringrl
