#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ringrl/action_mapping.hpp"
#include "ringrl/blr.hpp"
#include "ringrl/errors.hpp"
#include "ringrl/features.hpp"
#include "ringrl/replay.hpp"
#include "ringrl/ring.hpp"
#include "ringrl/ring_rnn.hpp"
#include "ringrl/rng.hpp"

namespace ringrl {

// Constant Gaussian width used when uncertainty awareness is off.
inline constexpr double kConstantActionSigma = std::numbers::pi / 6.0;

enum class Variant {
  baseline,         // epsilon-greedy over posterior-mean Q
  ring,             // attractor policy, constant sigma
  ring_ua,          // attractor policy, Thompson-sampled mu/sigma
  ring_random_map,  // ring with a per-run permuted action placement
  rnn_ring,         // argmax over the recurrent ring layer output
  rnn_no_kernel,    // same with the circular kernels ablated
};

inline constexpr const char* variant_name(Variant v) {
  switch (v) {
    case Variant::baseline: return "baseline";
    case Variant::ring: return "ring";
    case Variant::ring_ua: return "ring-ua";
    case Variant::ring_random_map: return "ring-random-map";
    case Variant::rnn_ring: return "rnn-ring";
    case Variant::rnn_no_kernel: return "rnn-no-kernel";
  }
  return "unknown";
}

inline std::optional<Variant> variant_from_name(std::string_view name) {
  for (Variant v : {Variant::baseline, Variant::ring, Variant::ring_ua,
                    Variant::ring_random_map, Variant::rnn_ring, Variant::rnn_no_kernel})
    if (name == variant_name(v)) return v;
  return std::nullopt;
}

inline bool is_rnn_variant(Variant v) {
  return v == Variant::rnn_ring || v == Variant::rnn_no_kernel;
}

struct EpsilonSchedule {
  double start = 1.0;
  double end = 0.05;
  int decay_steps = 5000;

  double value(long step) const {
    if (decay_steps <= 0) return end;
    const double t = std::min(1.0, static_cast<double>(step) / decay_steps);
    return start + (end - start) * t;
  }
};

// lambda/tau/beta initial values for the recurrent variants; layer sizes come
// from the feature dimension and the action count.
struct RnnParams {
  double lambda_init = 2.0;
  double tau_init = 1.0;
  double beta_init = 1.0;
};

struct AgentConfig {
  double gamma = 0.99;
  EpsilonSchedule epsilon;  // baseline exploration only
  int replay_capacity = 10000;
  int batch_size = 32;
  double learning_rate = 0.0;  // 0: 1e-2 for tabular features, 1e-3 otherwise
  int target_sync_interval = 500;
  int blr_update_interval = 1000;
  int thompson_samples = 30;  // I of the sampled action statistics
  std::string features = "tabular";  // "tabular" | "perceptron"
  int hidden_width = 64;
  double prior_variance = 1.0;
  double noise_variance = 1.0;

  void validate() const {
    if (!(gamma >= 0.0 && gamma <= 1.0))
      throw std::invalid_argument("AgentConfig: gamma must be in [0, 1]");
    if (replay_capacity < 1 || batch_size < 1 || target_sync_interval < 1 ||
        blr_update_interval < 1)
      throw std::invalid_argument("AgentConfig: capacities and intervals must be positive");
    if (thompson_samples < 2)
      throw std::invalid_argument("AgentConfig: thompson_samples must be at least 2");
    if (features != "tabular" && features != "perceptron")
      throw std::invalid_argument("AgentConfig: features must be 'tabular' or 'perceptron'");
    if (hidden_width < 1)
      throw std::invalid_argument("AgentConfig: hidden_width must be positive");
    if (!(prior_variance > 0.0) || !(noise_variance > 0.0))
      throw std::invalid_argument("AgentConfig: variances must be positive");
    if (learning_rate < 0.0)
      throw std::invalid_argument("AgentConfig: learning_rate must be nonnegative");
  }

  double effective_learning_rate() const {
    if (learning_rate > 0.0) return learning_rate;
    return features == "tabular" ? 1e-2 : 1e-3;
  }
};

// Value-based agent: feature extractor plus either the BLR head (baseline and
// exogenous-ring variants) or the recurrent ring layer (rnn variants), with
// the experiment variant deciding the behavior policy.
class Agent {
 public:
  Agent(Variant variant, AgentConfig config, RingConfig ring_config, RnnParams rnn_params,
        const ActionMapping& mapping, int state_dim, std::uint64_t seed)
      : variant_(variant),
        cfg_(std::move(config)),
        ring_cfg_(ring_config),
        mapping_(mapping),
        n_actions_(mapping.n_actions),
        replay_(static_cast<std::size_t>(cfg_.replay_capacity)),
        rng_(seed) {
    cfg_.validate();
    ring_cfg_.validate();
    if (state_dim < 1) throw std::invalid_argument("Agent: state_dim must be positive");
    if (uses_ring_policy() && n_actions_ > ring_cfg_.n_excitatory)
      throw std::invalid_argument("Agent: more actions than excitatory neurons");

    if (cfg_.features == "tabular")
      features_ = std::make_unique<TabularFeatures>(state_dim);
    else
      features_ = std::make_unique<PerceptronFeatures>(state_dim, cfg_.hidden_width, rng_);
    target_features_ = features_->clone();

    if (variant_ == Variant::ring_random_map) mapping_ = permute_mapping(mapping_, rng_);
    if (uses_ring_policy()) kernels_ = build_kernels(ring_cfg_);

    if (is_rnn_variant(variant_)) {
      RingRnnConfig rnn_cfg;
      rnn_cfg.m_in = features_->feature_dim();
      rnn_cfg.n_hidden = n_actions_;
      rnn_cfg.lambda_init = rnn_params.lambda_init;
      rnn_cfg.tau_init = rnn_params.tau_init;
      rnn_cfg.beta_init = rnn_params.beta_init;
      rnn_cfg.ring_enabled = variant_ != Variant::rnn_no_kernel;
      rnn_.emplace(rnn_cfg, rng_);
      target_rnn_ = rnn_;
      hidden_ = Eigen::VectorXd::Zero(n_actions_);
      pending_h_prev_ = hidden_;
    } else {
      prior_ = BlrPrior{features_->feature_dim(), cfg_.prior_variance, cfg_.noise_variance};
      posterior_ = BlrPosterior::from_prior(prior_, n_actions_);
      target_posterior_ = posterior_;
    }
  }

  Variant variant() const { return variant_; }
  int n_actions() const { return n_actions_; }
  const ActionMapping& mapping() const { return mapping_; }
  const AgentConfig& config() const { return cfg_; }
  long step_count() const { return step_count_; }
  long no_winner_count() const { return no_winner_count_; }
  double last_loss() const { return last_loss_; }
  FeatureExtractor& features() { return *features_; }
  BlrPosterior& posterior() { return posterior_; }
  BlrPosterior& target_posterior() { return target_posterior_; }
  RingRnnLayer& rnn() { return rnn_.value(); }
  RingRnnLayer& target_rnn() { return target_rnn_.value(); }
  const Eigen::VectorXd& hidden() const { return hidden_; }
  Rng& rng() { return rng_; }

  void begin_episode() {
    if (is_rnn_variant(variant_)) {
      hidden_.setZero();
      pending_h_prev_.setZero();
    }
  }

  // Per-action posterior-mean Q at a state.
  Eigen::VectorXd q_values(const Eigen::VectorXd& state) const {
    const Eigen::VectorXd phi = features_->forward(state);
    Eigen::VectorXd q(n_actions_);
    for (int a = 0; a < n_actions_; ++a) q[a] = q_value(posterior_, a, phi);
    return q;
  }

  int select_action(const Eigen::VectorXd& state) {
    const Eigen::VectorXd phi = features_->forward(state);
    switch (variant_) {
      case Variant::baseline: {
        const double eps = cfg_.epsilon.value(step_count_);
        if (rng_.uniform() < eps) return rng_.uniform_int(n_actions_);
        Eigen::VectorXd q(n_actions_);
        for (int a = 0; a < n_actions_; ++a) q[a] = q_value(posterior_, a, phi);
        return argmax(q);
      }
      case Variant::ring:
      case Variant::ring_random_map: {
        Eigen::VectorXd q(n_actions_);
        for (int a = 0; a < n_actions_; ++a) q[a] = q_value(posterior_, a, phi);
        const Eigen::VectorXd sigmas =
            Eigen::VectorXd::Constant(n_actions_, kConstantActionSigma);
        return ring_select(q, sigmas);
      }
      case Variant::ring_ua: {
        const ActionStats stats =
            action_stats(posterior_, phi, cfg_.thompson_samples, rng_);
        return ring_select(stats.mu, stats.sigma);
      }
      case Variant::rnn_ring:
      case Variant::rnn_no_kernel: {
        // The attractor state advances on every step; epsilon only overrides
        // which action is executed.
        const auto out = rnn_->forward(phi, hidden_);
        pending_h_prev_ = hidden_;
        hidden_ = out.h;
        const double eps = cfg_.epsilon.value(step_count_);
        if (rng_.uniform() < eps) return rng_.uniform_int(n_actions_);
        return argmax(out.q);
      }
    }
    throw std::logic_error("Agent::select_action: unknown variant");
  }

  // Records the transition and runs the scheduled training machinery.
  void observe(const Eigen::VectorXd& s, int a, double r, const Eigen::VectorXd& s_next,
               bool done) {
    Transition t{s, a, r, s_next, done, {}};
    if (is_rnn_variant(variant_)) t.h_prev = pending_h_prev_;
    replay_.push(std::move(t));
    ++step_count_;
    if (replay_.size() >= static_cast<std::size_t>(cfg_.batch_size))
      last_loss_ = train_step(replay_.sample(cfg_.batch_size, rng_));
    if (!is_rnn_variant(variant_) && step_count_ % cfg_.blr_update_interval == 0)
      refresh_posterior();
    if (step_count_ % cfg_.target_sync_interval == 0) sync_target();
  }

  // y = r, or r + gamma * max_a' Q_target(s', a'). For recurrent variants the
  // caller supplies the target-side hidden state at s'.
  double td_target(double r, bool done, const Eigen::VectorXd& s_next,
                   const Eigen::VectorXd& h_at_next = {}) const {
    if (done) return r;
    if (is_rnn_variant(variant_)) {
      const Eigen::VectorXd phi_next = target_features_->forward(s_next);
      const Eigen::VectorXd h =
          h_at_next.size() == n_actions_ ? h_at_next : Eigen::VectorXd::Zero(n_actions_);
      const auto out = target_rnn_->forward(phi_next, h);
      return r + cfg_.gamma * out.q.maxCoeff();
    }
    const Eigen::VectorXd phi_next = target_features_->forward(s_next);
    double best = q_value(target_posterior_, 0, phi_next);
    for (int a = 1; a < n_actions_; ++a)
      best = std::max(best, q_value(target_posterior_, a, phi_next));
    return r + cfg_.gamma * best;
  }

  // One SGD step on the mean squared TD error over the batch. Throws
  // numerical_error on a non-finite loss, leaving all parameters untouched.
  double train_step(const std::vector<Transition>& batch) {
    if (batch.empty()) throw std::invalid_argument("Agent::train_step: empty batch");
    const double inv_b = 1.0 / static_cast<double>(batch.size());
    const double lr = cfg_.effective_learning_rate();
    double loss = 0.0;
    features_->zero_gradients();
    if (is_rnn_variant(variant_)) {
      RingRnnLayer::Gradients acc = rnn_->zero_gradients();
      for (const Transition& t : batch) {
        const Eigen::VectorXd h_prev = t.h_prev.size() == n_actions_
                                           ? t.h_prev
                                           : Eigen::VectorXd::Zero(n_actions_);
        const Eigen::VectorXd phi = features_->forward(t.s);
        const auto out = rnn_->forward(phi, h_prev);
        // Target-side hidden at s': the stored h_prev advanced through s.
        const auto target_step =
            target_rnn_->forward(target_features_->forward(t.s), h_prev);
        const double y = td_target(t.r, t.done, t.s_next, target_step.h);
        const double err = out.q[t.a] - y;
        loss += err * err;
        Eigen::VectorXd upstream = Eigen::VectorXd::Zero(n_actions_);
        upstream[t.a] = 2.0 * err * inv_b;
        const auto g = rnn_->backward(phi, h_prev, upstream);
        acc += g;
        features_->accumulate_gradient(t.s, g.phi);
      }
      loss *= inv_b;
      if (!std::isfinite(loss)) throw numerical_error("train_step: non-finite loss");
      rnn_->apply_gradients(acc, lr);
      features_->apply_gradients(lr);
      return loss;
    }
    for (const Transition& t : batch) {
      const Eigen::VectorXd phi = features_->forward(t.s);
      const double pred = q_value(posterior_, t.a, phi);
      const double y = td_target(t.r, t.done, t.s_next);
      const double err = pred - y;
      loss += err * err;
      if (features_->has_parameters())
        features_->accumulate_gradient(
            t.s, (2.0 * err * inv_b) * posterior_.actions[static_cast<std::size_t>(t.a)].mean);
    }
    loss *= inv_b;
    if (!std::isfinite(loss)) throw numerical_error("train_step: non-finite loss");
    features_->apply_gradients(lr);
    return loss;
  }

  // Recomputes the BLR posterior from the whole replay buffer against the
  // target head.
  void refresh_posterior() {
    const auto& data = replay_.storage();
    if (data.empty()) return;
    std::vector<std::pair<int, Eigen::VectorXd>> features;
    std::vector<double> targets;
    features.reserve(data.size());
    targets.reserve(data.size());
    for (const Transition& t : data) {
      features.emplace_back(t.a, features_->forward(t.s));
      targets.push_back(td_target(t.r, t.done, t.s_next));
    }
    posterior_ = blr_update(prior_, n_actions_, features, targets);
  }

  void sync_target() {
    target_features_->copy_parameters_from(*features_);
    if (is_rnn_variant(variant_))
      target_rnn_ = rnn_;
    else
      target_posterior_ = posterior_;
  }

 private:
  bool uses_ring_policy() const {
    return variant_ == Variant::ring || variant_ == Variant::ring_ua ||
           variant_ == Variant::ring_random_map;
  }

  static int argmax(const Eigen::VectorXd& values) {
    int best = 0;
    for (Eigen::Index i = 1; i < values.size(); ++i)
      if (values[i] > values[best]) best = static_cast<int>(i);
    return best;
  }

  // Encode, settle, decode; falls back to the plain argmax when the ring
  // carries no activity.
  int ring_select(const Eigen::VectorXd& q, const Eigen::VectorXd& sigmas) {
    const auto signals =
        encode_actions(std::span<const double>(q.data(), static_cast<std::size_t>(q.size())),
                       std::span<const double>(sigmas.data(), static_cast<std::size_t>(sigmas.size())),
                       mapping_);
    const Eigen::VectorXd input = gaussian_input(signals, ring_cfg_);
    const SettleResult settled = settle(RingState::zero(ring_cfg_), input, kernels_, ring_cfg_);
    try {
      return decode_action(settled.state, n_actions_);
    } catch (const no_winner_error&) {
      ++no_winner_count_;
      return argmax(q);
    }
  }

  Variant variant_;
  AgentConfig cfg_;
  RingConfig ring_cfg_;
  ActionMapping mapping_;
  int n_actions_;
  ReplayBuffer replay_;
  Rng rng_;
  std::unique_ptr<FeatureExtractor> features_;
  std::unique_ptr<FeatureExtractor> target_features_;
  BlrPrior prior_;
  BlrPosterior posterior_;
  BlrPosterior target_posterior_;
  std::optional<RingRnnLayer> rnn_;
  std::optional<RingRnnLayer> target_rnn_;
  RingKernels kernels_;
  Eigen::VectorXd hidden_;
  Eigen::VectorXd pending_h_prev_;
  long step_count_ = 0;
  long no_winner_count_ = 0;
  double last_loss_ = 0.0;
};

}  // namespace ringrl
