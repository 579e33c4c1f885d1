#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>

#include "ringrl/errors.hpp"
#include "ringrl/rng.hpp"

namespace ringrl {

enum class KernelKind { input_to_hidden, hidden_to_hidden };

struct RingRnnConfig {
  int m_in = 0;      // M, neurons in the preceding layer
  int n_hidden = 0;  // N, ring neurons (one per action)
  double lambda_init = 2.0;
  double tau_init = 1.0;
  double beta_init = 1.0;
  bool ring_enabled = true;

  void validate() const {
    if (m_in < 1 || n_hidden < 1)
      throw std::invalid_argument("RingRnnConfig: layer sizes must be positive");
    if (!(lambda_init > 0.0) || !(tau_init > 0.0))
      throw std::invalid_argument("RingRnnConfig: lambda and tau must be positive");
  }
};

// Recurrent ring layer: learnable base matrices modulated elementwise by
// exp(-d/lambda) circular-distance kernels, a 1/tau gate on the input term,
// tanh activation and a learnable output scale beta. lambda and tau are stored
// in log space so every gradient step keeps them positive. With ring_enabled
// false both kernels collapse to all-ones and the layer is a plain RNN.
class RingRnnLayer {
 public:
  RingRnnLayer(const RingRnnConfig& config, Rng& rng) {
    config.validate();
    m_in_ = config.m_in;
    n_hidden_ = config.n_hidden;
    ring_enabled_ = config.ring_enabled;
    log_lambda_ = std::log(config.lambda_init);
    log_tau_ = std::log(config.tau_init);
    beta_ = config.beta_init;
    base_ih_.resize(m_in_, n_hidden_);
    base_hh_.resize(n_hidden_, n_hidden_);
    const double ih_scale = 1.0 / std::sqrt(static_cast<double>(m_in_));
    const double hh_scale = 1.0 / std::sqrt(static_cast<double>(n_hidden_));
    for (int m = 0; m < m_in_; ++m)
      for (int n = 0; n < n_hidden_; ++n)
        base_ih_(m, n) = (2.0 * rng.uniform() - 1.0) * ih_scale;
    for (int j = 0; j < n_hidden_; ++j)
      for (int n = 0; n < n_hidden_; ++n)
        base_hh_(j, n) = (2.0 * rng.uniform() - 1.0) * hh_scale;
    build_distances();
    refresh_kernels();
  }

  int input_dim() const { return m_in_; }
  int hidden_dim() const { return n_hidden_; }
  double lambda() const { return std::exp(log_lambda_); }
  double tau() const { return std::exp(log_tau_); }
  double beta() const { return beta_; }
  bool ring_enabled() const { return ring_enabled_; }
  const Eigen::MatrixXd& base_ih() const { return base_ih_; }
  const Eigen::MatrixXd& base_hh() const { return base_hh_; }

  void set_base_ih(Eigen::MatrixXd w) {
    if (w.rows() != m_in_ || w.cols() != n_hidden_)
      throw std::invalid_argument("RingRnnLayer: base_ih shape mismatch");
    base_ih_ = std::move(w);
  }
  void set_base_hh(Eigen::MatrixXd w) {
    if (w.rows() != n_hidden_ || w.cols() != n_hidden_)
      throw std::invalid_argument("RingRnnLayer: base_hh shape mismatch");
    base_hh_ = std::move(w);
  }
  void set_lambda(double value) {
    if (!(value > 0.0)) throw std::invalid_argument("RingRnnLayer: lambda must be positive");
    log_lambda_ = std::log(value);
    refresh_kernels();
  }
  void set_tau(double value) {
    if (!(value > 0.0)) throw std::invalid_argument("RingRnnLayer: tau must be positive");
    log_tau_ = std::log(value);
  }
  void set_beta(double value) { beta_ = value; }

  // Distance-decay kernel, or all-ones when the ring structure is ablated.
  Eigen::MatrixXd circular_kernel(KernelKind kind) const {
    const Eigen::MatrixXd& d =
        kind == KernelKind::input_to_hidden ? dist_ih_ : dist_hh_;
    if (!ring_enabled_) return Eigen::MatrixXd::Ones(d.rows(), d.cols());
    return (-d / lambda()).array().exp();
  }

  struct Output {
    Eigen::VectorXd q;  // beta * h
    Eigen::VectorXd h;  // new attractor state, components in [-1, 1]
  };

  // h_t = tanh((1/tau) phi^T W_ih + h_prev^T W_hh), q = beta * h_t.
  Output forward(const Eigen::VectorXd& phi, const Eigen::VectorXd& h_prev) const {
    check_inputs(phi, h_prev);
    const Eigen::VectorXd pre = (kernel_ih_.cwiseProduct(base_ih_).transpose() * phi) / tau() +
                                kernel_hh_.cwiseProduct(base_hh_).transpose() * h_prev;
    Output out;
    out.h = pre.array().tanh();
    out.q = beta_ * out.h;
    return out;
  }

  struct Gradients {
    Eigen::MatrixXd base_ih;
    Eigen::MatrixXd base_hh;
    double lambda = 0.0;
    double tau = 0.0;
    double beta = 0.0;
    Eigen::VectorXd phi;

    Gradients& operator+=(const Gradients& other) {
      base_ih += other.base_ih;
      base_hh += other.base_hh;
      lambda += other.lambda;
      tau += other.tau;
      beta += other.beta;
      phi += other.phi;
      return *this;
    }
  };

  Gradients zero_gradients() const {
    Gradients g;
    g.base_ih = Eigen::MatrixXd::Zero(m_in_, n_hidden_);
    g.base_hh = Eigen::MatrixXd::Zero(n_hidden_, n_hidden_);
    g.phi = Eigen::VectorXd::Zero(m_in_);
    return g;
  }

  // Exact gradients of upstream^T q with h_prev treated as a constant
  // (truncation length 1). lambda picks up the chain through exp(-d/lambda).
  Gradients backward(const Eigen::VectorXd& phi, const Eigen::VectorXd& h_prev,
                     const Eigen::VectorXd& upstream) const {
    check_inputs(phi, h_prev);
    if (upstream.size() != n_hidden_)
      throw std::invalid_argument("RingRnnLayer::backward: upstream size mismatch");
    const double tau_v = tau();
    const Eigen::MatrixXd w_ih = kernel_ih_.cwiseProduct(base_ih_);
    const Eigen::MatrixXd w_hh = kernel_hh_.cwiseProduct(base_hh_);
    const Eigen::VectorXd input_term = w_ih.transpose() * phi;  // before 1/tau
    const Eigen::VectorXd pre = input_term / tau_v + w_hh.transpose() * h_prev;
    const Eigen::VectorXd h = pre.array().tanh();
    const Eigen::VectorXd delta =
        (beta_ * upstream.array() * (1.0 - h.array().square())).matrix();

    Gradients g;
    g.beta = upstream.dot(h);
    g.base_ih = (phi * delta.transpose()).cwiseProduct(kernel_ih_) / tau_v;
    g.base_hh = (h_prev * delta.transpose()).cwiseProduct(kernel_hh_);
    g.phi = (w_ih * delta) / tau_v;
    g.tau = -input_term.dot(delta) / (tau_v * tau_v);
    if (ring_enabled_) {
      const double lam = lambda();
      const Eigen::MatrixXd dw_ih = w_ih.cwiseProduct(dist_ih_);
      const Eigen::MatrixXd dw_hh = w_hh.cwiseProduct(dist_hh_);
      g.lambda = (phi.dot(dw_ih * delta) / tau_v + h_prev.dot(dw_hh * delta)) / (lam * lam);
    }
    return g;
  }

  // SGD step; lambda and tau move in log space (chain rule d/dlog = value * d/dvalue).
  void apply_gradients(const Gradients& g, double learning_rate) {
    base_ih_ -= learning_rate * g.base_ih;
    base_hh_ -= learning_rate * g.base_hh;
    beta_ -= learning_rate * g.beta;
    log_lambda_ -= learning_rate * g.lambda * lambda();
    log_tau_ -= learning_rate * g.tau * tau();
    refresh_kernels();
  }

 private:
  void build_distances() {
    dist_hh_.resize(n_hidden_, n_hidden_);
    for (int j = 0; j < n_hidden_; ++j) {
      for (int n = 0; n < n_hidden_; ++n) {
        const int diff = std::abs(j - n);
        dist_hh_(j, n) = std::min(diff, n_hidden_ - diff);
      }
    }
    // Ring position n projected into previous-layer coordinates, wrapped over M.
    dist_ih_.resize(m_in_, n_hidden_);
    const double stride = static_cast<double>(m_in_) / n_hidden_;
    for (int m = 0; m < m_in_; ++m) {
      for (int n = 0; n < n_hidden_; ++n) {
        const double diff = std::abs(m - n * stride);
        dist_ih_(m, n) = std::min(diff, m_in_ - diff);
      }
    }
  }

  void refresh_kernels() {
    if (ring_enabled_) {
      const double lam = lambda();
      kernel_ih_ = (-dist_ih_ / lam).array().exp();
      kernel_hh_ = (-dist_hh_ / lam).array().exp();
    } else {
      kernel_ih_ = Eigen::MatrixXd::Ones(m_in_, n_hidden_);
      kernel_hh_ = Eigen::MatrixXd::Ones(n_hidden_, n_hidden_);
    }
  }

  void check_inputs(const Eigen::VectorXd& phi, const Eigen::VectorXd& h_prev) const {
    if (phi.size() != m_in_ || h_prev.size() != n_hidden_)
      throw std::invalid_argument("RingRnnLayer: input dimension mismatch");
    if (!phi.allFinite() || !h_prev.allFinite())
      throw numerical_error("RingRnnLayer: non-finite inputs");
  }

  int m_in_ = 0;
  int n_hidden_ = 0;
  Eigen::MatrixXd base_ih_;
  Eigen::MatrixXd base_hh_;
  double log_lambda_ = 0.0;
  double log_tau_ = 0.0;
  double beta_ = 1.0;
  bool ring_enabled_ = true;
  Eigen::MatrixXd dist_ih_;
  Eigen::MatrixXd dist_hh_;
  Eigen::MatrixXd kernel_ih_;
  Eigen::MatrixXd kernel_hh_;
};

}  // namespace ringrl
