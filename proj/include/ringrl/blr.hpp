#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ringrl/errors.hpp"
#include "ringrl/rng.hpp"

namespace ringrl {

struct BlrPrior {
  int weight_dim = 1;            // feature dimension F
  double prior_variance = 1.0;   // isotropic prior on the weights
  double noise_variance = 1.0;   // observation noise of the targets

  void validate() const {
    if (weight_dim < 1)
      throw std::invalid_argument("BlrPrior: weight_dim must be positive");
    if (!(prior_variance > 0.0) || !(noise_variance > 0.0))
      throw std::invalid_argument("BlrPrior: variances must be strictly positive");
  }
};

// Factor B with B * B^T = cov. LLT for the SPD case; LDLT fallback admits the
// positive-semidefinite boundary, where sampling collapses onto the mean.
inline Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& cov) {
  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() == Eigen::Success) return llt.matrixL();
  Eigen::LDLT<Eigen::MatrixXd> ldlt(cov);
  if (ldlt.info() != Eigen::Success)
    throw numerical_error("covariance_factor: factorization failed");
  Eigen::VectorXd d = ldlt.vectorD();
  const double scale = std::max(1.0, d.cwiseAbs().maxCoeff());
  if (d.minCoeff() < -1e-10 * scale)
    throw numerical_error("covariance_factor: matrix is not positive semidefinite");
  Eigen::MatrixXd b = ldlt.matrixL();
  b = ldlt.transpositionsP().transpose() * b;
  return b * d.cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

// Gaussian posterior over one action's output weights; the factor of the
// covariance is cached for sampling.
struct ActionPosterior {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd sample_factor;
};

struct BlrPosterior {
  BlrPrior prior;
  std::vector<ActionPosterior> actions;

  static BlrPosterior from_prior(const BlrPrior& prior, int n_actions) {
    prior.validate();
    if (n_actions < 1)
      throw std::invalid_argument("BlrPosterior: n_actions must be positive");
    const int f = prior.weight_dim;
    BlrPosterior post;
    post.prior = prior;
    ActionPosterior base;
    base.mean = Eigen::VectorXd::Zero(f);
    base.covariance = prior.prior_variance * Eigen::MatrixXd::Identity(f, f);
    base.sample_factor = std::sqrt(prior.prior_variance) * Eigen::MatrixXd::Identity(f, f);
    post.actions.assign(static_cast<std::size_t>(n_actions), base);
    return post;
  }

  int n_actions() const { return static_cast<int>(actions.size()); }
};

// Batch conjugate update per action:
//   Sigma_a = (X_a^T X_a / noise + I / prior)^{-1},  m_a = Sigma_a X_a^T y_a / noise.
// Actions with no observations keep the prior.
inline BlrPosterior blr_update(const BlrPrior& prior, int n_actions,
                               const std::vector<std::pair<int, Eigen::VectorXd>>& features,
                               const std::vector<double>& targets) {
  prior.validate();
  if (features.size() != targets.size())
    throw std::invalid_argument("blr_update: features and targets must align");
  const int f = prior.weight_dim;
  std::vector<Eigen::MatrixXd> xtx(static_cast<std::size_t>(n_actions),
                                   Eigen::MatrixXd::Zero(f, f));
  std::vector<Eigen::VectorXd> xty(static_cast<std::size_t>(n_actions),
                                   Eigen::VectorXd::Zero(f));
  std::vector<bool> seen(static_cast<std::size_t>(n_actions), false);
  for (std::size_t i = 0; i < features.size(); ++i) {
    const auto& [a, phi] = features[i];
    if (a < 0 || a >= n_actions)
      throw std::invalid_argument("blr_update: action index out of range");
    if (phi.size() != f)
      throw std::invalid_argument("blr_update: feature dimension mismatch");
    const auto ai = static_cast<std::size_t>(a);
    xtx[ai].noalias() += phi * phi.transpose();
    xty[ai].noalias() += phi * targets[i];
    seen[ai] = true;
  }

  BlrPosterior post = BlrPosterior::from_prior(prior, n_actions);
  const Eigen::MatrixXd identity = Eigen::MatrixXd::Identity(f, f);
  for (int a = 0; a < n_actions; ++a) {
    const auto ai = static_cast<std::size_t>(a);
    if (!seen[ai]) continue;
    Eigen::MatrixXd precision =
        xtx[ai] / prior.noise_variance + identity / prior.prior_variance;
    Eigen::LLT<Eigen::MatrixXd> llt(precision);
    if (llt.info() != Eigen::Success) {
      precision.diagonal().array() += 1e-8;  // jitter retry
      llt.compute(precision);
      if (llt.info() != Eigen::Success)
        throw numerical_error("blr_update: posterior precision is not SPD");
    }
    Eigen::MatrixXd cov = llt.solve(identity);
    cov = 0.5 * (cov + cov.transpose().eval());
    post.actions[ai].covariance = cov;
    post.actions[ai].mean = cov * (xty[ai] / prior.noise_variance);
    post.actions[ai].sample_factor = covariance_factor(cov);
  }
  return post;
}

inline const ActionPosterior& posterior_for(const BlrPosterior& posterior, int action) {
  if (action < 0 || action >= posterior.n_actions())
    throw std::invalid_argument("BlrPosterior: action index out of range");
  return posterior.actions[static_cast<std::size_t>(action)];
}

// One draw w ~ N(m_a, Sigma_a) via the cached factor.
inline Eigen::VectorXd thompson_sample(const BlrPosterior& posterior, int action, Rng& rng) {
  const ActionPosterior& p = posterior_for(posterior, action);
  Eigen::VectorXd z(p.mean.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return p.mean + p.sample_factor * z;
}

struct ActionStats {
  Eigen::VectorXd mu;     // per-action sampled Q mean
  Eigen::VectorXd sigma;  // per-action sampled Q standard deviation
};

// Finite-sample mean and unbiased variance (divisor I-1) of w_{a,i}^T phi over
// I Thompson draws per action.
inline ActionStats action_stats(const BlrPosterior& posterior, const Eigen::VectorXd& phi,
                                int n_samples, Rng& rng) {
  if (n_samples < 2)
    throw std::invalid_argument("action_stats: need at least two samples");
  if (phi.size() != posterior.prior.weight_dim)
    throw std::invalid_argument("action_stats: feature dimension mismatch");
  const int a_count = posterior.n_actions();
  ActionStats stats{Eigen::VectorXd::Zero(a_count), Eigen::VectorXd::Zero(a_count)};
  Eigen::VectorXd qs(n_samples);
  for (int a = 0; a < a_count; ++a) {
    for (int i = 0; i < n_samples; ++i)
      qs[i] = thompson_sample(posterior, a, rng).dot(phi);
    const double mu = qs.mean();
    const double var = (qs.array() - mu).square().sum() / (n_samples - 1);
    stats.mu[a] = mu;
    stats.sigma[a] = std::sqrt(std::max(0.0, var));
  }
  return stats;
}

// Posterior-mean action value m_a^T phi.
inline double q_value(const BlrPosterior& posterior, int action, const Eigen::VectorXd& phi) {
  const ActionPosterior& p = posterior_for(posterior, action);
  if (phi.size() != p.mean.size())
    throw std::invalid_argument("q_value: feature dimension mismatch");
  return p.mean.dot(phi);
}

}  // namespace ringrl
