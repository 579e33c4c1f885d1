#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <random>
#include <vector>

#include "blr_oracle.hpp"
#include "ringrl/blr.hpp"
#include "ringrl/rng.hpp"

using namespace ringrl;
using ringrl::test::sequential_blr_oracle;

TEST_CASE("blr_update with no observations keeps the prior") {
  const BlrPrior prior{3, 2.0, 0.5};
  const auto post = blr_update(prior, 4, {}, {});
  REQUIRE(post.n_actions() == 4);
  for (const auto& p : post.actions) {
    CHECK(p.mean.cwiseAbs().maxCoeff() == 0.0);
    CHECK((p.covariance - 2.0 * Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("blr_update scalar hand example") {
  const BlrPrior prior{1, 1.0, 1.0};
  std::vector<std::pair<int, Eigen::VectorXd>> features;
  features.emplace_back(0, Eigen::VectorXd::Constant(1, 1.0));
  const std::vector<double> targets{1.0};
  const auto post = blr_update(prior, 2, features, targets);
  CHECK(post.actions[0].mean[0] == Approx(0.5).epsilon(1e-14));
  CHECK(post.actions[0].covariance(0, 0) == Approx(0.5).epsilon(1e-14));
  // The untouched action keeps the prior.
  CHECK(post.actions[1].mean[0] == 0.0);
  CHECK(post.actions[1].covariance(0, 0) == 1.0);
}

TEST_CASE("blr_update concentrates on the least-squares solution") {
  const BlrPrior prior{1, 1.0, 1.0};
  std::vector<std::pair<int, Eigen::VectorXd>> features;
  std::vector<double> targets;
  for (int i = 0; i < 10000; ++i) {
    features.emplace_back(0, Eigen::VectorXd::Constant(1, 1.0));
    targets.push_back(2.0);
  }
  const auto post = blr_update(prior, 1, features, targets);
  CHECK(post.actions[0].mean[0] == Approx(2.0).margin(1e-2));
  CHECK(post.actions[0].covariance(0, 0) < 1e-3);
}

TEST_CASE("blr_update matches the sequential oracle on random instances") {
  Rng rng(99);
  for (int trial = 0; trial < 30; ++trial) {
    const int f = 1 + rng.uniform_int(5);
    const BlrPrior prior{f, 0.3 + rng.uniform() * 3.0, 0.2 + rng.uniform() * 2.0};
    const int count = 1 + rng.uniform_int(40);
    std::vector<std::pair<int, Eigen::VectorXd>> features;
    std::vector<double> targets;
    std::vector<Eigen::VectorXd> xs;
    std::vector<double> ys;
    for (int i = 0; i < count; ++i) {
      Eigen::VectorXd x(f);
      for (int k = 0; k < f; ++k) x[k] = rng.normal();
      const double y = rng.normal() * 2.0;
      features.emplace_back(0, x);
      targets.push_back(y);
      xs.push_back(x);
      ys.push_back(y);
    }
    const auto post = blr_update(prior, 1, features, targets);
    const auto oracle = sequential_blr_oracle(prior, xs, ys);
    CHECK((post.actions[0].mean - oracle.mean).cwiseAbs().maxCoeff() < 1e-8);
    CHECK((post.actions[0].covariance - oracle.cov).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("blr_update is order-invariant and contracts the prior") {
  Rng rng(4);
  const int f = 4;
  const BlrPrior prior{f, 1.5, 0.8};
  std::vector<std::pair<int, Eigen::VectorXd>> features;
  std::vector<double> targets;
  for (int i = 0; i < 25; ++i) {
    Eigen::VectorXd x(f);
    for (int k = 0; k < f; ++k) x[k] = rng.normal();
    features.emplace_back(rng.uniform_int(2), x);
    targets.push_back(rng.normal());
  }
  const auto post = blr_update(prior, 2, features, targets);

  SECTION("permuted observations give the same posterior") {
    std::vector<std::size_t> order(features.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::shuffle(order.begin(), order.end(), rng.engine());
    std::vector<std::pair<int, Eigen::VectorXd>> f2;
    std::vector<double> t2;
    for (std::size_t i : order) {
      f2.push_back(features[i]);
      t2.push_back(targets[i]);
    }
    const auto post2 = blr_update(prior, 2, f2, t2);
    for (int a = 0; a < 2; ++a) {
      CHECK((post.actions[a].mean - post2.actions[a].mean).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((post.actions[a].covariance - post2.actions[a].covariance).cwiseAbs().maxCoeff() <
            1e-12);
    }
  }

  SECTION("covariance stays SPD with eigenvalues at most the prior variance") {
    for (const auto& p : post.actions) {
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(p.covariance);
      CHECK(eig.eigenvalues().minCoeff() > 0.0);
      CHECK(eig.eigenvalues().maxCoeff() <= prior.prior_variance + 1e-12);
    }
  }

  SECTION("misaligned features and targets are rejected") {
    std::vector<double> short_targets(targets.begin(), targets.end() - 1);
    CHECK_THROWS_AS(blr_update(prior, 2, features, short_targets), std::invalid_argument);
  }
}

TEST_CASE("thompson_sample determinism and degenerate covariance") {
  const BlrPrior prior{2, 1.0, 1.0};
  auto post = BlrPosterior::from_prior(prior, 1);

  SECTION("zero covariance returns the mean exactly") {
    post.actions[0].mean << 1.5, -2.0;
    post.actions[0].covariance.setZero();
    post.actions[0].sample_factor = covariance_factor(post.actions[0].covariance);
    Rng rng(1);
    const Eigen::VectorXd w = thompson_sample(post, 0, rng);
    CHECK(w[0] == 1.5);
    CHECK(w[1] == -2.0);
  }

  SECTION("fixed seed reproduces the sample stream") {
    Rng a(42), b(42);
    for (int i = 0; i < 10; ++i) {
      const Eigen::VectorXd wa = thompson_sample(post, 0, a);
      const Eigen::VectorXd wb = thompson_sample(post, 0, b);
      CHECK(wa == wb);
    }
  }

  SECTION("sample mean concentrates on the posterior mean") {
    // Non-trivial posterior from a few observations.
    std::vector<std::pair<int, Eigen::VectorXd>> features;
    std::vector<double> targets;
    Rng data_rng(7);
    for (int i = 0; i < 12; ++i) {
      Eigen::VectorXd x(2);
      x << data_rng.normal(), data_rng.normal();
      features.emplace_back(0, x);
      targets.push_back(data_rng.normal());
    }
    const auto fit = blr_update(prior, 1, features, targets);
    const int draws = 10000;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(2);
    Rng rng(2024);
    for (int i = 0; i < draws; ++i) sum += thompson_sample(fit, 0, rng);
    const Eigen::VectorXd sample_mean = sum / draws;
    for (int k = 0; k < 2; ++k) {
      const double sd = std::sqrt(fit.actions[0].covariance(k, k));
      CHECK(std::abs(sample_mean[k] - fit.actions[0].mean[k]) < 3.0 * sd / 100.0);
    }
  }

  SECTION("action index out of range") {
    Rng rng(0);
    CHECK_THROWS_AS(thompson_sample(post, 3, rng), std::invalid_argument);
  }
}

TEST_CASE("action_stats finite-sample statistics") {
  const BlrPrior prior{1, 1.0, 1.0};
  auto post = BlrPosterior::from_prior(prior, 2);

  SECTION("zero covariance gives exact mean and zero sigma") {
    for (auto& p : post.actions) {
      p.mean << 0.75;
      p.covariance.setZero();
      p.sample_factor.setZero();
    }
    Rng rng(5);
    const Eigen::VectorXd phi = Eigen::VectorXd::Constant(1, 2.0);
    const auto stats = action_stats(post, phi, 30, rng);
    for (int a = 0; a < 2; ++a) {
      CHECK(stats.mu[a] == Approx(1.5).margin(1e-15));
      CHECK(stats.sigma[a] == 0.0);
    }
  }

  SECTION("zero features give zero statistics") {
    Rng rng(5);
    const auto stats = action_stats(post, Eigen::VectorXd::Zero(1), 30, rng);
    for (int a = 0; a < 2; ++a) {
      CHECK(stats.mu[a] == 0.0);
      CHECK(stats.sigma[a] == 0.0);
    }
  }

  SECTION("unit posterior variance recovered within 10 percent") {
    Rng rng(31);
    const Eigen::VectorXd phi = Eigen::VectorXd::Constant(1, 1.0);
    const auto stats = action_stats(post, phi, 10000, rng);
    CHECK(stats.sigma[0] * stats.sigma[0] == Approx(1.0).epsilon(0.10));
  }

  SECTION("fewer than two samples is undefined") {
    Rng rng(0);
    CHECK_THROWS_AS(action_stats(post, Eigen::VectorXd::Zero(1), 1, rng),
                    std::invalid_argument);
  }
}

TEST_CASE("q_value is the posterior-mean projection") {
  const BlrPrior prior{3, 1.0, 1.0};
  auto post = BlrPosterior::from_prior(prior, 2);
  const Eigen::VectorXd phi = (Eigen::VectorXd(3) << 3.0, 1.0, -1.0).finished();

  CHECK(q_value(post, 0, phi) == 0.0);

  post.actions[1].mean << 1.0, 0.0, 0.0;
  CHECK(q_value(post, 1, phi) == Approx(3.0));

  SECTION("consistent with zero-covariance action_stats") {
    post.actions[1].covariance.setZero();
    post.actions[1].sample_factor.setZero();
    post.actions[0].covariance.setZero();
    post.actions[0].sample_factor.setZero();
    Rng rng(8);
    const auto stats = action_stats(post, phi, 5, rng);
    CHECK(stats.mu[1] == Approx(q_value(post, 1, phi)));
  }
}
