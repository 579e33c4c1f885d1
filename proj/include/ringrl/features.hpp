#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <stdexcept>

#include "ringrl/rng.hpp"

namespace ringrl {

// State-to-feature map Phi with manual gradients. Gradients accumulate into
// internal buffers between zero_gradients() and apply_gradients().
class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual int input_dim() const = 0;
  virtual int feature_dim() const = 0;
  virtual bool has_parameters() const = 0;
  virtual Eigen::VectorXd forward(const Eigen::VectorXd& state) const = 0;
  virtual void accumulate_gradient(const Eigen::VectorXd& state,
                                   const Eigen::VectorXd& dphi) = 0;
  virtual void zero_gradients() = 0;
  virtual void apply_gradients(double learning_rate) = 0;
  virtual void copy_parameters_from(const FeatureExtractor& other) = 0;
  virtual std::unique_ptr<FeatureExtractor> clone() const = 0;
};

// Identity pass-through for one-hot encoded states (F = number of states).
class TabularFeatures final : public FeatureExtractor {
 public:
  explicit TabularFeatures(int dim) : dim_(dim) {
    if (dim < 1) throw std::invalid_argument("TabularFeatures: dim must be positive");
  }

  int input_dim() const override { return dim_; }
  int feature_dim() const override { return dim_; }
  bool has_parameters() const override { return false; }

  Eigen::VectorXd forward(const Eigen::VectorXd& state) const override {
    if (state.size() != dim_)
      throw std::invalid_argument("TabularFeatures: state dimension mismatch");
    return state;
  }

  void accumulate_gradient(const Eigen::VectorXd&, const Eigen::VectorXd&) override {}
  void zero_gradients() override {}
  void apply_gradients(double) override {}
  void copy_parameters_from(const FeatureExtractor&) override {}

  std::unique_ptr<FeatureExtractor> clone() const override {
    return std::make_unique<TabularFeatures>(dim_);
  }

 private:
  int dim_;
};

// One hidden tanh layer: phi = tanh(W s + b).
class PerceptronFeatures final : public FeatureExtractor {
 public:
  PerceptronFeatures(int input_dim, int hidden_width, Rng& rng)
      : input_dim_(input_dim), hidden_(hidden_width) {
    if (input_dim < 1 || hidden_width < 1)
      throw std::invalid_argument("PerceptronFeatures: dimensions must be positive");
    w_.resize(hidden_, input_dim_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(input_dim_));
    for (int i = 0; i < hidden_; ++i)
      for (int j = 0; j < input_dim_; ++j)
        w_(i, j) = (2.0 * rng.uniform() - 1.0) * scale;
    b_ = Eigen::VectorXd::Zero(hidden_);
    zero_gradients();
  }

  int input_dim() const override { return input_dim_; }
  int feature_dim() const override { return hidden_; }
  bool has_parameters() const override { return true; }

  Eigen::VectorXd forward(const Eigen::VectorXd& state) const override {
    if (state.size() != input_dim_)
      throw std::invalid_argument("PerceptronFeatures: state dimension mismatch");
    return (w_ * state + b_).array().tanh();
  }

  void accumulate_gradient(const Eigen::VectorXd& state,
                           const Eigen::VectorXd& dphi) override {
    const Eigen::VectorXd phi = forward(state);
    const Eigen::VectorXd dpre =
        (dphi.array() * (1.0 - phi.array().square())).matrix();
    dw_.noalias() += dpre * state.transpose();
    db_ += dpre;
  }

  void zero_gradients() override {
    dw_ = Eigen::MatrixXd::Zero(hidden_, input_dim_);
    db_ = Eigen::VectorXd::Zero(hidden_);
  }

  void apply_gradients(double learning_rate) override {
    w_ -= learning_rate * dw_;
    b_ -= learning_rate * db_;
  }

  void copy_parameters_from(const FeatureExtractor& other) override {
    const auto* src = dynamic_cast<const PerceptronFeatures*>(&other);
    if (src == nullptr || src->input_dim_ != input_dim_ || src->hidden_ != hidden_)
      throw std::invalid_argument("PerceptronFeatures: incompatible source");
    w_ = src->w_;
    b_ = src->b_;
  }

  std::unique_ptr<FeatureExtractor> clone() const override {
    return std::unique_ptr<PerceptronFeatures>(new PerceptronFeatures(*this));
  }

  const Eigen::MatrixXd& weights() const { return w_; }
  const Eigen::VectorXd& bias() const { return b_; }
  void set_weights(Eigen::MatrixXd w, Eigen::VectorXd b) {
    if (w.rows() != hidden_ || w.cols() != input_dim_ || b.size() != hidden_)
      throw std::invalid_argument("PerceptronFeatures: shape mismatch");
    w_ = std::move(w);
    b_ = std::move(b);
  }

 private:
  int input_dim_;
  int hidden_;
  Eigen::MatrixXd w_;
  Eigen::VectorXd b_;
  Eigen::MatrixXd dw_;
  Eigen::VectorXd db_;
};

}  // namespace ringrl
