#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <vector>

#include "ringrl/rng.hpp"

namespace ringrl {

struct Transition {
  Eigen::VectorXd s;
  int a = 0;
  double r = 0.0;
  Eigen::VectorXd s_next;
  bool done = false;
  Eigen::VectorXd h_prev;  // recurrent variants only; empty otherwise
};

// Fixed-capacity ring of transitions with uniform seeded sampling.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
    data_.reserve(capacity);
  }

  void push(Transition t) {
    if (data_.size() < capacity_) {
      data_.push_back(std::move(t));
    } else {
      data_[next_] = std::move(t);
      next_ = (next_ + 1) % capacity_;
    }
  }

  std::size_t size() const { return data_.size(); }
  std::size_t capacity() const { return capacity_; }
  const std::vector<Transition>& storage() const { return data_; }

  std::vector<Transition> sample(int batch_size, Rng& rng) const {
    if (batch_size < 1) throw std::invalid_argument("ReplayBuffer: batch_size must be positive");
    if (data_.empty()) throw std::invalid_argument("ReplayBuffer: cannot sample from empty buffer");
    std::vector<Transition> batch;
    batch.reserve(static_cast<std::size_t>(batch_size));
    for (int i = 0; i < batch_size; ++i)
      batch.push_back(data_[static_cast<std::size_t>(rng.uniform_int(static_cast<int>(data_.size())))]);
    return batch;
  }

 private:
  std::size_t capacity_;
  std::size_t next_ = 0;
  std::vector<Transition> data_;
};

}  // namespace ringrl
