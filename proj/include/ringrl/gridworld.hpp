#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace ringrl {

struct GridWorldConfig {
  int width = 9;
  int height = 9;
  int start_x = 0;
  int start_y = 0;
  int goal_x = 8;
  int goal_y = 8;
  std::vector<std::pair<int, int>> walls;
  double step_penalty = -0.01;
  double goal_reward = 1.0;
  int max_steps = 200;
  int n_actions = 8;
  std::string encoding = "onehot";  // "onehot" | "xy"

  void validate() const {
    if (width < 2 || height < 2)
      throw std::invalid_argument("GridWorldConfig: grid must be at least 2x2");
    if (n_actions < 1) throw std::invalid_argument("GridWorldConfig: n_actions must be positive");
    if (max_steps < 1) throw std::invalid_argument("GridWorldConfig: max_steps must be positive");
    auto inside = [&](int x, int y) { return x >= 0 && x < width && y >= 0 && y < height; };
    if (!inside(start_x, start_y) || !inside(goal_x, goal_y))
      throw std::invalid_argument("GridWorldConfig: start/goal out of bounds");
    if (start_x == goal_x && start_y == goal_y)
      throw std::invalid_argument("GridWorldConfig: start and goal coincide");
    for (auto [x, y] : walls) {
      if (!inside(x, y)) throw std::invalid_argument("GridWorldConfig: wall out of bounds");
      if ((x == start_x && y == start_y) || (x == goal_x && y == goal_y))
        throw std::invalid_argument("GridWorldConfig: wall on start or goal");
    }
    if (encoding != "onehot" && encoding != "xy")
      throw std::invalid_argument("GridWorldConfig: encoding must be 'onehot' or 'xy'");
  }
};

// Deterministic grid with actions laid uniformly on the circle: for A = 8 the
// moves are E, NE, N, NW, W, SW, S, SE. Walls and boundaries block movement.
class GridWorld {
 public:
  explicit GridWorld(GridWorldConfig config) : cfg_(std::move(config)) {
    cfg_.validate();
    wall_mask_.assign(static_cast<std::size_t>(cfg_.width * cfg_.height), false);
    for (auto [x, y] : cfg_.walls) wall_mask_[cell_index(x, y)] = true;
  }

  static std::pair<int, int> compass_delta(int action, int n_actions) {
    if (action < 0 || action >= n_actions)
      throw std::invalid_argument("GridWorld: action out of range");
    const double angle = 2.0 * std::numbers::pi * action / n_actions;
    return {static_cast<int>(std::lround(std::cos(angle))),
            static_cast<int>(std::lround(std::sin(angle)))};
  }

  Eigen::VectorXd reset(std::uint64_t /*seed*/) {
    x_ = cfg_.start_x;
    y_ = cfg_.start_y;
    steps_ = 0;
    done_ = false;
    return encode();
  }

  struct StepResult {
    Eigen::VectorXd state;
    double reward = 0.0;
    bool done = false;
  };

  StepResult step(int action) {
    if (done_) throw std::logic_error("GridWorld::step: episode already finished");
    auto [dx, dy] = compass_delta(action, cfg_.n_actions);
    const int nx = x_ + dx;
    const int ny = y_ + dy;
    if (nx >= 0 && nx < cfg_.width && ny >= 0 && ny < cfg_.height &&
        !wall_mask_[cell_index(nx, ny)]) {
      x_ = nx;
      y_ = ny;
    }
    ++steps_;
    StepResult out;
    if (x_ == cfg_.goal_x && y_ == cfg_.goal_y) {
      out.reward = cfg_.goal_reward;
      done_ = true;
    } else {
      out.reward = cfg_.step_penalty;
      if (steps_ >= cfg_.max_steps) done_ = true;
    }
    out.done = done_;
    out.state = encode();
    return out;
  }

  int state_dim() const {
    return cfg_.encoding == "onehot" ? cfg_.width * cfg_.height : 2;
  }

  const GridWorldConfig& config() const { return cfg_; }
  bool done() const { return done_; }
  int steps_taken() const { return steps_; }
  int x() const { return x_; }
  int y() const { return y_; }

  Eigen::VectorXd encode() const {
    if (cfg_.encoding == "onehot") {
      Eigen::VectorXd s = Eigen::VectorXd::Zero(cfg_.width * cfg_.height);
      s[static_cast<Eigen::Index>(cell_index(x_, y_))] = 1.0;
      return s;
    }
    Eigen::VectorXd s(2);
    s[0] = static_cast<double>(x_) / (cfg_.width - 1);
    s[1] = static_cast<double>(y_) / (cfg_.height - 1);
    return s;
  }

 private:
  std::size_t cell_index(int x, int y) const {
    return static_cast<std::size_t>(y * cfg_.width + x);
  }

  GridWorldConfig cfg_;
  std::vector<bool> wall_mask_;
  int x_ = 0;
  int y_ = 0;
  int steps_ = 0;
  bool done_ = true;  // reset() must run before step()
};

}  // namespace ringrl
