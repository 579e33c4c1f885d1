#pragma once

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

#include "ringrl/agent.hpp"
#include "ringrl/gridworld.hpp"
#include "ringrl/ring.hpp"
#include "ringrl/ring_rnn.hpp"

namespace ringrl {

using json = nlohmann::json;

// Seeded multi-run experiment definition; one agent/env/ring/rnn setup shared
// by every (variant, seed) pair.
struct ExperimentConfig {
  std::vector<Variant> variants{Variant::ring};
  GridWorldConfig env;
  AgentConfig agent;
  RingConfig ring;
  RnnParams rnn;
  int n_seeds = 10;
  int episodes_per_run = 300;
  std::uint64_t base_seed = 42;
  bool record_wallclock = false;
  int jobs = 0;  // 0: hardware concurrency

  void validate() const {
    if (variants.empty())
      throw std::invalid_argument("ExperimentConfig: at least one variant required");
    if (n_seeds < 1) throw std::invalid_argument("ExperimentConfig: n_seeds must be >= 1");
    if (episodes_per_run < 1)
      throw std::invalid_argument("ExperimentConfig: episodes_per_run must be positive");
    if (jobs < 0) throw std::invalid_argument("ExperimentConfig: jobs must be nonnegative");
    env.validate();
    agent.validate();
    ring.validate();
  }
};

// Unknown keys are a hard error so config typos fail loudly.
inline void require_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  if (!obj.is_object())
    throw std::invalid_argument("config: '" + where + "' must be a JSON object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* key : allowed)
      if (item.key() == key) {
        known = true;
        break;
      }
    if (!known)
      throw std::invalid_argument("config: unknown key '" + item.key() + "' in " + where);
  }
}

inline GridWorldConfig gridworld_from_json(const json& j) {
  require_keys(j, {"width", "height", "start", "goal", "walls", "step_penalty",
                   "goal_reward", "max_steps", "n_actions", "encoding"},
               "env");
  GridWorldConfig cfg;
  cfg.width = j.value("width", cfg.width);
  cfg.height = j.value("height", cfg.height);
  if (j.contains("start")) {
    cfg.start_x = j["start"].at(0).get<int>();
    cfg.start_y = j["start"].at(1).get<int>();
  }
  if (j.contains("goal")) {
    cfg.goal_x = j["goal"].at(0).get<int>();
    cfg.goal_y = j["goal"].at(1).get<int>();
  }
  if (j.contains("walls"))
    for (const auto& w : j["walls"])
      cfg.walls.emplace_back(w.at(0).get<int>(), w.at(1).get<int>());
  cfg.step_penalty = j.value("step_penalty", cfg.step_penalty);
  cfg.goal_reward = j.value("goal_reward", cfg.goal_reward);
  cfg.max_steps = j.value("max_steps", cfg.max_steps);
  cfg.n_actions = j.value("n_actions", cfg.n_actions);
  cfg.encoding = j.value("encoding", cfg.encoding);
  return cfg;
}

inline json gridworld_to_json(const GridWorldConfig& cfg) {
  json walls = json::array();
  for (auto [x, y] : cfg.walls) walls.push_back({x, y});
  return json{{"width", cfg.width},
              {"height", cfg.height},
              {"start", {cfg.start_x, cfg.start_y}},
              {"goal", {cfg.goal_x, cfg.goal_y}},
              {"walls", walls},
              {"step_penalty", cfg.step_penalty},
              {"goal_reward", cfg.goal_reward},
              {"max_steps", cfg.max_steps},
              {"n_actions", cfg.n_actions},
              {"encoding", cfg.encoding}};
}

inline AgentConfig agent_from_json(const json& j) {
  require_keys(j, {"gamma", "epsilon", "replay_capacity", "batch_size", "learning_rate",
                   "target_sync_interval", "blr_update_interval", "thompson_I", "features",
                   "hidden_width", "prior_variance", "noise_variance"},
               "agent");
  AgentConfig cfg;
  cfg.gamma = j.value("gamma", cfg.gamma);
  if (j.contains("epsilon")) {
    const json& e = j["epsilon"];
    require_keys(e, {"start", "end", "decay_steps"}, "agent.epsilon");
    cfg.epsilon.start = e.value("start", cfg.epsilon.start);
    cfg.epsilon.end = e.value("end", cfg.epsilon.end);
    cfg.epsilon.decay_steps = e.value("decay_steps", cfg.epsilon.decay_steps);
  }
  cfg.replay_capacity = j.value("replay_capacity", cfg.replay_capacity);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.target_sync_interval = j.value("target_sync_interval", cfg.target_sync_interval);
  cfg.blr_update_interval = j.value("blr_update_interval", cfg.blr_update_interval);
  cfg.thompson_samples = j.value("thompson_I", cfg.thompson_samples);
  cfg.features = j.value("features", cfg.features);
  cfg.hidden_width = j.value("hidden_width", cfg.hidden_width);
  cfg.prior_variance = j.value("prior_variance", cfg.prior_variance);
  cfg.noise_variance = j.value("noise_variance", cfg.noise_variance);
  return cfg;
}

inline json agent_to_json(const AgentConfig& cfg) {
  return json{{"gamma", cfg.gamma},
              {"epsilon",
               {{"start", cfg.epsilon.start},
                {"end", cfg.epsilon.end},
                {"decay_steps", cfg.epsilon.decay_steps}}},
              {"replay_capacity", cfg.replay_capacity},
              {"batch_size", cfg.batch_size},
              {"learning_rate", cfg.learning_rate},
              {"target_sync_interval", cfg.target_sync_interval},
              {"blr_update_interval", cfg.blr_update_interval},
              {"thompson_I", cfg.thompson_samples},
              {"features", cfg.features},
              {"hidden_width", cfg.hidden_width},
              {"prior_variance", cfg.prior_variance},
              {"noise_variance", cfg.noise_variance}};
}

inline RingConfig ring_from_json(const json& j) {
  require_keys(j, {"n_excitatory", "tau", "dt_ratio", "threshold_h", "excitatory_kernel_width",
                   "inhibitory_gain", "inhibitory_self_gain", "excitatory_to_inhibitory_gain",
                   "settle_tolerance", "settle_max_steps"},
               "ring");
  RingConfig cfg;
  cfg.n_excitatory = j.value("n_excitatory", cfg.n_excitatory);
  cfg.tau = j.value("tau", cfg.tau);
  cfg.dt_ratio = j.value("dt_ratio", cfg.dt_ratio);
  cfg.threshold_h = j.value("threshold_h", cfg.threshold_h);
  cfg.excitatory_kernel_width = j.value("excitatory_kernel_width", cfg.excitatory_kernel_width);
  cfg.inhibitory_gain = j.value("inhibitory_gain", cfg.inhibitory_gain);
  cfg.inhibitory_self_gain = j.value("inhibitory_self_gain", cfg.inhibitory_self_gain);
  cfg.excitatory_to_inhibitory_gain =
      j.value("excitatory_to_inhibitory_gain", cfg.excitatory_to_inhibitory_gain);
  cfg.settle_tolerance = j.value("settle_tolerance", cfg.settle_tolerance);
  cfg.settle_max_steps = j.value("settle_max_steps", cfg.settle_max_steps);
  return cfg;
}

inline json ring_to_json(const RingConfig& cfg) {
  return json{{"n_excitatory", cfg.n_excitatory},
              {"tau", cfg.tau},
              {"dt_ratio", cfg.dt_ratio},
              {"threshold_h", cfg.threshold_h},
              {"excitatory_kernel_width", cfg.excitatory_kernel_width},
              {"inhibitory_gain", cfg.inhibitory_gain},
              {"inhibitory_self_gain", cfg.inhibitory_self_gain},
              {"excitatory_to_inhibitory_gain", cfg.excitatory_to_inhibitory_gain},
              {"settle_tolerance", cfg.settle_tolerance},
              {"settle_max_steps", cfg.settle_max_steps}};
}

inline RnnParams rnn_from_json(const json& j) {
  require_keys(j, {"lambda_init", "tau_init", "beta_init"}, "rnn");
  RnnParams cfg;
  cfg.lambda_init = j.value("lambda_init", cfg.lambda_init);
  cfg.tau_init = j.value("tau_init", cfg.tau_init);
  cfg.beta_init = j.value("beta_init", cfg.beta_init);
  return cfg;
}

inline json rnn_to_json(const RnnParams& cfg) {
  return json{{"lambda_init", cfg.lambda_init},
              {"tau_init", cfg.tau_init},
              {"beta_init", cfg.beta_init}};
}

inline ExperimentConfig experiment_from_json(const json& root) {
  require_keys(root, {"env", "agent", "ring", "rnn", "experiment"}, "top level");
  ExperimentConfig cfg;
  if (root.contains("env")) cfg.env = gridworld_from_json(root["env"]);
  if (root.contains("agent")) cfg.agent = agent_from_json(root["agent"]);
  if (root.contains("ring")) cfg.ring = ring_from_json(root["ring"]);
  if (root.contains("rnn")) cfg.rnn = rnn_from_json(root["rnn"]);
  if (root.contains("experiment")) {
    const json& e = root["experiment"];
    require_keys(e, {"variants", "n_seeds", "episodes_per_run", "base_seed",
                     "record_wallclock", "jobs"},
                 "experiment");
    if (e.contains("variants")) {
      cfg.variants.clear();
      for (const auto& name : e["variants"]) {
        const auto v = variant_from_name(name.get<std::string>());
        if (!v)
          throw std::invalid_argument("config: unknown variant '" +
                                      name.get<std::string>() + "'");
        cfg.variants.push_back(*v);
      }
    }
    cfg.n_seeds = e.value("n_seeds", cfg.n_seeds);
    cfg.episodes_per_run = e.value("episodes_per_run", cfg.episodes_per_run);
    cfg.base_seed = e.value("base_seed", cfg.base_seed);
    cfg.record_wallclock = e.value("record_wallclock", cfg.record_wallclock);
    cfg.jobs = e.value("jobs", cfg.jobs);
  }
  cfg.validate();
  return cfg;
}

inline json experiment_to_json(const ExperimentConfig& cfg) {
  json variants = json::array();
  for (Variant v : cfg.variants) variants.push_back(variant_name(v));
  return json{{"env", gridworld_to_json(cfg.env)},
              {"agent", agent_to_json(cfg.agent)},
              {"ring", ring_to_json(cfg.ring)},
              {"rnn", rnn_to_json(cfg.rnn)},
              {"experiment",
               {{"variants", variants},
                {"n_seeds", cfg.n_seeds},
                {"episodes_per_run", cfg.episodes_per_run},
                {"base_seed", cfg.base_seed},
                {"record_wallclock", cfg.record_wallclock},
                {"jobs", cfg.jobs}}}};
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  json root;
  try {
    in >> root;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("config: parse error in " + path + ": " + e.what());
  }
  return experiment_from_json(root);
}

// Checkpoint form of the recurrent layer: scalars plus row-major base matrices.
inline json rnn_layer_to_json(const RingRnnLayer& layer) {
  json base_ih = json::array();
  for (int m = 0; m < layer.input_dim(); ++m)
    for (int n = 0; n < layer.hidden_dim(); ++n) base_ih.push_back(layer.base_ih()(m, n));
  json base_hh = json::array();
  for (int m = 0; m < layer.hidden_dim(); ++m)
    for (int n = 0; n < layer.hidden_dim(); ++n) base_hh.push_back(layer.base_hh()(m, n));
  return json{{"m_in", layer.input_dim()},   {"n_hidden", layer.hidden_dim()},
              {"lambda", layer.lambda()},    {"tau", layer.tau()},
              {"beta", layer.beta()},        {"ring_enabled", layer.ring_enabled()},
              {"base_ih", base_ih},          {"base_hh", base_hh}};
}

inline RingRnnLayer rnn_layer_from_json(const json& j) {
  require_keys(j, {"m_in", "n_hidden", "lambda", "tau", "beta", "ring_enabled",
                   "base_ih", "base_hh"},
               "rnn checkpoint");
  RingRnnConfig cfg;
  cfg.m_in = j.at("m_in").get<int>();
  cfg.n_hidden = j.at("n_hidden").get<int>();
  cfg.lambda_init = j.at("lambda").get<double>();
  cfg.tau_init = j.at("tau").get<double>();
  cfg.beta_init = j.at("beta").get<double>();
  cfg.ring_enabled = j.at("ring_enabled").get<bool>();
  Rng scratch(0);
  RingRnnLayer layer(cfg, scratch);
  Eigen::MatrixXd base_ih(cfg.m_in, cfg.n_hidden);
  const auto& ih = j.at("base_ih");
  if (static_cast<int>(ih.size()) != cfg.m_in * cfg.n_hidden)
    throw std::invalid_argument("rnn checkpoint: base_ih size mismatch");
  for (int m = 0, k = 0; m < cfg.m_in; ++m)
    for (int n = 0; n < cfg.n_hidden; ++n, ++k) base_ih(m, n) = ih.at(k).get<double>();
  Eigen::MatrixXd base_hh(cfg.n_hidden, cfg.n_hidden);
  const auto& hh = j.at("base_hh");
  if (static_cast<int>(hh.size()) != cfg.n_hidden * cfg.n_hidden)
    throw std::invalid_argument("rnn checkpoint: base_hh size mismatch");
  for (int m = 0, k = 0; m < cfg.n_hidden; ++m)
    for (int n = 0; n < cfg.n_hidden; ++n, ++k) base_hh(m, n) = hh.at(k).get<double>();
  layer.set_base_ih(std::move(base_ih));
  layer.set_base_hh(std::move(base_hh));
  return layer;
}

}  // namespace ringrl
