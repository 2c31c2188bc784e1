#include "wayfarer/persist.hpp"

#include <cstdio>
#include <set>
#include <sstream>

#include "wayfarer/error.hpp"

namespace wayfarer {

namespace {

// Reads fields of one JSON object and remembers which keys were consumed.
class ObjectReader {
 public:
  ObjectReader(const json& object, std::string path) : object_(object), path_(std::move(path)) {
    if (!object_.is_object()) fail(ErrorKind::config, where() + ": expected an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception& e) {
      fail(ErrorKind::config, field(key) + ": " + e.what());
    }
  }

  void read_point(const char* key, double& x, double& y) {
    std::vector<double> pair{x, y};
    read(key, pair);
    if (pair.size() != 2) fail(ErrorKind::config, field(key) + ": expected [x, y]");
    x = pair[0];
    y = pair[1];
  }

  ObjectReader child(const char* key) const {
    auto it = object_.find(key);
    static const json empty = json::object();
    return ObjectReader(it == object_.end() ? empty : *it, field(key));
  }

  bool has(const char* key) const { return object_.contains(key); }
  void mark(const char* key) { seen_.insert(key); }

  // Rejects keys that no read() asked for.
  void finish() const {
    for (auto it = object_.begin(); it != object_.end(); ++it) {
      if (!seen_.count(it.key())) fail(ErrorKind::config, "unknown key '" + field(it.key()) + "'");
    }
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

 private:
  std::string where() const { return path_.empty() ? "<root>" : path_; }

  const json& object_;
  std::string path_;
  std::set<std::string> seen_;
};

json dynamics_to_json(const sim::DynamicsParams& d) {
  return {{"dt", d.dt},           {"tau_max", d.tau_max}, {"k_d", d.k_d},         {"c_f", d.c_f},
          {"c_t", d.c_t},         {"mass", d.mass},       {"inertia", d.inertia}, {"k_drag", d.k_drag},
          {"k_rot", d.k_rot},     {"a_max", d.a_max},     {"sigma_stance", d.sigma_stance}};
}

void read_dynamics(ObjectReader r, sim::DynamicsParams& d) {
  r.read("dt", d.dt);
  r.read("tau_max", d.tau_max);
  r.read("k_d", d.k_d);
  r.read("c_f", d.c_f);
  r.read("c_t", d.c_t);
  r.read("mass", d.mass);
  r.read("inertia", d.inertia);
  r.read("k_drag", d.k_drag);
  r.read("k_rot", d.k_rot);
  r.read("a_max", d.a_max);
  r.read("sigma_stance", d.sigma_stance);
  r.finish();
}

json episode_to_json(const env::EpisodeConfig& e) {
  return {{"agent", std::string(sim::to_string(e.agent_kind))},
          {"m_waypoints", e.m_waypoints},
          {"boundary", {e.boundary_x, e.boundary_y}},
          {"t_ep", e.t_ep},
          {"t_inc", e.t_inc},
          {"perimeter", {{"center", {e.perimeter.center.x, e.perimeter.center.y}}, {"half_extent", e.perimeter.half_extent}}},
          {"reward", {{"w_energy", e.reward.w_energy}, {"hit_bonus", e.reward.hit_bonus}}},
          {"scale", {{"pos", e.scale.pos}, {"vel", e.scale.vel}}}};
}

void read_episode(ObjectReader r, env::EpisodeConfig& e) {
  std::string agent(sim::to_string(e.agent_kind));
  r.read("agent", agent);
  e.agent_kind = sim::agent_kind_from_string(agent);
  r.read("m_waypoints", e.m_waypoints);
  r.read_point("boundary", e.boundary_x, e.boundary_y);
  r.read("t_ep", e.t_ep);
  r.read("t_inc", e.t_inc);
  {
    r.mark("perimeter");
    ObjectReader p = r.child("perimeter");
    p.read_point("center", e.perimeter.center.x, e.perimeter.center.y);
    p.read("half_extent", e.perimeter.half_extent);
    p.finish();
  }
  {
    r.mark("reward");
    ObjectReader w = r.child("reward");
    w.read("w_energy", e.reward.w_energy);
    w.read("hit_bonus", e.reward.hit_bonus);
    w.finish();
  }
  {
    r.mark("scale");
    ObjectReader s = r.child("scale");
    s.read("pos", e.scale.pos);
    s.read("vel", e.scale.vel);
    s.finish();
  }
  r.finish();
}

json mlp_to_json(const nn::MlpParams& p) {
  json layers = json::array();
  for (std::size_t l = 0; l < p.layer_count(); ++l) {
    const auto w = p.weights(l);
    const auto b = p.bias(l);
    layers.push_back({{"weights", std::vector<double>(w.begin(), w.end())}, {"bias", std::vector<double>(b.begin(), b.end())}});
  }
  const auto& d = p.dims();
  return {{"dims", {{"input", d.input}, {"hidden", d.hidden}, {"output", d.output}}}, {"layers", std::move(layers)}};
}

nn::MlpParams mlp_from_json(const json& j, const std::string& path) {
  try {
    nn::LayerDims dims;
    dims.input = j.at("dims").at("input").get<int>();
    dims.hidden = j.at("dims").at("hidden").get<std::vector<int>>();
    dims.output = j.at("dims").at("output").get<int>();
    nn::MlpParams p(dims);
    const json& layers = j.at("layers");
    if (!layers.is_array() || layers.size() != p.layer_count()) fail(ErrorKind::config, path + ": layer count mismatch");
    for (std::size_t l = 0; l < p.layer_count(); ++l) {
      const auto w = layers[l].at("weights").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto dw = p.weights(l);
      auto db = p.bias(l);
      if (w.size() != dw.size() || b.size() != db.size()) {
        fail(ErrorKind::config, path + ".layers[" + std::to_string(l) + "]: array size does not match dims");
      }
      std::copy(w.begin(), w.end(), dw.begin());
      std::copy(b.begin(), b.end(), db.begin());
    }
    return p;
  } catch (const json::exception& e) {
    fail(ErrorKind::config, path + ": " + e.what());
  }
}

}  // namespace

json to_json(const train::TrainConfig& c) {
  return {{"variant", c.variant},
          {"seed", c.seed},
          {"iterations", c.n_iterations},
          {"episodes_per_batch", c.episodes_per_batch},
          {"gamma", c.gamma},
          {"policy_lr", c.policy_lr},
          {"value_lr", c.value_lr},
          {"entropy_coef", c.entropy_coef},
          {"init_log_std", c.init_log_std},
          {"policy_hidden", c.policy_hidden},
          {"value_hidden", c.value_hidden},
          {"workers", c.workers},
          {"checkpoint_every", c.checkpoint_every},
          {"episode", episode_to_json(c.episode)},
          {"dynamics", dynamics_to_json(c.episode.dynamics)}};
}

train::TrainConfig train_config_from_json(const json& document) {
  train::TrainConfig c;
  ObjectReader r(document, "");
  r.read("variant", c.variant);
  r.read("seed", c.seed);
  r.read("iterations", c.n_iterations);
  r.read("episodes_per_batch", c.episodes_per_batch);
  r.read("gamma", c.gamma);
  r.read("policy_lr", c.policy_lr);
  r.read("value_lr", c.value_lr);
  r.read("entropy_coef", c.entropy_coef);
  r.read("init_log_std", c.init_log_std);
  r.read("policy_hidden", c.policy_hidden);
  r.read("value_hidden", c.value_hidden);
  r.read("workers", c.workers);
  r.read("checkpoint_every", c.checkpoint_every);
  r.mark("episode");
  read_episode(r.child("episode"), c.episode);
  r.mark("dynamics");
  read_dynamics(r.child("dynamics"), c.episode.dynamics);
  r.finish();
  train::apply_variant(c);
  train::validate(c);
  return c;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::io, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    fail(ErrorKind::config, path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::io, "cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) fail(ErrorKind::io, "write failed for " + path.string());
}

train::TrainConfig load_config_file(const std::filesystem::path& path) {
  const json document = read_json_file(path);
  try {
    return train_config_from_json(document);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

void apply_override(json& document, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    fail(ErrorKind::config, "override '" + std::string(assignment) + "' is not of the form key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &document;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) fail(ErrorKind::config, "override key '" + key + "' has an empty component");
    if (!node->is_object()) *node = json::object();
    if (dot == std::string::npos) {
      (*node)[part] = value;
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

json to_json(const train::Checkpoint& c) {
  return {{"format", kCheckpointFormat},
          {"version", kCheckpointVersion},
          {"variant", c.config.variant},
          {"seed", c.config.seed},
          {"iteration", c.iteration},
          {"config", to_json(c.config)},
          {"policy", mlp_to_json(c.policy)},
          {"log_std", c.head.log_std},
          {"value", mlp_to_json(c.value)}};
}

train::Checkpoint checkpoint_from_json(const json& j) {
  if (!j.is_object() || j.value("format", std::string()) != kCheckpointFormat) {
    fail(ErrorKind::config, "not a wayfarer checkpoint document");
  }
  const int version = j.value("version", -1);
  if (version != kCheckpointVersion) {
    fail(ErrorKind::version, "unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
                                 std::to_string(kCheckpointVersion) + ")");
  }
  train::Checkpoint c;
  try {
    c.config = train_config_from_json(j.at("config"));
    c.iteration = j.at("iteration").get<long>();
    c.head.log_std = j.at("log_std").get<std::vector<double>>();
    c.policy = mlp_from_json(j.at("policy"), "policy");
    c.value = mlp_from_json(j.at("value"), "value");
  } catch (const json::exception& e) {
    fail(ErrorKind::config, std::string("checkpoint: ") + e.what());
  }
  if (c.policy.dims() != train::policy_dims(c.config) || c.value.dims() != train::value_dims(c.config)) {
    fail(ErrorKind::config, "checkpoint: network dims do not match the stored config");
  }
  if (c.head.log_std.size() != static_cast<std::size_t>(c.policy.dims().output)) {
    fail(ErrorKind::config, "checkpoint: log_std length does not match the action dimension");
  }
  return c;
}

void save_checkpoint(const train::Checkpoint& checkpoint, const std::filesystem::path& path) {
  write_text_file(path, to_json(checkpoint).dump(1) + "\n");
}

train::Checkpoint load_checkpoint(const std::filesystem::path& path) {
  const json document = read_json_file(path);
  try {
    return checkpoint_from_json(document);
  } catch (const Error& e) {
    fail(e.kind(), path.string() + ": " + e.what());
  }
}

MetricsLog::MetricsLog(const std::filesystem::path& path) : out_(path, std::ios::trunc) {
  if (!out_) fail(ErrorKind::io, "cannot write " + path.string());
  out_ << kHeader << '\n';
}

void MetricsLog::append(const train::IterationMetrics& m) {
  char line[512];
  std::snprintf(line, sizeof(line), "%ld,%ld,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g\n", m.iteration, m.env_steps, m.mean_return,
                m.mean_episode_len, m.mean_waypoints, m.policy_loss, m.value_loss, m.entropy);
  out_ << line;
  out_.flush();
}

}  // namespace wayfarer
