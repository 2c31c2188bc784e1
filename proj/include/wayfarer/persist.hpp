#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "wayfarer/trainer.hpp"

namespace wayfarer {

using nlohmann::json;

inline constexpr int kCheckpointVersion = 1;
inline constexpr std::string_view kCheckpointFormat = "wayfarer-checkpoint";

// Config documents. Absent fields take their defaults; unknown keys are
// rejected with the offending path in the message.
json to_json(const train::TrainConfig& config);
train::TrainConfig train_config_from_json(const json& document);
train::TrainConfig load_config_file(const std::filesystem::path& path);

// Applies `dotted.key=value` on top of a config document. The value is parsed
// as JSON when possible and as a string otherwise.
void apply_override(json& document, std::string_view assignment);

json to_json(const train::Checkpoint& checkpoint);
train::Checkpoint checkpoint_from_json(const json& document);
void save_checkpoint(const train::Checkpoint& checkpoint, const std::filesystem::path& path);
train::Checkpoint load_checkpoint(const std::filesystem::path& path);

json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Append-only training history.
class MetricsLog {
 public:
  static constexpr std::string_view kHeader =
      "iteration,env_steps,mean_return,mean_episode_len,mean_waypoints,policy_loss,value_loss,entropy";

  explicit MetricsLog(const std::filesystem::path& path);
  void append(const train::IterationMetrics& m);

 private:
  std::ofstream out_;
};

}  // namespace wayfarer
