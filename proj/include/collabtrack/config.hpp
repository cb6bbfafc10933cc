#ifndef COLLABTRACK_CONFIG_HPP_
#define COLLABTRACK_CONFIG_HPP_

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "annotations.hpp"
#include "errors.hpp"
#include "synth.hpp"
#include "tracker.hpp"

namespace collabtrack {

struct ConfigKey {
  const char* name;
  const char* default_value;
  const char* help;
};

// clang-format off
inline constexpr std::array kConfigKeys{
    ConfigKey{"seed", "1", "seed for every random draw (COLLABTRACK_SEED overrides the file value)"},
    // tracking
    ConfigKey{"mask_delta", "0.018", "block similarity at or below which a block counts as occluded"},
    ConfigKey{"tau", "0.8", "fine-tune the classifier when the best candidate score is below this"},
    ConfigKey{"chi", "0.8", "skip subspace updates when the visible-block fraction is below this"},
    ConfigKey{"update_interval", "5", "frames between incremental subspace updates"},
    ConfigKey{"eigenvectors", "16", "eigenvectors kept per block subspace"},
    ConfigKey{"forgetting", "0.95", "forgetting factor of the incremental PCA"},
    ConfigKey{"particles", "600", "candidates drawn per frame"},
    ConfigKey{"variances", "6,6,0.01,0,0,0", "motion variances of cx,cy,scale,rotation,aspect,skew"},
    ConfigKey{"learning_rate", "0.002", "SGD learning rate (offline and online)"},
    ConfigKey{"momentum", "0.9", "SGD momentum"},
    ConfigKey{"weight_decay", "0.002", "decay coefficient applied inside the momentum update"},
    ConfigKey{"gamma", "0", "weight-decay weight inside the loss"},
    ConfigKey{"eta", "0.001", "sparsity penalty weight"},
    ConfigKey{"rho", "0.05", "target mean activation of hidden units"},
    ConfigKey{"online_epochs", "20", "epochs per online fine-tune"},
    ConfigKey{"online_batch", "50", "mini-batch size for online fine-tuning"},
    ConfigKey{"positives_per_frame", "5", "positives sampled around each tracking result"},
    ConfigKey{"negatives_per_finetune", "100", "negatives sampled when fine-tuning"},
    ConfigKey{"reservoir_capacity", "50", "positives kept for fine-tuning"},
    ConfigKey{"use_generative", "true", "false scores candidates with the classifier alone"},
    // offline training
    ConfigKey{"train_sequences", "", "comma-separated sequence directories, each with groundtruth.txt"},
    ConfigKey{"harvest_positives", "5", "positives per annotated frame"},
    ConfigKey{"harvest_negatives", "5", "negatives per annotated frame"},
    ConfigKey{"pretrain_epochs", "10", "CD-1 epochs per RBM layer"},
    ConfigKey{"pretrain_learning_rate", "0.01", "CD-1 learning rate"},
    ConfigKey{"pretrain_momentum", "0.9", "CD-1 momentum"},
    ConfigKey{"pretrain_batch", "100", "CD-1 mini-batch size"},
    ConfigKey{"train_epochs", "30", "supervised offline epochs"},
    ConfigKey{"train_batch", "100", "supervised offline mini-batch size"},
    // paths
    ConfigKey{"sequence", "", "directory of PGM frames to track"},
    ConfigKey{"ground_truth", "", "ground-truth file (default: <sequence>/groundtruth.txt)"},
    ConfigKey{"init_box", "", "initial x,y,w,h (default: first ground-truth row)"},
    ConfigKey{"model", "model.cdtm", "model file"},
    ConfigKey{"trajectory", "trajectory.csv", "trajectory CSV"},
    ConfigKey{"report", "report.csv", "evaluation report CSV"},
    ConfigKey{"out_dir", "", "output directory for synth and dump-filters"},
    // synthetic sequences
    ConfigKey{"synth_frames", "100", "frames to generate"},
    ConfigKey{"synth_width", "224", "frame width"},
    ConfigKey{"synth_height", "128", "frame height"},
    ConfigKey{"synth_target_size", "32", "side of the square target"},
    ConfigKey{"synth_noise", "0.02", "pixel noise standard deviation"},
    ConfigKey{"synth_background", "0.25", "mean background intensity in [0,1]"},
    ConfigKey{"occluder_byte", "64", "gray level (0-255) of the occluder bar"},
    ConfigKey{"occluder_fraction", "0", "fraction of the target width covered by the occluder bar"},
    ConfigKey{"occluder_start", "40", "first occluded frame"},
    ConfigKey{"occluder_end", "60", "last occluded frame (inclusive)"},
};
// clang-format on

inline constexpr const char* kSeedEnvVar = "COLLABTRACK_SEED";

/// Flat key=value configuration. Precedence: --set > environment seed > file > default.
class RunConfig {
public:
  RunConfig() {
    for (const auto& k : kConfigKeys) values_[k.name] = k.default_value;
  }

  static bool known(std::string_view key) {
    for (const auto& k : kConfigKeys)
      if (key == k.name) return true;
    return false;
  }

  void set(const std::string& key, const std::string& value) {
    if (!known(key)) throw UsageError("unknown config key '" + key + "'");
    values_[key] = value;
  }

  /// Applies a `key=value` assignment.
  void assign(std::string_view text) {
    const auto eq = text.find('=');
    if (eq == std::string_view::npos) throw UsageError("expected key=value, got '" + std::string(text) + "'");
    set(std::string(detail::trim(text.substr(0, eq))), std::string(detail::trim(text.substr(eq + 1))));
  }

  void load_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file " + path.string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      std::string_view text = line;
      if (const auto hash = text.find('#'); hash != std::string_view::npos) text = text.substr(0, hash);
      text = detail::trim(text);
      if (text.empty()) continue;
      try {
        assign(text);
      } catch (const UsageError& e) {
        throw UsageError(path.string() + " line " + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  void apply_environment() {
    if (const char* seed = std::getenv(kSeedEnvVar); seed != nullptr && *seed != '\0') values_["seed"] = seed;
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw UsageError("unknown config key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const {
    try {
      return detail::parse_real(get(key), "config key " + key);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
  }

  template <typename Int = int>
  Int get_int(const std::string& key) const {
    const std::string& v = get(key);
    Int out{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || ptr != v.data() + v.size() || v.empty())
      throw UsageError("config key " + key + ": expected an integer, got '" + v + "'");
    return out;
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw UsageError("config key " + key + ": expected true/false, got '" + v + "'");
  }

  std::vector<std::string> get_list(const std::string& key) const {
    std::vector<std::string> out;
    const std::string& v = get(key);
    if (detail::trim(v).empty()) return out;
    for (auto field : detail::split_commas(v)) out.emplace_back(detail::trim(field));
    return out;
  }

  std::vector<double> get_reals(const std::string& key) const {
    std::vector<double> out;
    for (const auto& f : get_list(key)) {
      try {
        out.push_back(detail::parse_real(f, "config key " + key));
      } catch (const DataError& e) {
        throw UsageError(e.what());
      }
    }
    return out;
  }

  std::uint64_t seed() const { return get_int<std::uint64_t>("seed"); }

  TrackerConfig tracker() const {
    TrackerConfig t;
    t.mask_delta = get_double("mask_delta");
    t.tau = get_double("tau");
    t.chi = get_double("chi");
    t.update_interval = get_int("update_interval");
    t.eigenvectors_per_block = get_int("eigenvectors");
    t.forgetting = get_double("forgetting");
    t.motion.particle_count = get_int("particles");
    const auto var = get_reals("variances");
    if (var.size() != 6) throw UsageError("config key variances: expected 6 values");
    std::copy(var.begin(), var.end(), t.motion.variances.begin());
    t.sgd = sgd();
    t.loss = loss();
    t.online_epochs = get_int("online_epochs");
    t.online_batch = get_int("online_batch");
    t.positives_per_frame = get_int("positives_per_frame");
    t.negatives_per_finetune = get_int("negatives_per_finetune");
    t.reservoir_capacity = get_int("reservoir_capacity");
    t.seed = seed();
    t.use_generative = get_bool("use_generative");
    try {
      t.check();
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    return t;
  }

  SgdConfig sgd() const { return {get_double("learning_rate"), get_double("momentum"), get_double("weight_decay")}; }
  LossConfig loss() const { return {get_double("gamma"), get_double("eta"), get_double("rho")}; }

  RbmConfig rbm() const {
    return {get_int("pretrain_epochs"), get_int("pretrain_batch"), get_double("pretrain_learning_rate"),
            get_double("pretrain_momentum"), get_double("weight_decay")};
  }

  TrainConfig offline_training() const { return {get_int("train_epochs"), get_int("train_batch"), sgd(), loss()}; }

  SynthConfig synth() const {
    SynthConfig s;
    s.frames = get_int("synth_frames");
    s.width = get_int("synth_width");
    s.height = get_int("synth_height");
    s.target_size = get_double("synth_target_size");
    s.noise = get_double("synth_noise");
    s.background_level = get_double("synth_background");
    const int occluder = get_int("occluder_byte");
    if (occluder < 0 || occluder > 255) throw UsageError("config key occluder_byte must lie in [0,255]");
    s.occluder_byte = static_cast<std::uint8_t>(occluder);
    s.occluder_fraction = get_double("occluder_fraction");
    s.occluder_start = get_int("occluder_start");
    s.occluder_end = get_int("occluder_end");
    s.seed = seed();
    return s;
  }

private:
  std::map<std::string, std::string> values_;
};

}  // namespace collabtrack

#endif  // COLLABTRACK_CONFIG_HPP_
