#ifndef COLLABTRACK_CLI_HPP_
#define COLLABTRACK_CLI_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "annotations.hpp"
#include "config.hpp"
#include "errors.hpp"
#include "eval.hpp"
#include "imagery.hpp"
#include "model_io.hpp"
#include "network.hpp"
#include "sampling.hpp"
#include "synth.hpp"
#include "tracker.hpp"

namespace collabtrack {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitData = 2, kExitNumeric = 3 };

namespace detail {

inline std::filesystem::path require_path(const RunConfig& cfg, const std::string& key) {
  const std::string& v = cfg.get(key);
  if (v.empty()) throw UsageError("config key " + key + " is required for this command");
  return v;
}

inline std::filesystem::path ground_truth_path(const RunConfig& cfg, const std::filesystem::path& sequence) {
  const std::string& v = cfg.get("ground_truth");
  return v.empty() ? sequence / kGroundTruthFile : std::filesystem::path(v);
}

inline std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

}  // namespace detail

/// Harvests the annotated sequences, pretrains the RBM stack, trains the
/// classifier and writes the model file.
inline void cmd_pretrain(const RunConfig& cfg, std::ostream& log) {
  const auto dirs = cfg.get_list("train_sequences");
  if (dirs.empty()) throw UsageError("config key train_sequences is required for pretrain");
  std::vector<AnnotatedSequence> sequences;
  for (const auto& d : dirs) {
    AnnotatedSequence s{load_sequence(d), read_boxes(std::filesystem::path(d) / kGroundTruthFile)};
    if (s.frames.size() != s.boxes.size())
      throw DataError(d + ": " + std::to_string(s.frames.size()) + " frames but " + std::to_string(s.boxes.size()) +
                      " ground-truth rows");
    sequences.push_back(std::move(s));
  }

  Rng rng(cfg.seed());
  const auto samples =
      harvest_offline(sequences, rng, cfg.get_int("harvest_positives"), cfg.get_int("harvest_negatives"));
  if (samples.empty()) throw DataError("harvest produced no training samples");
  const TrainBatch data = to_train_batch(samples);

  NetworkParams params = pretrain_stack(data.inputs, default_architecture(), cfg.rbm(), rng);
  const TrainConfig tc = cfg.offline_training();
  params = train(std::move(params), data, tc, rng);
  validate(params);

  const auto model_path = detail::require_path(cfg, "model");
  if (model_path.has_parent_path()) std::filesystem::create_directories(model_path.parent_path());
  write_model(model_path, params);

  const LossTerms l = loss(params, data, tc.loss);
  char line[160];
  std::snprintf(line, sizeof line, "samples %zu  loss %.6f  accuracy %.4f\n", samples.size(), l.total,
                accuracy(params, data));
  log << line << "wrote " << model_path.string() << '\n';
}

/// Runs the tracker over a sequence and writes the trajectory CSV.
inline std::vector<TrackResult> cmd_track(const RunConfig& cfg, std::ostream& log) {
  const auto seq_dir = detail::require_path(cfg, "sequence");
  const TrackerConfig tc = cfg.tracker();
  NetworkParams model = read_model(detail::require_path(cfg, "model"));
  if (model.architecture() != default_architecture())
    throw DataError("model architecture does not match 1024-256-64-16-1");
  const auto frames = load_sequence(seq_dir);

  Box init;
  if (const auto boxes = cfg.get_reals("init_box"); !boxes.empty()) {
    if (boxes.size() != 4) throw UsageError("config key init_box: expected x,y,w,h");
    init = Box{boxes[0], boxes[1], boxes[2], boxes[3]};
  } else {
    const auto gt = read_boxes(detail::ground_truth_path(cfg, seq_dir));
    if (gt.empty()) throw DataError("ground truth is empty; set init_box");
    init = gt.front();
  }

  std::vector<TrackResult> results;
  try {
    results = run(frames, init, std::move(model), tc);
  } catch (const std::invalid_argument& e) {
    throw DataError(e.what());
  }

  auto out = detail::open_output(detail::require_path(cfg, "trajectory"));
  write_trajectory(out, results);

  const auto finetunes = std::count_if(results.begin(), results.end(), [](const auto& r) { return r.finetuned; });
  double mean_rate = 0.0;
  for (const auto& r : results) mean_rate += r.occlusion_rate;
  mean_rate /= static_cast<double>(results.size());
  char line[160];
  std::snprintf(line, sizeof line, "frames %zu  finetunes %td  mean occlusion rate %.4f\n", results.size(), finetunes,
                mean_rate);
  log << line;
  return results;
}

/// Compares a trajectory with ground truth and writes the report CSV.
inline SequenceReport cmd_eval(const RunConfig& cfg, std::ostream& log) {
  const auto trajectory = read_boxes(detail::require_path(cfg, "trajectory"));
  std::filesystem::path gt_path = cfg.get("ground_truth");
  if (gt_path.empty()) {
    const auto seq = detail::require_path(cfg, "sequence");
    gt_path = seq / kGroundTruthFile;
  }
  const auto truth = read_boxes(gt_path);
  const SequenceReport report = evaluate(trajectory, truth);
  auto out = detail::open_output(detail::require_path(cfg, "report"));
  write_report(out, report);
  char line[160];
  std::snprintf(line, sizeof line, "frames %zu  mean center error %.4f  mean overlap %.4f\n", report.frame_count(),
                report.mean_center_error, report.mean_overlap);
  log << line;
  return report;
}

inline void cmd_synth(const RunConfig& cfg, std::ostream& log) {
  const auto dir = detail::require_path(cfg, "out_dir");
  const SynthConfig sc = cfg.synth();
  write_sequence(dir, synthesize(sc));
  log << "wrote " << sc.frames << " frames to " << dir.string() << '\n';
}

/// Min-max normalizes a weight column to bytes; a constant column maps to mid-gray.
inline std::vector<std::uint8_t> filter_image(const Eigen::VectorXd& column) {
  const double lo = column.minCoeff();
  const double hi = column.maxCoeff();
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(column.size()), 128);
  if (hi > lo)
    for (Eigen::Index i = 0; i < column.size(); ++i)
      bytes[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(255.0 * (column[i] - lo) / (hi - lo)));
  return bytes;
}

/// Writes each first-layer weight column as a 32x32 PGM.
inline std::size_t cmd_dump_filters(const RunConfig& cfg, std::ostream& log) {
  const NetworkParams model = read_model(detail::require_path(cfg, "model"));
  const auto& w = model.layers.front().weights;
  if (w.rows() != kPatchSize) throw DataError("first layer does not take 32x32 inputs");
  const auto dir = detail::require_path(cfg, "out_dir");
  std::filesystem::create_directories(dir);
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    char name[32];
    std::snprintf(name, sizeof name, "filter_%03td.pgm", j);
    write_pgm(dir / name, kPatchSide, kPatchSide, filter_image(w.col(j)));
  }
  log << "wrote " << w.cols() << " filters to " << dir.string() << '\n';
  return static_cast<std::size_t>(w.cols());
}

/// Command-line entry point; returns the process exit code.
inline int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Collaborative generative/discriminative visual tracker", "collabtrack"};
  app.require_subcommand(1);

  struct Command {
    CLI::App* app;
    std::string config_path;
    std::vector<std::string> overrides;
  };
  std::vector<Command> commands;
  for (const char* name : {"pretrain", "track", "eval", "synth", "dump-filters"}) {
    static const std::map<std::string, std::string> help{
        {"pretrain", "train the classifier offline and write a model file"},
        {"track", "track a target through a PGM sequence"},
        {"eval", "score a trajectory against ground truth"},
        {"synth", "generate a synthetic annotated sequence"},
        {"dump-filters", "write first-layer filters as PGM images"}};
    commands.push_back({app.add_subcommand(name, help.at(name)), {}, {}});
  }
  for (auto& c : commands) {
    c.app->add_option("--config", c.config_path, "key=value configuration file");
    c.app->add_option("--set", c.overrides, "override a configuration key (key=value)")->take_all();
  }

  std::reverse(args.begin(), args.end());
  try {
    app.parse(std::move(args));
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kExitOk;
    }
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    for (auto& c : commands) {
      if (!c.app->parsed()) continue;
      RunConfig cfg;
      if (!c.config_path.empty()) cfg.load_file(c.config_path);
      cfg.apply_environment();
      for (const auto& o : c.overrides) cfg.assign(o);

      const std::string name = c.app->get_name();
      if (name == "pretrain") cmd_pretrain(cfg, out);
      else if (name == "track") cmd_track(cfg, out);
      else if (name == "eval") cmd_eval(cfg, out);
      else if (name == "synth") cmd_synth(cfg, out);
      else cmd_dump_filters(cfg, out);
    }
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitOk;
}

}  // namespace collabtrack

#endif  // COLLABTRACK_CLI_HPP_
