#pragma once

// Experiment orchestration behind the command-line tool.
//
// Seeds used by a run are pure functions of the master seed and a role string:
//   train corpus   derive(master, "train-corpus")   image i -> split(., i)
//   test corpus    derive(master, "test-corpus")    image i -> split(., i)
//   train pair     derive(master, "train-pair")     (split shuffle, stego pass, B pass)
//   test stego     derive(master, "test-stego")     stego j -> split(., j)
//   test pair      derive(master, "test-pair")      B pass
//   ensembles      derive(master, "ensemble")       then "f_A"/"f_B", learner l
//
// Two runs writing into the same output directory at once are not supported.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegcheck/detector.hpp"
#include "stegcheck/embedding.hpp"
#include "stegcheck/ensemble.hpp"
#include "stegcheck/features.hpp"
#include "stegcheck/synth.hpp"

namespace stegcheck {

class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::size_t line, const std::string& what)
      : std::runtime_error(line ? "config line " + std::to_string(line) + ": " + what : "config: " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Either a named synthetic preset or a directory of PGM files.
struct SourceSpec {
  std::string preset = "source-A";
  std::filesystem::path directory;

  bool is_directory() const { return !directory.empty(); }
  std::string describe() const;
  static SourceSpec parse(const std::string& text);  // "<preset>" or "dir:<path>"
};

using PresetTable = std::map<std::string, SourceParams>;

/// The built-in source-A and source-B parameter sets.
PresetTable builtin_presets();

struct ExperimentConfig {
  SourceSpec train_source;
  SourceSpec test_source;
  std::size_t n_train_covers = 200;
  std::size_t n_test_cover = 100;
  std::size_t n_test_stego = 100;
  EmbedConfig train_embed{Algorithm::kLsbm, 0.4};
  EmbedConfig test_embed{Algorithm::kLsbm, 0.4};
  std::size_t width = 128;
  std::size_t height = 128;
  FeatureConfig feature_cfg;
  EcConfig ec_cfg;
  std::uint64_t master_seed = 1;
  std::filesystem::path output_dir = "experiment-out";
  PresetTable presets = builtin_presets();

  void validate() const;
};

/// Flat "key = value" text in [sections]; '#' starts a comment. Unknown
/// sections or keys, duplicates, and malformed values are errors carrying
/// the line number. Missing keys keep their defaults. A [preset NAME]
/// section defines or overrides a synthetic source.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string format_config(const ExperimentConfig& cfg);

struct ExperimentResult {
  DetectionReport report;
  std::vector<ImageVerdict> verdicts;
  std::vector<Label> labels;
  std::vector<std::string> names;
  DetectorModels models;
};

ExperimentResult run_experiment(const ExperimentConfig& cfg);
/// Runs and writes report.csv, verdicts.csv, detector.model and config.ini.
ExperimentResult cmd_experiment(const ExperimentConfig& cfg);

struct NamedImage {
  std::string name;
  ImageGray image;
};

/// All *.pgm files in a directory, sorted by file name.
std::vector<NamedImage> load_pgm_dir(const std::filesystem::path& dir);

/// Writes cover_000001.pgm ... and manifest.csv (file,seed).
void cmd_synth(const std::string& preset, std::size_t count, std::size_t width, std::size_t height,
               std::uint64_t seed, const std::filesystem::path& out_dir,
               const PresetTable& presets = builtin_presets());

/// Per-image seed: split(seed, fnv1a64(file name)); file names are preserved.
void cmd_embed(const std::filesystem::path& in_dir, const EmbedConfig& cfg, std::uint64_t seed,
               const std::filesystem::path& out_dir);

inline constexpr const char* kChangeStatsHeader = "file,n_pm1,n_pm2,n_other,n_total";
/// Per-image rows then a TOTAL row; returns the totals.
ChangeStats cmd_changestats(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b,
                            std::ostream& out);

void cmd_features(const std::filesystem::path& in_dir, const FeatureConfig& cfg,
                  const std::optional<std::string>& label, const std::filesystem::path& out_csv);

DetectorModels cmd_train(const std::filesystem::path& cover_dir, const EmbedConfig& embed_cfg,
                         const FeatureConfig& feat_cfg, const EcConfig& ec_cfg, std::uint64_t seed,
                         const std::filesystem::path& model_path);

struct DetectOutcome {
  DetectionReport report;
  std::vector<ImageVerdict> verdicts;
  std::vector<std::string> names;
  std::string note;  // set for single-image runs
};

/// Label-free deployment mode; writes verdicts.csv and report.csv to out_dir.
DetectOutcome cmd_detect(const std::filesystem::path& model_path,
                         const std::filesystem::path& image_dir,
                         const std::optional<EmbedConfig>& embed_override,
                         const FeatureConfig& feat_cfg, std::uint64_t seed,
                         const std::filesystem::path& out_dir);

}  // namespace stegcheck
