// stegcheck: command-line front end for corpus synthesis, embedding, feature
// extraction, detector training, label-free detection and full experiments.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "stegcheck/detector.hpp"
#include "stegcheck/experiment.hpp"
#include "stegcheck/image.hpp"

namespace fs = std::filesystem;
using namespace stegcheck;

namespace {

void print_error(const std::string& kind, const std::string& message)
{
  nlohmann::json j{{"status", "error"}, {"kind", kind}, {"message", message}};
  std::cerr << j.dump() << std::endl;
}

// Feature/ensemble settings come from --config when given, else defaults.
ExperimentConfig base_config(const std::string& config_path)
{
  return config_path.empty() ? ExperimentConfig{} : load_config(config_path);
}

EmbedConfig make_embed(const std::string& algorithm, double rate)
{
  EmbedConfig cfg{parse_algorithm(algorithm), rate};
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"stegcheck - steganalysis inconsistency detection and error prediction"};
  app.require_subcommand(1);

  std::uint64_t seed = 1;
  std::string out;
  std::string config_path;

  // synth
  auto* synth = app.add_subcommand("synth", "Generate a synthetic cover corpus");
  std::string preset = "source-A";
  std::size_t count = 10, width = 128, height = 128;
  synth->add_option("--preset", preset, "Source preset (source-A, source-B)");
  synth->add_option("--count", count, "Number of images")->check(CLI::PositiveNumber);
  synth->add_option("--width", width, "Image width");
  synth->add_option("--height", height, "Image height");
  synth->add_option("--seed", seed, "Corpus seed");
  synth->add_option("--config", config_path, "Config file providing [preset NAME] sections");
  synth->add_option("--out", out, "Output directory")->required();

  // embed
  auto* embed_cmd = app.add_subcommand("embed", "Embed a random message into every PGM in a directory");
  std::string in_dir, algorithm = "LSBM";
  double rate = 0.4;
  embed_cmd->add_option("--in", in_dir, "Input directory")->required();
  embed_cmd->add_option("--algorithm", algorithm, "LSBM or HILL");
  embed_cmd->add_option("--rate", rate, "Payload in bits per pixel");
  embed_cmd->add_option("--seed", seed, "Embedding seed");
  embed_cmd->add_option("--out", out, "Output directory")->required();

  // changestats
  auto* changes = app.add_subcommand("changestats", "Count ±1/±2 differences between matching images");
  std::string dir_a, dir_b;
  changes->add_option("dir_a", dir_a, "Reference directory")->required();
  changes->add_option("dir_b", dir_b, "Modified directory")->required();
  changes->add_option("--out", out, "CSV output file (default stdout)");

  // features
  auto* features = app.add_subcommand("features", "Extract feature CSV from a PGM directory");
  std::string label;
  features->add_option("--in", in_dir, "Input directory")->required();
  features->add_option("--label", label, "Label written in the first column");
  features->add_option("--config", config_path, "Config file providing [features]");
  features->add_option("--out", out, "CSV output file")->required();

  // train
  auto* train = app.add_subcommand("train", "Train the f_A / f_B detector pair from covers");
  train->add_option("--covers", in_dir, "Cover directory")->required();
  train->add_option("--algorithm", algorithm, "LSBM or HILL");
  train->add_option("--rate", rate, "Payload in bits per pixel");
  train->add_option("--config", config_path, "Config file providing [features] and [ensemble]");
  train->add_option("--seed", seed, "Master seed");
  train->add_option("--out", out, "Detector model file")->required();

  // detect
  auto* detect = app.add_subcommand("detect", "Label-free inconsistency report for an image directory");
  std::string model_path;
  std::optional<std::string> detect_algorithm;
  std::optional<double> detect_rate;
  detect->add_option("--model", model_path, "Detector model file")->required();
  detect->add_option("--images", in_dir, "Directory of images under analysis")->required();
  detect->add_option("--algorithm", detect_algorithm, "Override the model's embedding algorithm");
  detect->add_option("--rate", detect_rate, "Override the model's embedding rate");
  detect->add_option("--config", config_path, "Config file providing [features]");
  detect->add_option("--seed", seed, "Seed for the B-set embedding");
  detect->add_option("--out", out, "Output directory")->required();

  // experiment
  auto* experiment = app.add_subcommand("experiment", "Run a full train/test experiment from a config file");
  std::optional<std::uint64_t> exp_seed;
  std::optional<std::string> exp_out;
  experiment->add_option("--config", config_path, "Experiment config file")->required();
  experiment->add_option("--seed", exp_seed, "Override run.seed");
  experiment->add_option("--out", exp_out, "Override run.output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error("usage", e.what());
    return 2;
  }

  try {
    if (*synth) {
      cmd_synth(preset, count, width, height, seed, out, base_config(config_path).presets);
      std::cout << "wrote " << count << " images to " << out << "\n";
    } else if (*embed_cmd) {
      cmd_embed(in_dir, make_embed(algorithm, rate), seed, out);
      std::cout << "embedded into " << out << "\n";
    } else if (*changes) {
      if (out.empty()) {
        cmd_changestats(dir_a, dir_b, std::cout);
      } else {
        std::ofstream f(out);
        if (!f) throw std::runtime_error("cannot create " + out);
        cmd_changestats(dir_a, dir_b, f);
      }
    } else if (*features) {
      const auto cfg = base_config(config_path);
      cmd_features(in_dir, cfg.feature_cfg, label.empty() ? std::nullopt : std::optional(label), out);
      std::cout << "wrote " << out << "\n";
    } else if (*train) {
      const auto cfg = base_config(config_path);
      const auto models = cmd_train(in_dir, make_embed(algorithm, rate), cfg.feature_cfg, cfg.ec_cfg, seed, out);
      std::cout << "trained detector (D=" << models.f_a.dimension << ", L=" << models.f_a.learners.size()
                << ") -> " << out << "\n";
    } else if (*detect) {
      const auto cfg = base_config(config_path);
      std::optional<EmbedConfig> override_cfg;
      if (detect_algorithm || detect_rate) {
        const auto models = load_detector(model_path);
        EmbedConfig e = models.embed_cfg;
        if (detect_algorithm) e.algorithm = parse_algorithm(*detect_algorithm);
        if (detect_rate) e.rate = *detect_rate;
        e.validate();
        override_cfg = e;
      }
      const auto outcome = cmd_detect(model_path, in_dir, override_cfg, cfg.feature_cfg, seed, out);
      std::cout << kReportHeader << "\n" << report_csv_row(outcome.report) << "\n";
      if (!outcome.note.empty()) std::cout << "note: " << outcome.note << "\n";
    } else if (*experiment) {
      auto cfg = load_config(config_path);
      if (exp_seed) cfg.master_seed = *exp_seed;
      if (exp_out) cfg.output_dir = *exp_out;
      const auto result = cmd_experiment(cfg);
      std::cout << kReportHeader << "\n" << report_csv_row(result.report) << "\n";
      if (cfg.train_embed.rate != cfg.test_embed.rate)
        std::cout << "warning: train and test rates differ; Err_pred is not reliable under "
                     "stego source mismatch\n";
    }
  } catch (const ConfigError& e) {
    print_error("config", e.what());
    return 1;
  } catch (const PgmError& e) {
    print_error(std::string("pgm_") + to_string(e.kind()), e.what());
    return 1;
  } catch (const DetectorError& e) {
    print_error("detector", e.what());
    return 1;
  } catch (const EnsembleError& e) {
    print_error("ensemble", e.what());
    return 1;
  } catch (const EmbeddingError& e) {
    print_error("embedding", e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("runtime", e.what());
    return 1;
  }
  return 0;
}
