#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "stegcheck/experiment.hpp"
#include "stegcheck/rng.hpp"

using namespace stegcheck;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test, removed on scope exit.
struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
  {
    path = fs::temp_directory_path() / ("stegcheck-test-" + tag + "-" + std::to_string(rng::fnv1a64(tag) & 0xffff));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t error_line(const std::string& text)
{
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.line();
  }
  return 0;
}

// Small enough for a unit test: one residual family, third-order co-occurrences.
const char* kSmallConfig = R"([train]
source = source-A
covers = 40
[test]
covers = 10
stegos = 10
[images]
width = 32
height = 32
[features]
kinds = first_order
quantizations = 1
order = 3
[ensemble]
learners = 5
subspace = 40
)";

}  // namespace

TEST_CASE("config defaults and overrides")
{
  const auto def = parse_config("");
  CHECK(def.n_train_covers == 200);
  CHECK(def.n_test_cover == 100);
  CHECK(def.n_test_stego == 100);
  CHECK(def.train_embed.algorithm == Algorithm::kLsbm);
  CHECK(def.train_embed.rate == 0.4);
  CHECK(def.width == 128);
  CHECK(def.ec_cfg.learners == 51);
  CHECK(def.feature_cfg.dimension() == 7500);
  CHECK(def.presets.count("source-A") == 1);
  CHECK(def.presets.count("source-B") == 1);

  const auto cfg = parse_config(
      "# comment\n[train]\nsource = source-B\nrate = 0.2  # trailing\nalgorithm = hill\n"
      "[test]\nsource = dir:/data/x\ncovers = 7\nstegos = 0\n[run]\nseed = 99\n");
  CHECK(cfg.train_source.preset == "source-B");
  CHECK(cfg.train_embed.rate == 0.2);
  CHECK(cfg.train_embed.algorithm == Algorithm::kHill);
  CHECK(cfg.test_source.is_directory());
  CHECK(cfg.test_source.directory == fs::path("/data/x"));
  CHECK(cfg.n_test_cover == 7);
  CHECK(cfg.n_test_stego == 0);
  CHECK(cfg.master_seed == 99);
}

TEST_CASE("config errors carry line numbers")
{
  CHECK(error_line("[train]\ncovers = 10\nbogus = 1\n") == 3);
  CHECK(error_line("[train]\ncovers = 10\ncovers = 12\n") == 3);
  CHECK(error_line("covers = 10\n") == 1);
  CHECK(error_line("[train]\n\n\ncovers = ten\n") == 4);
  CHECK(error_line("[trian]\n") == 1);
  CHECK(error_line("[train\n") == 1);
  CHECK(error_line("[train]\nrate\n") == 2);
  CHECK(error_line("[ensemble]\nbootstrap = maybe\n") == 2);
  CHECK(error_line("[train]\nalgorithm = F5\n") == 2);
  CHECK(error_line("[test]\nsource = source-Z\n") == 2);
  CHECK(error_line("[train]\n[train]\n") == 2);
  CHECK(error_line("[preset p]\nnoise = 1\n") == 2);
  CHECK(error_line("[preset p]\n[preset p]\n") == 2);
  try {
    parse_config("[run]\nseed = -1\n");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
}

TEST_CASE("preset sections define and override sources")
{
  const auto cfg = parse_config(
      "[train]\nsource = busy\n[preset busy]\ntexture_scale = 0.3\nnoise_sigma = 5\n"
      "[preset source-A]\ncontrast = 0.5\n");
  REQUIRE(cfg.presets.count("busy") == 1);
  CHECK(cfg.presets.at("busy").texture_scale == 0.3);
  CHECK(cfg.presets.at("busy").noise_sigma == 5.0);
  CHECK(cfg.presets.at("source-A").contrast == 0.5);
  CHECK(cfg.presets.at("source-A").noise_sigma == preset_source("source-A")->noise_sigma);

  auto bad = parse_config("[preset p]\ncontrast = 2\n");
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("format_config round trips")
{
  const auto cfg = parse_config(std::string(kSmallConfig) + "[preset extra]\nnoise_sigma = 4.25\n");
  const std::string text = format_config(cfg);
  CHECK(format_config(parse_config(text)) == text);
}

TEST_CASE("synth writes a reproducible corpus with a manifest")
{
  TempDir a("synth-a"), b("synth-b");
  cmd_synth("source-A", 10, 24, 20, 5, a.path);
  cmd_synth("source-A", 10, 24, 20, 5, b.path);
  const auto images = load_pgm_dir(a.path);
  REQUIRE(images.size() == 10);
  CHECK(images.front().name == "cover_000001.pgm");
  CHECK(images.front().image.width() == 24);
  CHECK(images.front().image.height() == 20);
  for (const auto& img : images) CHECK(slurp(a.path / img.name) == slurp(b.path / img.name));

  const std::string manifest = slurp(a.path / "manifest.csv");
  CHECK(manifest.rfind("file,seed\ncover_000001.pgm,", 0) == 0);
  CHECK(std::count(manifest.begin(), manifest.end(), '\n') == 11);
  CHECK_THROWS(cmd_synth("source-Q", 1, 24, 24, 5, a.path));
}

TEST_CASE("embed and changestats")
{
  TempDir covers("es-covers"), zero("es-zero"), once("es-once"), twice("es-twice");
  cmd_synth("source-A", 6, 32, 32, 3, covers.path);

  cmd_embed(covers.path, {Algorithm::kHill, 0.0}, 1, zero.path);
  for (const auto& img : load_pgm_dir(covers.path)) CHECK(slurp(covers.path / img.name) == slurp(zero.path / img.name));

  cmd_embed(covers.path, {Algorithm::kHill, 0.4}, 1, once.path);
  cmd_embed(once.path, {Algorithm::kHill, 0.4}, 2, twice.path);
  CHECK(load_pgm_dir(once.path).size() == 6);

  std::ostringstream self;
  const auto s0 = cmd_changestats(covers.path, covers.path, self);
  CHECK(s0.n_pm1 + s0.n_pm2 + s0.n_other == 0);
  CHECK(s0.n_total == 6u * 32u * 32u);

  std::ostringstream os;
  const auto single = cmd_changestats(covers.path, once.path, os);
  CHECK(single.n_pm1 > 0);
  CHECK(single.n_pm2 == 0);
  CHECK(single.n_other == 0);

  // Totals row equals the column sums of the per-image rows.
  std::istringstream rows(os.str());
  std::string line;
  std::getline(rows, line);
  CHECK(line == kChangeStatsHeader);
  std::size_t sum_pm1 = 0, n_rows = 0;
  while (std::getline(rows, line)) {
    if (line.rfind("TOTAL,", 0) == 0) {
      CHECK(line == "TOTAL," + std::to_string(single.n_pm1) + ",0,0," + std::to_string(single.n_total));
      break;
    }
    ++n_rows;
    const auto c1 = line.find(',');
    sum_pm1 += std::stoul(line.substr(c1 + 1, line.find(',', c1 + 1) - c1 - 1));
  }
  CHECK(n_rows == 6);
  CHECK(sum_pm1 == single.n_pm1);

  std::ostringstream os2;
  CHECK(cmd_changestats(covers.path, twice.path, os2).n_pm2 > 0);

  fs::remove(once.path / "cover_000003.pgm");
  std::ostringstream sink;
  CHECK_THROWS(cmd_changestats(covers.path, once.path, sink));
}

TEST_CASE("features CSV from a directory")
{
  TempDir dir("feat");
  cmd_synth("source-B", 3, 32, 32, 4, dir.path / "img");
  const auto cfg = parse_config(kSmallConfig);
  cmd_features(dir.path / "img", cfg.feature_cfg, std::string("cover"), dir.path / "f.csv");
  const auto table = read_feature_csv((dir.path / "f.csv").string());
  REQUIRE(table.rows.size() == 3);
  CHECK(table.rows[0].size() == cfg.feature_cfg.dimension());
  CHECK(table.labels == std::vector<std::string>{"cover", "cover", "cover"});
}

TEST_CASE("train then label-free detect")
{
  TempDir dir("detect");
  const auto cfg = parse_config(kSmallConfig);
  cmd_synth("source-A", 30, 32, 32, 8, dir.path / "train");
  cmd_synth("source-A", 5, 32, 32, 9, dir.path / "suspect");
  cmd_synth("source-A", 1, 32, 32, 10, dir.path / "single");
  const EmbedConfig embed_cfg{Algorithm::kLsbm, 0.4};
  cmd_train(dir.path / "train", embed_cfg, cfg.feature_cfg, cfg.ec_cfg, 3, dir.path / "model" / "det.model");

  const auto out = cmd_detect(dir.path / "model" / "det.model", dir.path / "suspect", std::nullopt, cfg.feature_cfg,
                              4, dir.path / "out");
  CHECK(out.verdicts.size() == 5);
  CHECK(out.note.empty());
  CHECK_FALSE(out.report.confusion.has_value());
  CHECK(out.report.err_pred == double(out.report.inc) / 10.0);

  const std::string report = slurp(dir.path / "out" / "report.csv");
  std::istringstream rs(report);
  std::string header, row;
  std::getline(rs, header);
  std::getline(rs, row);
  CHECK(header == kReportHeader);
  CHECK(row.rfind("5,,,,,,", 0) == 0);
  CHECK(slurp(dir.path / "out" / "verdicts.csv").rfind("index,name,", 0) == 0);

  const auto one = cmd_detect(dir.path / "model" / "det.model", dir.path / "single", std::nullopt, cfg.feature_cfg, 4,
                              dir.path / "out1");
  CHECK(one.verdicts.size() == 1);
  CHECK(one.note == "n=1: prediction informational only");

  FeatureConfig other = cfg.feature_cfg;
  other.cooc_order = 2;
  CHECK_THROWS_AS(cmd_detect(dir.path / "model" / "det.model", dir.path / "suspect", std::nullopt, other, 4,
                             dir.path / "out2"),
                  DetectorError);
}

TEST_CASE("experiment outputs are bit-reproducible")
{
  TempDir a("exp-a"), b("exp-b");
  auto cfg = parse_config(kSmallConfig);
  cfg.output_dir = a.path;
  const auto r1 = cmd_experiment(cfg);
  cfg.output_dir = b.path;
  cmd_experiment(cfg);
  for (const char* f : {"report.csv", "verdicts.csv", "detector.model"})
    CHECK(slurp(a.path / f) == slurp(b.path / f));

  const auto& rep = r1.report;
  CHECK(rep.n == 20);
  CHECK(rep.inc == rep.inc_c + rep.inc_s);
  CHECK(rep.inc <= rep.n);
  REQUIRE(rep.confusion.has_value());
  CHECK(rep.confusion->tp + rep.confusion->tn + rep.confusion->fp + rep.confusion->fn == 20);

  // A different master seed changes the run.
  cfg.master_seed = 2;
  cfg.output_dir = b.path;
  cmd_experiment(cfg);
  CHECK(slurp(a.path / "verdicts.csv") != slurp(b.path / "verdicts.csv"));
}

TEST_CASE("unbalanced test sets keep the report layout")
{
  TempDir dir("unbal");
  auto cfg = parse_config(std::string(kSmallConfig) + "[run]\noutput = " + dir.path.string() + "\n");
  cfg.n_test_stego = 0;
  const auto r = cmd_experiment(cfg);
  CHECK(r.report.n == 10);
  CHECK(r.report.err_pred >= 0.0);
  CHECK(r.report.err_pred <= 0.5);
  REQUIRE(r.report.confusion.has_value());
  CHECK(r.report.confusion->tp + r.report.confusion->fn == 0);
  CHECK(slurp(dir.path / "report.csv").rfind(std::string(kReportHeader) + "\n10,0,", 0) == 0);
}

TEST_CASE("directory sources share a folder without overlap")
{
  TempDir dir("dirsrc");
  cmd_synth("source-A", 60, 32, 32, 12, dir.path / "pool");
  auto cfg = parse_config(std::string(kSmallConfig));
  cfg.train_source = SourceSpec::parse("dir:" + (dir.path / "pool").string());
  cfg.test_source = cfg.train_source;
  cfg.output_dir = dir.path / "out";
  const auto r = cmd_experiment(cfg);
  CHECK(r.names.front() == "cover_000041.pgm");
  cfg.n_test_cover = 30;
  CHECK_THROWS(run_experiment(cfg));
}

TEST_CASE("shipped configs parse and default.ini spells out the built-in defaults")
{
  const fs::path dir = STEGCHECK_CONFIG_DIR;
  const auto def = load_config(dir / "default.ini");
  CHECK(format_config(def) == format_config(ExperimentConfig{}));
  for (const char* f : {"mismatched.ini", "unbalanced.ini", "payload_mismatch.ini"})
    CHECK_NOTHROW(load_config(dir / f).validate());
}
