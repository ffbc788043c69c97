#include "stegcheck/experiment.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "stegcheck/rng.hpp"

namespace fs = std::filesystem;

namespace stegcheck {

std::string SourceSpec::describe() const
{
  return is_directory() ? "dir:" + directory.string() : preset;
}

SourceSpec SourceSpec::parse(const std::string& text)
{
  SourceSpec s;
  if (text.rfind("dir:", 0) == 0) {
    s.preset.clear();
    s.directory = text.substr(4);
    if (s.directory.empty()) throw std::invalid_argument("empty directory in source '" + text + "'");
    return s;
  }
  if (text.empty()) throw std::invalid_argument("empty source");
  s.preset = text;
  return s;
}

PresetTable builtin_presets()
{
  PresetTable t;
  for (const auto& name : preset_names()) t[name] = *preset_source(name);
  return t;
}

void ExperimentConfig::validate() const
{
  for (const auto* src : {&train_source, &test_source})
    if (!src->is_directory() && !presets.count(src->preset))
      throw ConfigError(0, "unknown source preset '" + src->preset + "'");
  for (const auto& [name, params] : presets) {
    try {
      params.validate();
    } catch (const std::exception& e) {
      throw ConfigError(0, "preset " + name + ": " + e.what());
    }
  }
  if (n_train_covers < 2) throw ConfigError(0, "train.covers must be >= 2");
  if (n_test_cover + n_test_stego < 1) throw ConfigError(0, "test set is empty");
  train_embed.validate();
  test_embed.validate();
  if (width < kMinSynthSide || height < kMinSynthSide)
    throw ConfigError(0, "image dimensions must be at least 16x16");
  feature_cfg.validate();
  ec_cfg.validate(feature_cfg.dimension());
}

namespace {

std::string trim(std::string s)
{
  const auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

std::vector<std::string> split_list(const std::string& s)
{
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s, std::size_t line, const std::string& key)
{
  T v{};
  const auto* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || p != end) throw ConfigError(line, "bad value '" + s + "' for " + key);
  return v;
}

double parse_real(const std::string& s, std::size_t line, const std::string& key)
{
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0') throw ConfigError(line, "bad value '" + s + "' for " + key);
  return v;
}

bool parse_bool(const std::string& s, std::size_t line, const std::string& key)
{
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ConfigError(line, "bad boolean '" + s + "' for " + key);
}

using Setter = std::function<void(ExperimentConfig&, const std::string&, std::size_t)>;

const std::map<std::string, Setter>& setters()
{
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto wrap = [](auto fn) -> Setter {
      return [fn](ExperimentConfig& c, const std::string& v, std::size_t line) {
        try {
          fn(c, v, line);
        } catch (const ConfigError&) {
          throw;
        } catch (const std::exception& e) {
          throw ConfigError(line, e.what());
        }
      };
    };
    using C = ExperimentConfig;
    using S = const std::string&;
    using L = std::size_t;
    t["train.source"] = wrap([](C& c, S v, L) { c.train_source = SourceSpec::parse(v); });
    t["train.covers"] = wrap([](C& c, S v, L l) { c.n_train_covers = parse_number<std::size_t>(v, l, "train.covers"); });
    t["train.algorithm"] = wrap([](C& c, S v, L) { c.train_embed.algorithm = parse_algorithm(v); });
    t["train.rate"] = wrap([](C& c, S v, L l) { c.train_embed.rate = parse_real(v, l, "train.rate"); });
    t["test.source"] = wrap([](C& c, S v, L) { c.test_source = SourceSpec::parse(v); });
    t["test.covers"] = wrap([](C& c, S v, L l) { c.n_test_cover = parse_number<std::size_t>(v, l, "test.covers"); });
    t["test.stegos"] = wrap([](C& c, S v, L l) { c.n_test_stego = parse_number<std::size_t>(v, l, "test.stegos"); });
    t["test.algorithm"] = wrap([](C& c, S v, L) { c.test_embed.algorithm = parse_algorithm(v); });
    t["test.rate"] = wrap([](C& c, S v, L l) { c.test_embed.rate = parse_real(v, l, "test.rate"); });
    t["images.width"] = wrap([](C& c, S v, L l) { c.width = parse_number<std::size_t>(v, l, "images.width"); });
    t["images.height"] = wrap([](C& c, S v, L l) { c.height = parse_number<std::size_t>(v, l, "images.height"); });
    t["features.kinds"] = wrap([](C& c, S v, L) {
      c.feature_cfg.kinds.clear();
      for (const auto& k : split_list(v)) c.feature_cfg.kinds.push_back(parse_residual_kind(k));
    });
    t["features.quantizations"] = wrap([](C& c, S v, L l) {
      c.feature_cfg.quantizations.clear();
      for (const auto& q : split_list(v)) c.feature_cfg.quantizations.push_back(parse_number<int>(q, l, "features.quantizations"));
    });
    t["features.truncation"] = wrap([](C& c, S v, L l) { c.feature_cfg.truncation = parse_number<int>(v, l, "features.truncation"); });
    t["features.order"] = wrap([](C& c, S v, L l) { c.feature_cfg.cooc_order = parse_number<int>(v, l, "features.order"); });
    t["features.directions"] = wrap([](C& c, S v, L) {
      c.feature_cfg.directions.clear();
      for (const auto& d : split_list(v)) c.feature_cfg.directions.push_back(parse_direction(d));
    });
    t["features.normalize"] = wrap([](C& c, S v, L l) { c.feature_cfg.normalize = parse_bool(v, l, "features.normalize"); });
    t["ensemble.learners"] = wrap([](C& c, S v, L l) { c.ec_cfg.learners = parse_number<int>(v, l, "ensemble.learners"); });
    t["ensemble.subspace"] = wrap([](C& c, S v, L l) { c.ec_cfg.subspace = parse_number<std::size_t>(v, l, "ensemble.subspace"); });
    t["ensemble.reg_rel"] = wrap([](C& c, S v, L l) { c.ec_cfg.reg_rel = parse_real(v, l, "ensemble.reg_rel"); });
    t["ensemble.bootstrap"] = wrap([](C& c, S v, L l) { c.ec_cfg.bootstrap = parse_bool(v, l, "ensemble.bootstrap"); });
    t["ensemble.oob_search"] = wrap([](C& c, S v, L l) { c.ec_cfg.oob_search = parse_bool(v, l, "ensemble.oob_search"); });
    t["run.seed"] = wrap([](C& c, S v, L l) { c.master_seed = parse_number<std::uint64_t>(v, l, "run.seed"); });
    t["run.output"] = wrap([](C& c, S v, L) { c.output_dir = v; });
    return t;
  }();
  return table;
}

void set_preset_key(SourceParams& p, const std::string& key, const std::string& v, std::size_t line)
{
  if (key == "texture_scale")
    p.texture_scale = parse_real(v, line, key);
  else if (key == "noise_sigma")
    p.noise_sigma = parse_real(v, line, key);
  else if (key == "smooth_radius")
    p.smooth_radius = parse_number<int>(v, line, key);
  else if (key == "contrast")
    p.contrast = parse_real(v, line, key);
  else if (key == "base_level")
    p.base_level = parse_number<int>(v, line, key);
  else
    throw ConfigError(line, "unknown preset key '" + key + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text)
{
  ExperimentConfig cfg;
  std::set<std::string> seen, seen_sections, seen_presets;
  std::string section, preset;
  std::map<std::string, std::size_t> key_lines;
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    std::string s = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError(line, "malformed section header '" + s + "'");
      section = trim(s.substr(1, s.size() - 2));
      preset.clear();
      if (section.rfind("preset", 0) == 0 && section.size() > 6 && std::isspace(static_cast<unsigned char>(section[6]))) {
        preset = trim(section.substr(7));
        if (preset.rfind("dir:", 0) == 0) throw ConfigError(line, "preset names may not start with 'dir:'");
        if (!seen_presets.insert(preset).second) throw ConfigError(line, "duplicate section [preset " + preset + "]");
        cfg.presets.try_emplace(preset);
        continue;
      }
      static const std::set<std::string> known{"train", "test", "images", "features", "ensemble", "run"};
      if (!known.count(section)) throw ConfigError(line, "unknown section [" + section + "]");
      if (!seen_sections.insert(section).second) throw ConfigError(line, "duplicate section [" + section + "]");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError(line, "expected 'key = value'");
    if (section.empty()) throw ConfigError(line, "key outside of any section");
    const std::string name = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (!preset.empty()) {
      if (!seen.insert("preset " + preset + "." + name).second)
        throw ConfigError(line, "duplicate key '" + name + "' in [preset " + preset + "]");
      set_preset_key(cfg.presets[preset], name, value, line);
      continue;
    }
    const std::string key = section + "." + name;
    const auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(line, "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(line, "duplicate key '" + key + "'");
    it->second(cfg, value, line);
    key_lines[key] = line;
  }
  // Presets may be defined after the sources that name them.
  for (const auto& [key, src] : {std::pair{"train.source", &cfg.train_source}, std::pair{"test.source", &cfg.test_source}})
    if (!src->is_directory() && !cfg.presets.count(src->preset))
      throw ConfigError(key_lines.count(key) ? key_lines[key] : 0, "unknown source preset '" + src->preset + "'");
  return cfg;
}

ExperimentConfig load_config(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw ConfigError(0, "cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const ExperimentConfig& c)
{
  auto join = [](const auto& items, auto&& fmt) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) out += (i ? "," : "") + fmt(items[i]);
    return out;
  };
  auto real = [](double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "[train]\nsource = " << c.train_source.describe() << "\ncovers = " << c.n_train_covers
     << "\nalgorithm = " << to_string(c.train_embed.algorithm) << "\nrate = " << real(c.train_embed.rate)
     << "\n\n[test]\nsource = " << c.test_source.describe() << "\ncovers = " << c.n_test_cover
     << "\nstegos = " << c.n_test_stego << "\nalgorithm = " << to_string(c.test_embed.algorithm)
     << "\nrate = " << real(c.test_embed.rate) << "\n\n[images]\nwidth = " << c.width
     << "\nheight = " << c.height << "\n\n[features]\nkinds = "
     << join(c.feature_cfg.kinds, [](auto k) { return std::string(to_string(k)); })
     << "\nquantizations = " << join(c.feature_cfg.quantizations, [](int q) { return std::to_string(q); })
     << "\ntruncation = " << c.feature_cfg.truncation << "\norder = " << c.feature_cfg.cooc_order
     << "\ndirections = " << join(c.feature_cfg.directions, [](auto d) { return std::string(to_string(d)); })
     << "\nnormalize = " << (c.feature_cfg.normalize ? "true" : "false")
     << "\n\n[ensemble]\nlearners = " << c.ec_cfg.learners << "\nsubspace = " << c.ec_cfg.subspace
     << "\nreg_rel = " << real(c.ec_cfg.reg_rel) << "\nbootstrap = " << (c.ec_cfg.bootstrap ? "true" : "false")
     << "\noob_search = " << (c.ec_cfg.oob_search ? "true" : "false") << "\n\n[run]\nseed = " << c.master_seed
     << "\noutput = " << c.output_dir.string() << "\n";
  for (const auto& [name, p] : c.presets)
    os << "\n[preset " << name << "]\ntexture_scale = " << real(p.texture_scale)
       << "\nnoise_sigma = " << real(p.noise_sigma) << "\nsmooth_radius = " << p.smooth_radius
       << "\ncontrast = " << real(p.contrast) << "\nbase_level = " << p.base_level << "\n";
  return os.str();
}

std::vector<NamedImage> load_pgm_dir(const fs::path& dir)
{
  if (!fs::is_directory(dir)) throw std::runtime_error("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".pgm") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  std::vector<NamedImage> out;
  out.reserve(files.size());
  for (const auto& f : files) out.push_back({f.filename().string(), read_pgm_file(f.string())});
  return out;
}

namespace {

// `count` images from a source, skipping the first `offset` of a directory.
std::vector<NamedImage> acquire(const SourceSpec& src, const PresetTable& presets, std::size_t count,
                                std::size_t offset, std::size_t width, std::size_t height,
                                std::uint64_t seed)
{
  if (count == 0) return {};
  if (src.is_directory()) {
    auto all = load_pgm_dir(src.directory);
    if (all.size() < offset + count)
      throw std::runtime_error(src.directory.string() + ": need " + std::to_string(offset + count) +
                               " images, found " + std::to_string(all.size()));
    return {std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(offset)),
            std::make_move_iterator(all.begin() + static_cast<std::ptrdiff_t>(offset + count))};
  }
  const auto it = presets.find(src.preset);
  if (it == presets.end()) throw std::runtime_error("unknown source preset '" + src.preset + "'");
  auto images = generate_corpus(it->second, count, width, height, seed);
  std::vector<NamedImage> out;
  out.reserve(count);
  char name[64];
  for (std::size_t i = 0; i < images.size(); ++i) {
    std::snprintf(name, sizeof name, "%s#%06zu", src.preset.c_str(), i + 1);
    out.push_back({name, std::move(images[i])});
  }
  return out;
}

bool same_directory(const SourceSpec& a, const SourceSpec& b)
{
  if (!a.is_directory() || !b.is_directory()) return false;
  std::error_code ec;
  return fs::equivalent(a.directory, b.directory, ec);
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg)
{
  cfg.validate();
  const std::uint64_t seed = cfg.master_seed;

  auto train_named = acquire(cfg.train_source, cfg.presets, cfg.n_train_covers, 0, cfg.width, cfg.height,
                             rng::derive(seed, "train-corpus"));
  std::vector<ImageGray> train_covers;
  train_covers.reserve(train_named.size());
  for (auto& n : train_named) train_covers.push_back(std::move(n.image));

  const DatasetPair train = build_train_pair(train_covers, cfg.train_embed, rng::derive(seed, "train-pair"));
  EcConfig ec = cfg.ec_cfg;
  ec.seed = rng::derive(seed, "ensemble");

  ExperimentResult result;
  result.models = train_detectors(train, cfg.feature_cfg, ec);

  const std::size_t offset = same_directory(cfg.train_source, cfg.test_source) ? cfg.n_train_covers : 0;
  auto test_named = acquire(cfg.test_source, cfg.presets, cfg.n_test_cover + cfg.n_test_stego, offset, cfg.width,
                            cfg.height, rng::derive(seed, "test-corpus"));
  std::vector<ImageGray> test_images;
  const std::uint64_t stego_key = rng::derive(seed, "test-stego");
  for (std::size_t i = 0; i < test_named.size(); ++i) {
    if (i < cfg.n_test_cover) {
      test_images.push_back(std::move(test_named[i].image));
      result.labels.push_back(Label::kCover);
    } else {
      const std::size_t j = i - cfg.n_test_cover;
      test_images.push_back(embed(test_named[i].image, cfg.test_embed, rng::split(stego_key, j)));
      result.labels.push_back(Label::kStego);
    }
    result.names.push_back(test_named[i].name);
  }

  // The B set of the test side is built with the training embedding settings:
  // the analyst only knows what the detector was trained for.
  const DatasetPair test = build_test_pair(test_images, cfg.train_embed, rng::derive(seed, "test-pair"));
  result.verdicts = analyze(result.models, test, cfg.feature_cfg);
  result.report = summarize(result.verdicts, std::span<const Label>(result.labels));
  return result;
}

namespace {

std::ofstream open_out(const fs::path& p)
{
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot create " + p.string());
  return out;
}

}  // namespace

ExperimentResult cmd_experiment(const ExperimentConfig& cfg)
{
  ExperimentResult result = run_experiment(cfg);
  fs::create_directories(cfg.output_dir);
  {
    auto out = open_out(cfg.output_dir / "report.csv");
    write_report_csv(out, result.report);
  }
  {
    auto out = open_out(cfg.output_dir / "verdicts.csv");
    write_verdicts_csv(out, result.verdicts, result.names, std::span<const Label>(result.labels));
  }
  save_detector((cfg.output_dir / "detector.model").string(), result.models);
  {
    auto out = open_out(cfg.output_dir / "config.ini");
    out << format_config(cfg);
  }
  return result;
}

void cmd_synth(const std::string& preset, std::size_t count, std::size_t width, std::size_t height,
               std::uint64_t seed, const fs::path& out_dir, const PresetTable& presets)
{
  const auto it = presets.find(preset);
  if (it == presets.end()) throw std::invalid_argument("unknown source preset '" + preset + "'");
  const SourceParams* params = &it->second;
  if (count == 0) throw std::invalid_argument("synth: count must be >= 1");
  fs::create_directories(out_dir);
  auto manifest = open_out(out_dir / "manifest.csv");
  manifest << "file,seed\n";
  char name[64];
  for (std::size_t i = 0; i < count; ++i) {
    const std::uint64_t s = rng::split(seed, i);
    std::snprintf(name, sizeof name, "cover_%06zu.pgm", i + 1);
    write_pgm_file((out_dir / name).string(), generate_cover(*params, width, height, s));
    manifest << name << ',' << s << '\n';
  }
}

void cmd_embed(const fs::path& in_dir, const EmbedConfig& cfg, std::uint64_t seed, const fs::path& out_dir)
{
  cfg.validate();
  const auto images = load_pgm_dir(in_dir);
  fs::create_directories(out_dir);
  for (const auto& img : images) {
    const std::uint64_t s = rng::split(seed, rng::fnv1a64(img.name));
    write_pgm_file((out_dir / img.name).string(), embed(img.image, cfg, s));
  }
}

ChangeStats cmd_changestats(const fs::path& dir_a, const fs::path& dir_b, std::ostream& out)
{
  const auto a = load_pgm_dir(dir_a);
  const auto b = load_pgm_dir(dir_b);
  std::map<std::string, const ImageGray*> by_name;
  for (const auto& img : b) by_name[img.name] = &img.image;
  if (a.size() != b.size())
    throw std::runtime_error("changestats: " + std::to_string(a.size()) + " files vs " +
                             std::to_string(b.size()) + " files");

  ChangeStats total;
  out << kChangeStatsHeader << '\n';
  for (const auto& img : a) {
    const auto it = by_name.find(img.name);
    if (it == by_name.end()) throw std::runtime_error("changestats: no match for " + img.name + " in " + dir_b.string());
    const ChangeStats s = count_changes(img.image, *it->second);
    out << img.name << ',' << s.n_pm1 << ',' << s.n_pm2 << ',' << s.n_other << ',' << s.n_total << '\n';
    total += s;
  }
  out << "TOTAL," << total.n_pm1 << ',' << total.n_pm2 << ',' << total.n_other << ',' << total.n_total << '\n';
  return total;
}

void cmd_features(const fs::path& in_dir, const FeatureConfig& cfg, const std::optional<std::string>& label,
                  const fs::path& out_csv)
{
  const auto images = load_pgm_dir(in_dir);
  FeatureTable table;
  for (const auto& img : images) {
    table.rows.push_back(extract_features(img.image, cfg));
    if (label) table.labels.push_back(*label);
  }
  write_feature_csv(out_csv.string(), table);
}

DetectorModels cmd_train(const fs::path& cover_dir, const EmbedConfig& embed_cfg, const FeatureConfig& feat_cfg,
                         const EcConfig& ec_cfg, std::uint64_t seed, const fs::path& model_path)
{
  const auto named = load_pgm_dir(cover_dir);
  std::vector<ImageGray> covers;
  for (const auto& n : named) covers.push_back(n.image);
  const DatasetPair pair = build_train_pair(covers, embed_cfg, rng::derive(seed, "train-pair"));
  EcConfig ec = ec_cfg;
  ec.seed = rng::derive(seed, "ensemble");
  DetectorModels models = train_detectors(pair, feat_cfg, ec);
  if (model_path.has_parent_path()) fs::create_directories(model_path.parent_path());
  save_detector(model_path.string(), models);
  return models;
}

DetectOutcome cmd_detect(const fs::path& model_path, const fs::path& image_dir,
                         const std::optional<EmbedConfig>& embed_override, const FeatureConfig& feat_cfg,
                         std::uint64_t seed, const fs::path& out_dir)
{
  const DetectorModels models = load_detector(model_path.string());
  if (feat_cfg.fingerprint() != models.feature_fingerprint)
    throw DetectorError("detect: feature config '" + feat_cfg.fingerprint() +
                        "' does not match the model's '" + models.feature_fingerprint + "'");
  const auto named = load_pgm_dir(image_dir);
  if (named.empty()) throw std::runtime_error("detect: no .pgm files in " + image_dir.string());

  DetectOutcome outcome;
  std::vector<ImageGray> images;
  for (const auto& n : named) {
    images.push_back(n.image);
    outcome.names.push_back(n.name);
  }
  const EmbedConfig cfg = embed_override.value_or(models.embed_cfg);
  const DatasetPair test = build_test_pair(images, cfg, rng::derive(seed, "test-pair"));
  outcome.verdicts = analyze(models, test, feat_cfg);
  outcome.report = summarize(outcome.verdicts);
  if (outcome.report.n == 1) outcome.note = "n=1: prediction informational only";

  fs::create_directories(out_dir);
  {
    auto out = open_out(out_dir / "report.csv");
    write_report_csv(out, outcome.report);
  }
  {
    auto out = open_out(out_dir / "verdicts.csv");
    write_verdicts_csv(out, outcome.verdicts, outcome.names);
  }
  return outcome;
}

}  // namespace stegcheck
