#include "stegcheck/detector.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "stegcheck/rng.hpp"

namespace stegcheck {

const char* to_string(Label l) { return l == Label::kCover ? "cover" : "stego"; }
const char* to_string(ClassA c) { return c == ClassA::kCover ? "C_A" : "S_A"; }
const char* to_string(ClassB c) { return c == ClassB::kStego ? "S_B" : "D_B"; }

void DatasetPair::validate() const
{
  if (a.size() != b.size()) throw DetectorError("DatasetPair: |A| != |B|");
  if (labels && labels->size() != a.size()) throw DetectorError("DatasetPair: |labels| != |A|");
}

DatasetPair build_train_pair(std::span<const ImageGray> covers, const EmbedConfig& cfg,
                             std::uint64_t seed)
{
  if (covers.size() < 2) throw DetectorError("build_train_pair: need at least 2 covers");
  cfg.validate();

  std::vector<std::size_t> order(covers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng::Stream shuffle(rng::derive(seed, "split"));
  for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

  const std::size_t half = covers.size() / 2;
  const std::uint64_t stego_key = rng::derive(seed, "train-stego");
  const std::uint64_t b_key = rng::derive(seed, "train-B");

  DatasetPair pair;
  pair.embed_cfg = cfg;
  pair.labels.emplace();
  for (std::size_t i = 0; i < 2 * half; ++i) {
    const ImageGray& src = covers[order[i]];
    if (i < half) {
      pair.a.push_back(src);
      pair.labels->push_back(Label::kCover);
    } else {
      pair.a.push_back(embed(src, cfg, rng::split(stego_key, i)));
      pair.labels->push_back(Label::kStego);
    }
    pair.b.push_back(embed(pair.a.back(), cfg, rng::split(b_key, i)));
  }
  return pair;
}

DatasetPair build_test_pair(std::span<const ImageGray> images, const EmbedConfig& cfg,
                            std::uint64_t seed)
{
  if (images.empty()) throw DetectorError("build_test_pair: empty input");
  cfg.validate();
  const std::uint64_t b_key = rng::derive(seed, "test-B");
  DatasetPair pair;
  pair.embed_cfg = cfg;
  pair.a.assign(images.begin(), images.end());
  pair.b.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i)
    pair.b.push_back(embed(images[i], cfg, rng::split(b_key, i)));
  return pair;
}

ClassA DetectorModels::classify_a(std::span<const double> x) const
{
  return predict(f_a, x) ? ClassA::kStego : ClassA::kCover;
}

ClassB DetectorModels::classify_b(std::span<const double> x) const
{
  return predict(f_b, x) ? ClassB::kDoubleStego : ClassB::kStego;
}

PairFeatures extract_pair_features(const DatasetPair& pair, const FeatureConfig& cfg)
{
  pair.validate();
  PairFeatures out;
  out.a.reserve(pair.a.size());
  out.b.reserve(pair.b.size());
  for (const auto& img : pair.a) out.a.push_back(extract_features(img, cfg));
  for (const auto& img : pair.b) out.b.push_back(extract_features(img, cfg));
  return out;
}

DetectorModels train_detectors(const PairFeatures& features, std::span<const Label> labels,
                               const FeatureConfig& feat_cfg, const EcConfig& ec_cfg,
                               const EmbedConfig& embed_cfg)
{
  if (features.a.size() != labels.size() || features.b.size() != labels.size())
    throw DetectorError("train_detectors: feature/label count mismatch");
  std::size_t n_stego = 0;
  for (Label l : labels) n_stego += l == Label::kStego;
  if (2 * n_stego != labels.size()) throw DetectorError("train_detectors: training pair is not balanced");

  // B[i] inherits one more embedding: cover -> S_B (0), stego -> D_B (1).
  std::vector<int> y(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) y[i] = labels[i] == Label::kStego ? 1 : 0;

  DetectorModels models;
  EcConfig cfg_a = ec_cfg;
  cfg_a.seed = rng::derive(ec_cfg.seed, "f_A");
  EcConfig cfg_b = ec_cfg;
  cfg_b.seed = rng::derive(ec_cfg.seed, "f_B");
  models.f_a = train_ensemble(features.a, y, cfg_a, "cover", "stego");
  models.f_b = train_ensemble(features.b, y, cfg_b, "stego", "double-stego");
  models.feature_fingerprint = feat_cfg.fingerprint();
  models.embed_cfg = embed_cfg;
  return models;
}

DetectorModels train_detectors(const DatasetPair& pair, const FeatureConfig& feat_cfg,
                               const EcConfig& ec_cfg)
{
  if (!pair.labels) throw DetectorError("train_detectors: training pair is unlabeled");
  pair.validate();
  return train_detectors(extract_pair_features(pair, feat_cfg), *pair.labels, feat_cfg, ec_cfg,
                         pair.embed_cfg);
}

bool filter_f1(ClassA pred_a_of_a, ClassB pred_b_of_b)
{
  if (pred_a_of_a == ClassA::kStego) return pred_b_of_b != ClassB::kDoubleStego;
  return pred_b_of_b != ClassB::kStego;
}

bool filter_f2(ClassB pred_b_of_a, ClassA pred_a_of_b)
{
  return pred_b_of_a != ClassB::kStego || pred_a_of_b != ClassA::kStego;
}

ImageVerdict make_verdict(ClassA a_of_a, ClassB b_of_b, ClassB b_of_a, ClassA a_of_b)
{
  ImageVerdict v{a_of_a, b_of_b, b_of_a, a_of_b};
  v.f1_flag = filter_f1(a_of_a, b_of_b);
  v.f2_flag = filter_f2(b_of_a, a_of_b);
  v.inconsistent = v.f1_flag || v.f2_flag;
  return v;
}

std::vector<ImageVerdict> analyze_features(const ClassifierA& f_a, const ClassifierB& f_b,
                                           const PairFeatures& test)
{
  if (test.a.size() != test.b.size()) throw DetectorError("analyze: |A| != |B|");
  std::vector<ImageVerdict> out;
  out.reserve(test.a.size());
  for (std::size_t i = 0; i < test.a.size(); ++i)
    out.push_back(make_verdict(f_a(test.a[i]), f_b(test.b[i]), f_b(test.a[i]), f_a(test.b[i])));
  return out;
}

std::vector<ImageVerdict> analyze(const DetectorModels& models, const DatasetPair& test,
                                  const FeatureConfig& feat_cfg)
{
  if (feat_cfg.fingerprint() != models.feature_fingerprint)
    throw DetectorError("analyze: feature config '" + feat_cfg.fingerprint() +
                        "' does not match the models' '" + models.feature_fingerprint + "'");
  const auto features = extract_pair_features(test, feat_cfg);
  return analyze_features([&](auto x) { return models.classify_a(x); },
                          [&](auto x) { return models.classify_b(x); }, features);
}

DetectionReport summarize(std::span<const ImageVerdict> verdicts,
                          std::optional<std::span<const Label>> labels)
{
  if (labels && labels->size() != verdicts.size())
    throw DetectorError("summarize: " + std::to_string(labels->size()) + " labels for " +
                        std::to_string(verdicts.size()) + " verdicts");
  DetectionReport r;
  r.n = verdicts.size();
  for (const auto& v : verdicts) {
    if (!v.inconsistent) continue;
    ++r.inc;
    (v.pred_a_of_a == ClassA::kCover ? r.inc_c : r.inc_s)++;
  }
  r.err_pred = r.n ? static_cast<double>(r.inc) / (2.0 * static_cast<double>(r.n)) : 0.0;

  if (labels) {
    Confusion c;
    for (std::size_t i = 0; i < verdicts.size(); ++i) {
      const bool stego = (*labels)[i] == Label::kStego;
      const bool said_stego = verdicts[i].pred_a_of_a == ClassA::kStego;
      if (stego && said_stego) ++c.tp;
      else if (!stego && !said_stego) ++c.tn;
      else if (!stego && said_stego) ++c.fp;
      else ++c.fn;
    }
    const std::size_t total = c.tp + c.tn + c.fp + c.fn;
    c.err = total ? static_cast<double>(c.fp + c.fn) / static_cast<double>(total) : 0.0;
    r.confusion = c;
  }
  return r;
}

std::string report_csv_row(const DetectionReport& r)
{
  char buf[64];
  std::ostringstream os;
  os << r.n << ',';
  if (r.confusion) {
    const auto& c = *r.confusion;
    std::snprintf(buf, sizeof buf, "%.6f", c.err);
    os << c.tp << ',' << c.tn << ',' << c.fp << ',' << c.fn << ',' << buf << ',';
  } else {
    os << ",,,,,";
  }
  std::snprintf(buf, sizeof buf, "%.6f", r.err_pred);
  os << buf << ',' << r.inc << ',' << r.inc_c << ',' << r.inc_s;
  return os.str();
}

void write_report_csv(std::ostream& out, const DetectionReport& report)
{
  out << kReportHeader << '\n' << report_csv_row(report) << '\n';
}

void write_verdicts_csv(std::ostream& out, std::span<const ImageVerdict> verdicts,
                        std::span<const std::string> names,
                        std::optional<std::span<const Label>> labels)
{
  out << kVerdictHeader << '\n';
  for (std::size_t i = 0; i < verdicts.size(); ++i) {
    const auto& v = verdicts[i];
    out << i << ',' << (i < names.size() ? names[i] : std::string{}) << ','
        << to_string(v.pred_a_of_a) << ',' << to_string(v.pred_b_of_b) << ','
        << to_string(v.pred_b_of_a) << ',' << to_string(v.pred_a_of_b) << ',' << int(v.f1_flag)
        << ',' << int(v.f2_flag) << ',' << int(v.inconsistent) << ','
        << (labels ? to_string((*labels)[i]) : "") << '\n';
  }
}

void write_detector(std::ostream& out, const DetectorModels& m)
{
  char rate[40];
  std::snprintf(rate, sizeof rate, "%.17g", m.embed_cfg.rate);
  out << kDetectorMagic << ' ' << kDetectorFormatVersion << '\n';
  out << "features " << m.feature_fingerprint << '\n';
  out << "embed " << to_string(m.embed_cfg.algorithm) << ' ' << rate << '\n';
  out << "model f_A\n";
  write_ensemble(out, m.f_a);
  out << "model f_B\n";
  write_ensemble(out, m.f_b);
}

DetectorModels read_detector(std::istream& in)
{
  auto line_with = [&](const std::string& key) {
    std::string line;
    if (!std::getline(in, line) || line.rfind(key + " ", 0) != 0)
      throw DetectorError("detector file: expected '" + key + "' line");
    return line.substr(key.size() + 1);
  };
  if (line_with(kDetectorMagic) != std::to_string(kDetectorFormatVersion))
    throw DetectorError("detector file: unsupported version");
  DetectorModels m;
  m.feature_fingerprint = line_with("features");
  {
    std::istringstream ss(line_with("embed"));
    std::string algo, rate;
    if (!(ss >> algo >> rate)) throw DetectorError("detector file: bad 'embed' line");
    m.embed_cfg.algorithm = parse_algorithm(algo);
    m.embed_cfg.rate = std::stod(rate);
  }
  if (line_with("model") != "f_A") throw DetectorError("detector file: expected model f_A");
  m.f_a = read_ensemble(in);
  if (line_with("model") != "f_B") throw DetectorError("detector file: expected model f_B");
  m.f_b = read_ensemble(in);
  if (m.f_a.dimension != m.f_b.dimension)
    throw DetectorError("detector file: f_A and f_B feature dimensions differ");
  return m;
}

void save_detector(const std::string& path, const DetectorModels& models)
{
  std::ofstream out(path);
  if (!out) throw DetectorError("cannot create " + path);
  write_detector(out, models);
  if (!out) throw DetectorError("write failed for " + path);
}

DetectorModels load_detector(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw DetectorError("cannot open " + path);
  return read_detector(in);
}

}  // namespace stegcheck
