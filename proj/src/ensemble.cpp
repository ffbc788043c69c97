#include "stegcheck/ensemble.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

#include "stegcheck/rng.hpp"

namespace stegcheck {

namespace {

constexpr std::size_t kAutoSubspace = 200;
constexpr double kRidgeFloor = 1e-12;
constexpr std::size_t kOobGrid[] = {100, 200, 400};

}  // namespace

void EcConfig::validate(std::size_t dimension) const
{
  if (learners < 1 || learners % 2 == 0)
    throw EnsembleError("EcConfig: learner count must be odd and >= 1");
  if (dimension == 0) throw EnsembleError("EcConfig: feature dimension is zero");
  if (subspace > dimension)
    throw EnsembleError("EcConfig: subspace " + std::to_string(subspace) +
                        " exceeds feature dimension " + std::to_string(dimension));
  if (!(reg_rel > 0.0)) throw EnsembleError("EcConfig: reg_rel must be > 0");
  if (oob_search && !bootstrap) throw EnsembleError("EcConfig: oob_search requires bootstrap");
}

std::size_t EcConfig::effective_subspace(std::size_t dimension) const
{
  return subspace == 0 ? std::min(dimension, kAutoSubspace) : subspace;
}

namespace {

struct ClassCounts {
  std::size_t n0 = 0;
  std::size_t n1 = 0;
};

ClassCounts check_training_input(std::span<const FeatureVector> X, std::span<const int> y)
{
  if (X.size() != y.size()) throw EnsembleError("training: sample/label count mismatch");
  ClassCounts counts;
  const std::size_t d = X.empty() ? 0 : X.front().size();
  for (std::size_t i = 0; i < X.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) throw EnsembleError("training: labels must be 0 or 1");
    (y[i] ? counts.n1 : counts.n0)++;
    if (X[i].size() != d) throw EnsembleError("training: ragged feature rows");
    for (double v : X[i])
      if (!std::isfinite(v)) throw EnsembleError("training: non-finite feature value");
  }
  if (counts.n0 == 0 || counts.n1 == 0) throw EnsembleError("training: both classes must be present");
  return counts;
}

// Shared FLD core. `gather(i, out)` fills the subspace feature row of sample i.
template <typename Gather>
FldFit fit_fld(std::size_t n, std::size_t d, std::span<const int> y, Gather&& gather,
               double reg_abs, double reg_rel)
{
  Eigen::MatrixXd rows(n, d);
  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(d);
  std::size_t n0 = 0, n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    gather(i, rows.row(static_cast<Eigen::Index>(i)));
    if (y[i]) {
      mu1 += rows.row(i).transpose();
      ++n1;
    } else {
      mu0 += rows.row(i).transpose();
      ++n0;
    }
  }
  mu0 /= static_cast<double>(n0);
  mu1 /= static_cast<double>(n1);
  for (std::size_t i = 0; i < n; ++i) rows.row(i) -= (y[i] ? mu1 : mu0).transpose();

  Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(d, d);
  scatter.selfadjointView<Eigen::Lower>().rankUpdate(rows.transpose());
  scatter = scatter.selfadjointView<Eigen::Lower>();

  double ridge = reg_abs;
  if (reg_rel > 0.0) ridge = reg_rel * scatter.diagonal().mean() + kRidgeFloor;
  scatter.diagonal().array() += ridge;

  const Eigen::VectorXd diff = mu1 - mu0;
  Eigen::VectorXd w = scatter.ldlt().solve(diff);
  if (!w.allFinite()) throw EnsembleError("train_fld: singular within-class scatter");

  double threshold = 0.5 * w.dot(mu0 + mu1);
  if (w.dot(mu1) < w.dot(mu0)) {
    w = -w;
    threshold = -threshold;
  }
  return FldFit{std::vector<double>(w.data(), w.data() + w.size()), threshold};
}

}  // namespace

FldFit train_fld(std::span<const FeatureVector> X, std::span<const int> y, double reg_eps)
{
  check_training_input(X, y);
  if (!(reg_eps > 0.0)) throw EnsembleError("train_fld: reg_eps must be > 0");
  const std::size_t d = X.front().size();
  if (d == 0) throw EnsembleError("train_fld: zero-dimensional features");
  auto gather = [&](std::size_t i, auto row) {
    for (std::size_t k = 0; k < d; ++k) row(static_cast<Eigen::Index>(k)) = X[i][k];
  };
  return fit_fld(X.size(), d, y, gather, reg_eps, 0.0);
}

double Learner::project(std::span<const double> x) const
{
  double acc = 0.0;
  for (std::size_t k = 0; k < indices.size(); ++k) acc += weights[k] * x[indices[k]];
  return acc;
}

namespace {

struct TrainedLearner {
  Learner learner;
  std::vector<bool> in_bag;
};

TrainedLearner train_learner(std::span<const FeatureVector> X, std::span<const int> y,
                             std::size_t dimension, std::size_t subspace, const EcConfig& cfg,
                             int index)
{
  const std::uint64_t key = rng::split(rng::derive(cfg.seed, "learner"), static_cast<std::uint64_t>(index));

  // Uniform subset by partial Fisher-Yates, stored sorted.
  std::vector<std::uint32_t> pool(dimension);
  std::iota(pool.begin(), pool.end(), 0u);
  rng::Stream subset_rng(rng::derive(key, "subset"));
  for (std::size_t i = 0; i < subspace; ++i)
    std::swap(pool[i], pool[i + subset_rng.below(dimension - i)]);
  std::vector<std::uint32_t> indices(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(subspace));
  std::sort(indices.begin(), indices.end());

  // Stratified bootstrap: each class resampled to its own size.
  std::vector<std::size_t> sample;
  std::vector<bool> in_bag(X.size(), !cfg.bootstrap);
  if (cfg.bootstrap) {
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
    rng::Stream boot_rng(rng::derive(key, "bootstrap"));
    for (const auto& members : by_class) {
      for (std::size_t k = 0; k < members.size(); ++k) {
        const std::size_t pick = members[boot_rng.below(members.size())];
        sample.push_back(pick);
        in_bag[pick] = true;
      }
    }
  } else {
    sample.resize(X.size());
    std::iota(sample.begin(), sample.end(), std::size_t{0});
  }

  std::vector<int> sample_y(sample.size());
  for (std::size_t i = 0; i < sample.size(); ++i) sample_y[i] = y[sample[i]];
  auto gather = [&](std::size_t i, auto row) {
    const FeatureVector& src = X[sample[i]];
    for (std::size_t k = 0; k < indices.size(); ++k) row(static_cast<Eigen::Index>(k)) = src[indices[k]];
  };
  FldFit fit = fit_fld(sample.size(), indices.size(), sample_y, gather, 0.0, cfg.reg_rel);
  return {Learner{std::move(indices), std::move(fit.weights), fit.threshold}, std::move(in_bag)};
}

EnsembleModel train_fixed(std::span<const FeatureVector> X, std::span<const int> y,
                          const EcConfig& cfg, std::size_t subspace, std::string class0,
                          std::string class1, bool want_oob)
{
  const std::size_t dimension = X.front().size();
  EnsembleModel model;
  model.config = cfg;
  model.config.subspace = subspace;
  model.config.oob_search = false;
  model.dimension = dimension;
  model.class0 = std::move(class0);
  model.class1 = std::move(class1);
  model.learners.reserve(static_cast<std::size_t>(cfg.learners));

  std::vector<int> oob_votes(X.size(), 0), oob_count(X.size(), 0);
  for (int l = 0; l < cfg.learners; ++l) {
    TrainedLearner t = train_learner(X, y, dimension, subspace, cfg, l);
    if (want_oob) {
      for (std::size_t i = 0; i < X.size(); ++i) {
        if (t.in_bag[i]) continue;
        ++oob_count[i];
        if (t.learner.project(X[i]) > t.learner.threshold) ++oob_votes[i];
      }
    }
    model.learners.push_back(std::move(t.learner));
  }
  if (want_oob) {
    std::size_t errors = 0, scored = 0;
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (oob_count[i] == 0) continue;
      ++scored;
      // Ties (even OOB counts) are resolved toward class 0.
      const int label = 2 * oob_votes[i] > oob_count[i] ? 1 : 0;
      if (label != y[i]) ++errors;
    }
    model.oob_error = scored ? static_cast<double>(errors) / static_cast<double>(scored) : 1.0;
  }
  return model;
}

}  // namespace

EnsembleModel train_ensemble(std::span<const FeatureVector> X, std::span<const int> y,
                             const EcConfig& cfg, std::string class0, std::string class1)
{
  if (X.size() < 2) throw EnsembleError("train_ensemble: need at least 2 samples");
  check_training_input(X, y);
  const std::size_t dimension = X.front().size();
  cfg.validate(dimension);

  if (!cfg.oob_search)
    return train_fixed(X, y, cfg, cfg.effective_subspace(dimension), std::move(class0),
                       std::move(class1), false);

  EnsembleModel best;
  bool have = false;
  for (std::size_t d : kOobGrid) {
    if (d > dimension) continue;
    EnsembleModel m = train_fixed(X, y, cfg, d, class0, class1, true);
    if (!have || m.oob_error < best.oob_error) {
      best = std::move(m);
      have = true;
    }
  }
  if (!have) {
    best = train_fixed(X, y, cfg, dimension, std::move(class0), std::move(class1), true);
  }
  return best;
}

int predict_votes(const EnsembleModel& model, std::span<const double> x)
{
  if (x.size() != model.dimension)
    throw EnsembleError("predict: feature dimension " + std::to_string(x.size()) +
                        " does not match model dimension " + std::to_string(model.dimension));
  int votes = 0;
  for (const Learner& l : model.learners)
    if (l.project(x) > l.threshold) ++votes;
  return votes;
}

int predict(const EnsembleModel& model, std::span<const double> x)
{
  const int votes = predict_votes(model, x);
  return 2 * votes > static_cast<int>(model.learners.size()) ? 1 : 0;
}

namespace {

std::string fmt17(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string expect_line(std::istream& in, const std::string& key)
{
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) break;
  }
  if (!in && line.empty()) throw EnsembleError("model file: unexpected end, expected '" + key + "'");
  if (line.rfind(key, 0) != 0 || (line.size() > key.size() && line[key.size()] != ' '))
    throw EnsembleError("model file: expected '" + key + "', got '" + line + "'");
  return line.size() > key.size() ? line.substr(key.size() + 1) : std::string{};
}

template <typename T>
T parse_value(const std::string& text, const std::string& key)
{
  std::istringstream ss(text);
  T v{};
  if constexpr (std::is_same_v<T, double>) {
    std::string tok;
    ss >> tok;
    char* end = nullptr;
    v = std::strtod(tok.c_str(), &end);
    if (tok.empty() || *end != '\0') throw EnsembleError("model file: bad number for '" + key + "'");
  } else {
    if (!(ss >> v)) throw EnsembleError("model file: bad value for '" + key + "'");
  }
  return v;
}

}  // namespace

void write_ensemble(std::ostream& out, const EnsembleModel& model)
{
  const EcConfig& c = model.config;
  out << kEnsembleMagic << ' ' << kEnsembleFormatVersion << '\n';
  out << "dimension " << model.dimension << '\n';
  out << "learners " << c.learners << '\n';
  out << "subspace " << c.subspace << '\n';
  out << "reg_rel " << fmt17(c.reg_rel) << '\n';
  out << "bootstrap " << (c.bootstrap ? 1 : 0) << '\n';
  out << "seed " << c.seed << '\n';
  out << "oob_error " << fmt17(model.oob_error) << '\n';
  out << "classes " << model.class0 << ' ' << model.class1 << '\n';
  for (std::size_t l = 0; l < model.learners.size(); ++l) {
    const Learner& ln = model.learners[l];
    out << "learner " << l << '\n';
    out << "indices";
    for (auto i : ln.indices) out << ' ' << i;
    out << "\nweights";
    for (double w : ln.weights) out << ' ' << fmt17(w);
    out << "\nthreshold " << fmt17(ln.threshold) << '\n';
  }
  out << "end\n";
}

EnsembleModel read_ensemble(std::istream& in)
{
  const auto version = parse_value<int>(expect_line(in, kEnsembleMagic), kEnsembleMagic);
  if (version != kEnsembleFormatVersion)
    throw EnsembleError("model file: unsupported version " + std::to_string(version));
  EnsembleModel m;
  m.dimension = parse_value<std::size_t>(expect_line(in, "dimension"), "dimension");
  m.config.learners = parse_value<int>(expect_line(in, "learners"), "learners");
  m.config.subspace = parse_value<std::size_t>(expect_line(in, "subspace"), "subspace");
  m.config.reg_rel = parse_value<double>(expect_line(in, "reg_rel"), "reg_rel");
  m.config.bootstrap = parse_value<int>(expect_line(in, "bootstrap"), "bootstrap") != 0;
  m.config.seed = parse_value<std::uint64_t>(expect_line(in, "seed"), "seed");
  m.oob_error = parse_value<double>(expect_line(in, "oob_error"), "oob_error");
  {
    std::istringstream ss(expect_line(in, "classes"));
    if (!(ss >> m.class0 >> m.class1)) throw EnsembleError("model file: bad 'classes' line");
  }
  m.config.validate(m.dimension);

  for (int l = 0; l < m.config.learners; ++l) {
    if (parse_value<int>(expect_line(in, "learner"), "learner") != l)
      throw EnsembleError("model file: learners out of order");
    Learner ln;
    {
      std::istringstream ss(expect_line(in, "indices"));
      std::uint32_t i;
      while (ss >> i) {
        if (i >= m.dimension) throw EnsembleError("model file: feature index out of range");
        ln.indices.push_back(i);
      }
    }
    {
      std::istringstream ss(expect_line(in, "weights"));
      std::string tok;
      while (ss >> tok) ln.weights.push_back(parse_value<double>(tok, "weights"));
    }
    if (ln.indices.size() != m.config.subspace || ln.weights.size() != ln.indices.size())
      throw EnsembleError("model file: learner " + std::to_string(l) + " has inconsistent sizes");
    ln.threshold = parse_value<double>(expect_line(in, "threshold"), "threshold");
    m.learners.push_back(std::move(ln));
  }
  expect_line(in, "end");
  return m;
}

}  // namespace stegcheck
