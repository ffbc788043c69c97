#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "stegcheck/ensemble.hpp"
#include "stegcheck/rng.hpp"

using namespace stegcheck;

namespace {

struct Dataset {
  std::vector<FeatureVector> X;
  std::vector<int> y;
};

// Two Gaussian classes; class 1 shifted by `shift` in every coordinate.
Dataset gaussian_classes(std::size_t n_per_class, std::size_t dim, double shift, std::uint64_t seed)
{
  Dataset d;
  rng::Stream s(seed);
  for (int label : {0, 1})
    for (std::size_t i = 0; i < n_per_class; ++i) {
      FeatureVector x(dim);
      for (double& v : x) v = s.normal() + label * shift;
      d.X.push_back(std::move(x));
      d.y.push_back(label);
    }
  return d;
}

// Closed-form two-class Fisher direction for 2-D data via an explicit 2x2 inverse.
std::pair<double, double> closed_form_direction(const Dataset& d)
{
  double m[2][2] = {{0, 0}, {0, 0}};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < d.X.size(); ++i) {
    m[d.y[i]][0] += d.X[i][0];
    m[d.y[i]][1] += d.X[i][1];
    n[d.y[i]] += 1;
  }
  for (int c = 0; c < 2; ++c) m[c][0] /= n[c], m[c][1] /= n[c];
  double a = 0, b = 0, cc = 0;  // scatter [[a, b], [b, cc]]
  for (std::size_t i = 0; i < d.X.size(); ++i) {
    const double dx = d.X[i][0] - m[d.y[i]][0];
    const double dy = d.X[i][1] - m[d.y[i]][1];
    a += dx * dx;
    b += dx * dy;
    cc += dy * dy;
  }
  const double det = a * cc - b * b;
  const double u = m[1][0] - m[0][0], v = m[1][1] - m[0][1];
  return {(cc * u - b * v) / det, (-b * u + a * v) / det};
}

}  // namespace

TEST_CASE("train_fld on separated 1-D clusters")
{
  const std::vector<FeatureVector> X{{0.0}, {0.1}, {1.0}, {1.1}};
  const std::vector<int> y{0, 0, 1, 1};
  const auto fit = train_fld(X, y, 1e-9);
  REQUIRE(fit.weights.size() == 1);
  CHECK(fit.weights[0] > 0);
  CHECK(fit.threshold / fit.weights[0] == doctest::Approx(0.55));
  for (std::size_t i = 0; i < X.size(); ++i)
    CHECK((fit.weights[0] * X[i][0] > fit.threshold) == (y[i] == 1));
}

TEST_CASE("train_fld matches the closed-form 2-D solution")
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto d = gaussian_classes(40, 2, 1.5, seed);
    // Correlate the coordinates so the scatter is not diagonal.
    for (auto& x : d.X) x[1] = 0.6 * x[0] + 0.8 * x[1];
    const auto fit = train_fld(d.X, d.y, 1e-10);
    const auto [wx, wy] = closed_form_direction(d);
    const double cosine = (fit.weights[0] * wx + fit.weights[1] * wy) /
                          (std::hypot(fit.weights[0], fit.weights[1]) * std::hypot(wx, wy));
    CHECK(cosine > 0.999);
  }
}

TEST_CASE("train_fld degenerate and invalid inputs")
{
  const std::vector<FeatureVector> X{{1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}, {1.0, 2.0}};
  const std::vector<int> y{0, 0, 1, 1};
  FldFit fit;
  CHECK_NOTHROW(fit = train_fld(X, y, 1e-6));
  for (double w : fit.weights) CHECK(std::isfinite(w));

  CHECK_THROWS_AS(train_fld(X, std::vector<int>{0, 0, 0, 0}, 1e-6), EnsembleError);
  const std::vector<FeatureVector> bad{{1.0}, {NAN}};
  CHECK_THROWS_AS(train_fld(bad, std::vector<int>{0, 1}, 1e-6), EnsembleError);
}

TEST_CASE("train_ensemble is deterministic and separates separable data")
{
  const auto d = gaussian_classes(30, 40, 3.0, 5);
  EcConfig cfg;
  cfg.learners = 11;
  cfg.subspace = 10;
  cfg.seed = 123;
  const auto m1 = train_ensemble(d.X, d.y, cfg);
  const auto m2 = train_ensemble(d.X, d.y, cfg);
  CHECK(m1 == m2);
  CHECK(m1.learners.size() == 11);
  for (const auto& l : m1.learners) {
    CHECK(l.indices.size() == 10);
    for (auto i : l.indices) CHECK(i < 40);
  }
  std::size_t errors = 0;
  for (std::size_t i = 0; i < d.X.size(); ++i) errors += predict(m1, d.X[i]) != d.y[i];
  CHECK(errors == 0);

  // Class-1 mean gets every vote.
  FeatureVector mean1(40, 0.0);
  for (std::size_t i = 0; i < d.X.size(); ++i)
    if (d.y[i]) for (std::size_t k = 0; k < 40; ++k) mean1[k] += d.X[i][k] / 30.0;
  CHECK(predict_votes(m1, mean1) == 11);

  cfg.seed = 124;
  CHECK_FALSE(train_ensemble(d.X, d.y, cfg) == m1);
}

TEST_CASE("single learner without bootstrap reduces to one FLD")
{
  const auto d = gaussian_classes(20, 3, 1.0, 9);
  EcConfig cfg;
  cfg.learners = 1;
  cfg.subspace = 3;
  cfg.bootstrap = false;
  const auto m = train_ensemble(d.X, d.y, cfg);
  const auto fit = train_fld(d.X, d.y, 1e-6);
  REQUIRE(m.learners.size() == 1);
  const auto& l = m.learners[0];
  CHECK(l.indices == std::vector<std::uint32_t>{0, 1, 2});
  for (const auto& x : d.X) {
    const double p = l.project(x);
    CHECK(predict(m, x) == (p > l.threshold ? 1 : 0));
  }
  double cosine = 0, na = 0, nb = 0;
  for (int k = 0; k < 3; ++k) {
    cosine += l.weights[k] * fit.weights[k];
    na += l.weights[k] * l.weights[k];
    nb += fit.weights[k] * fit.weights[k];
  }
  CHECK(cosine / std::sqrt(na * nb) > 0.99);
}

TEST_CASE("votes stay in range and never tie")
{
  const auto d = gaussian_classes(15, 20, 0.3, 4);
  EcConfig cfg;
  cfg.learners = 7;
  cfg.subspace = 5;
  const auto m = train_ensemble(d.X, d.y, cfg);
  rng::Stream s(1);
  for (int t = 0; t < 100; ++t) {
    FeatureVector x(20);
    for (double& v : x) v = 3 * s.normal();
    const int votes = predict_votes(m, x);
    CHECK(votes >= 0);
    CHECK(votes <= 7);
    CHECK(2 * votes != 7);
    CHECK(predict(m, x) == (votes >= 4 ? 1 : 0));
  }
  CHECK_THROWS_AS(predict(m, FeatureVector(19)), EnsembleError);
}

TEST_CASE("EcConfig validation")
{
  const auto d = gaussian_classes(5, 4, 1.0, 1);
  EcConfig cfg;
  cfg.learners = 4;
  CHECK_THROWS_AS(train_ensemble(d.X, d.y, cfg), EnsembleError);
  cfg.learners = 3;
  cfg.subspace = 5;
  CHECK_THROWS_AS(train_ensemble(d.X, d.y, cfg), EnsembleError);
  cfg.subspace = 0;
  CHECK(train_ensemble(d.X, d.y, cfg).learners[0].indices.size() == 4);
  CHECK_THROWS_AS(train_ensemble(d.X, std::vector<int>(10, 1), cfg), EnsembleError);
}

TEST_CASE("out-of-bag subspace search picks from the grid")
{
  const auto d = gaussian_classes(40, 450, 0.4, 12);
  EcConfig cfg;
  cfg.learners = 5;
  cfg.oob_search = true;
  const auto m = train_ensemble(d.X, d.y, cfg);
  const auto s = m.config.subspace;
  CHECK((s == 100 || s == 200 || s == 400));
  CHECK(m.oob_error >= 0.0);
  CHECK(m.oob_error <= 1.0);
}

TEST_CASE("model file reloads bit-identically")
{
  const auto d = gaussian_classes(20, 30, 1.0, 77);
  EcConfig cfg;
  cfg.learners = 5;
  cfg.subspace = 7;
  cfg.seed = 0xDEADBEEFCAFEULL;
  const auto m = train_ensemble(d.X, d.y, cfg, "cover", "stego");
  std::stringstream ss;
  write_ensemble(ss, m);
  const auto back = read_ensemble(ss);
  CHECK(back == m);
  std::stringstream again;
  write_ensemble(again, back);
  std::stringstream first;
  write_ensemble(first, m);
  CHECK(again.str() == first.str());

  std::stringstream broken("stegcheck-ensemble 2\n");
  CHECK_THROWS_AS(read_ensemble(broken), EnsembleError);
}
