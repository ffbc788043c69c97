#include "stegcheck/embedding.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "stegcheck/rng.hpp"

namespace stegcheck {

const char* to_string(Algorithm a)
{
  switch (a) {
    case Algorithm::kLsbm: return "LSBM";
    case Algorithm::kHill: return "HILL";
  }
  return "?";
}

Algorithm parse_algorithm(std::string_view s)
{
  std::string up(s);
  for (char& c : up) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  if (up == "LSBM") return Algorithm::kLsbm;
  if (up == "HILL") return Algorithm::kHill;
  throw std::invalid_argument("unknown embedding algorithm '" + std::string(s) + "'");
}

void EmbedConfig::validate() const
{
  if (!(rate >= 0.0 && rate <= 1.0))
    throw std::invalid_argument("EmbedConfig: rate must be in [0, 1]");
}

ChangeStats& ChangeStats::operator+=(const ChangeStats& o)
{
  n_pm1 += o.n_pm1;
  n_pm2 += o.n_pm2;
  n_other += o.n_other;
  n_total += o.n_total;
  return *this;
}

double ternary_entropy(double p)
{
  double h = 0.0;
  if (p > 0.0) h -= 2.0 * p * std::log2(p);
  const double q = 1.0 - 2.0 * p;
  if (q > 0.0) h -= q * std::log2(q);
  return h;
}

CostMap hill_cost(const ImageGray& img)
{
  if (img.width() < kHillMinSide || img.height() < kHillMinSide)
    throw std::invalid_argument("hill_cost: image must be at least 15x15");

  RealPlane residual = convolve2d(RealPlane::from_image(img), kb_kernel());
  for (double& v : residual.values()) v = std::abs(v);
  RealPlane inverse = convolve2d(residual, Kernel::box(3));
  for (double& v : inverse.values()) v = 1.0 / std::max(v, kDenominatorFloor);
  CostMap rho = convolve2d(inverse, Kernel::box(15));
  for (double& v : rho.values()) v = std::max(v, kCostFloor);
  return rho;
}

namespace {

constexpr double kLambdaRelPrecision = 1e-9;
constexpr double kBracketGrowth = 1e3;
constexpr int kBracketMaxExpansions = 90;

double prob_at(double normalized_cost, double lambda)
{
  if (std::isinf(normalized_cost)) return 0.0;
  const double e = std::exp(-lambda * normalized_cost);
  return e / (1.0 + 2.0 * e);
}

double mean_finite_cost(const CostMap& costs, std::size_t& n_dry)
{
  double sum = 0.0;
  n_dry = 0;
  for (double v : costs.values()) {
    if (std::isinf(v)) continue;
    sum += v;
    ++n_dry;
  }
  return n_dry == 0 ? 1.0 : sum / static_cast<double>(n_dry);
}

double entropy_at(const CostMap& costs, double lambda, double scale)
{
  double h = 0.0;
  for (double v : costs.values()) h += ternary_entropy(prob_at(v / scale, lambda));
  return h;
}

}  // namespace

ChangeProbMap change_probs(const CostMap& costs, double lambda, double cost_scale)
{
  ChangeProbMap out{costs.width(), costs.height(), std::vector<double>(costs.size())};
  for (std::size_t i = 0; i < costs.size(); ++i) out.probs[i] = prob_at(costs[i] / cost_scale, lambda);
  return out;
}

double total_entropy(const ChangeProbMap& probs)
{
  double h = 0.0;
  for (double p : probs.probs) h += ternary_entropy(p);
  return h;
}

Calibration calibrate_lambda(const CostMap& costs, double payload_bits, double tol)
{
  for (double v : costs.values()) {
    if (std::isnan(v) || v < 0.0) throw EmbeddingError("calibrate_lambda: costs must be >= 0");
  }
  if (!(payload_bits >= 0.0)) throw EmbeddingError("calibrate_lambda: negative payload");

  std::size_t n_dry = 0;
  Calibration cal;
  cal.cost_scale = mean_finite_cost(costs, n_dry);
  if (!(cal.cost_scale > 0.0)) cal.cost_scale = 1.0;
  const double capacity = static_cast<double>(n_dry) * std::log2(3.0);
  if (payload_bits > capacity * (1.0 + 1e-12))
    throw EmbeddingError("calibrate_lambda: payload " + std::to_string(payload_bits) +
                         " bits exceeds capacity " + std::to_string(capacity) + " bits");

  if (payload_bits == 0.0) {
    cal.lambda = kLambdaMax;
    cal.probs = ChangeProbMap{costs.width(), costs.height(), std::vector<double>(costs.size(), 0.0)};
    return cal;
  }

  const double lower = payload_bits * (1.0 - tol);
  const double upper = payload_bits * (1.0 + tol);
  auto finish = [&](double lambda, double h, int iters) {
    cal.lambda = lambda;
    cal.entropy = h;
    cal.iterations = iters;
    cal.probs = change_probs(costs, lambda, cal.cost_scale);
    return cal;
  };

  const double h0 = entropy_at(costs, 0.0, cal.cost_scale);
  if (h0 <= upper) return finish(0.0, h0, 0);

  // Mean normalization leaves textured pixels with tiny normalized costs when
  // a few flat pixels carry huge ones; grow the bracket geometrically then.
  double lo = 0.0;
  double hi = kLambdaMax;
  int expansions = 0;
  while (entropy_at(costs, hi, cal.cost_scale) > upper) {
    if (++expansions > kBracketMaxExpansions)
      throw EmbeddingError("calibrate_lambda: entropy still exceeds payload at lambda " +
                           std::to_string(hi));
    lo = hi;
    hi *= kBracketGrowth;
  }
  double mid = 0.0;
  double h = h0;
  for (int it = 1; it <= kBisectionMaxIter; ++it) {
    mid = 0.5 * (lo + hi);
    h = entropy_at(costs, mid, cal.cost_scale);
    // Keep narrowing past the tolerance band so λ itself is pinned down.
    if (h >= lower && h <= upper && hi - lo <= kLambdaRelPrecision * mid) return finish(mid, h, it);
    if (h > payload_bits)
      lo = mid;
    else
      hi = mid;
  }
  throw EmbeddingError("calibrate_lambda: bisection did not converge after " +
                       std::to_string(kBisectionMaxIter) + " iterations (last lambda " +
                       std::to_string(mid) + ", entropy " + std::to_string(h) + ")");
}

namespace {

std::uint8_t step(std::uint8_t v, int delta)
{
  if (v == 0 && delta < 0) delta = +1;
  if (v == 255 && delta > 0) delta = -1;
  return static_cast<std::uint8_t>(v + delta);
}

}  // namespace

ImageGray embed_lsbm(const ImageGray& img, double rate, std::uint64_t seed)
{
  if (!(rate >= 0.0 && rate <= 1.0)) throw std::invalid_argument("embed_lsbm: rate must be in [0, 1]");
  ImageGray out = img;
  const std::size_t n = img.size();
  const auto k = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  if (k == 0) return out;

  // Partial Fisher-Yates: the first k entries are a uniform k-subset.
  std::vector<std::uint32_t> order(n);
  std::iota(order.begin(), order.end(), 0u);
  const std::uint64_t perm_key = rng::derive(seed, "lsbm-perm");
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + rng::below(rng::hash(perm_key, i), n - i);
    std::swap(order[i], order[j]);
  }

  const std::uint64_t msg_key = rng::derive(seed, "lsbm-msg");
  const std::uint64_t dir_key = rng::derive(seed, "lsbm-dir");
  for (std::size_t i = 0; i < k; ++i) {
    const std::uint32_t idx = order[i];
    const auto bit = static_cast<unsigned>(rng::hash(msg_key, idx) & 1u);
    if ((out[idx] & 1u) == bit) continue;
    const int delta = (rng::hash(dir_key, idx) & 1u) ? +1 : -1;
    out[idx] = step(out[idx], delta);
  }
  return out;
}

ImageGray embed_adaptive(const ImageGray& img, const CostMap& costs, double rate, std::uint64_t seed)
{
  if (!(rate >= 0.0 && rate <= 1.0))
    throw std::invalid_argument("embed_adaptive: rate must be in [0, 1]");
  if (costs.width() != img.width() || costs.height() != img.height())
    throw std::invalid_argument("embed_adaptive: cost map dimensions differ from image");
  ImageGray out = img;
  if (rate == 0.0) return out;

  const Calibration cal =
      calibrate_lambda(costs, rate * static_cast<double>(img.size()), kDefaultPayloadTol);
  const std::uint64_t key = rng::derive(seed, "adaptive");
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double p = cal.probs.probs[i];
    if (p <= 0.0) continue;
    const double u = rng::uniform01(rng::hash(key, i));
    if (u < p)
      out[i] = step(out[i], +1);
    else if (u < 2.0 * p)
      out[i] = step(out[i], -1);
  }
  return out;
}

ImageGray embed(const ImageGray& img, const EmbedConfig& cfg, std::uint64_t seed)
{
  cfg.validate();
  if (cfg.rate == 0.0) return img;
  switch (cfg.algorithm) {
    case Algorithm::kLsbm: return embed_lsbm(img, cfg.rate, seed);
    case Algorithm::kHill: return embed_adaptive(img, hill_cost(img), cfg.rate, seed);
  }
  return img;
}

ChangeStats count_changes(const ImageGray& cover, const ImageGray& other)
{
  if (cover.width() != other.width() || cover.height() != other.height())
    throw std::invalid_argument("count_changes: dimension mismatch");
  ChangeStats s;
  s.n_total = cover.size();
  for (std::size_t i = 0; i < cover.size(); ++i) {
    const int d = std::abs(int(cover[i]) - int(other[i]));
    if (d == 1)
      ++s.n_pm1;
    else if (d == 2)
      ++s.n_pm2;
    else if (d > 2)
      ++s.n_other;
  }
  return s;
}

}  // namespace stegcheck
