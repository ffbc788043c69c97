#pragma once

// Embedding simulators: LSB matching and HILL-cost adaptive ±1 embedding
// through a payload-limited sender, plus change counting.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stegcheck/image.hpp"

namespace stegcheck {

enum class Algorithm { kLsbm, kHill };

const char* to_string(Algorithm a);
/// Accepts "LSBM" / "HILL" (case-insensitive).
Algorithm parse_algorithm(std::string_view s);

struct EmbedConfig {
  Algorithm algorithm = Algorithm::kLsbm;
  double rate = 0.4;  // bits per pixel

  void validate() const;
  bool operator==(const EmbedConfig&) const = default;
};

/// Per-pixel costs; +infinity marks a wet pixel.
using CostMap = RealPlane;

struct ChangeProbMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> probs;  // probability of +1 (= probability of -1)
};

struct ChangeStats {
  std::uint64_t n_pm1 = 0;
  std::uint64_t n_pm2 = 0;
  std::uint64_t n_other = 0;
  std::uint64_t n_total = 0;

  ChangeStats& operator+=(const ChangeStats& o);
  bool operator==(const ChangeStats&) const = default;
};

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kCostFloor = 1e-10;
inline constexpr double kDenominatorFloor = 1e-10;
inline constexpr double kLambdaMax = 1e6;
inline constexpr int kBisectionMaxIter = 200;
inline constexpr double kDefaultPayloadTol = 1e-3;
inline constexpr std::size_t kHillMinSide = 15;

/// Ternary entropy in bits of the distribution {p, p, 1 - 2p}.
double ternary_entropy(double p);

/// HILL: L2 (*) 1 / (L1 (*) |KB (*) X|) with 3x3 and 15x15 averaging kernels.
CostMap hill_cost(const ImageGray& img);

struct Calibration {
  double lambda = 0.0;      // multiplies normalized costs rho / cost_scale
  double cost_scale = 1.0;  // mean finite cost
  double entropy = 0.0;     // realized sum of ternary entropies, bits
  int iterations = 0;
  ChangeProbMap probs;
};

/// π_i = e^{-λρ_i} / (1 + 2e^{-λρ_i}) with λ bisected so Σ H3(π_i) matches
/// payload_bits within a relative tolerance.
Calibration calibrate_lambda(const CostMap& costs, double payload_bits,
                             double tol = kDefaultPayloadTol);

/// Probabilities at a fixed λ (normalized cost units).
ChangeProbMap change_probs(const CostMap& costs, double lambda, double cost_scale);
double total_entropy(const ChangeProbMap& probs);

ImageGray embed_lsbm(const ImageGray& img, double rate, std::uint64_t seed);
ImageGray embed_adaptive(const ImageGray& img, const CostMap& costs, double rate,
                         std::uint64_t seed);
ImageGray embed(const ImageGray& img, const EmbedConfig& cfg, std::uint64_t seed);

ChangeStats count_changes(const ImageGray& cover, const ImageGray& other);

}  // namespace stegcheck
