#pragma once

// Quantized residual co-occurrence features (a compact rich-model family).
//
// Block layout of a feature vector: kind-major, then quantization step, then
// direction; each block is a (2T+1)^order histogram whose bin index is the
// mixed-radix number (r1+T, r2+T, ..., r_order+T) with r1 most significant.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "stegcheck/image.hpp"

namespace stegcheck {

enum class ResidualKind { kFirstOrder, kSecondOrder, kKb };
enum class Direction { kHorizontal, kVertical };

const char* to_string(ResidualKind k);
const char* to_string(Direction d);
ResidualKind parse_residual_kind(std::string_view s);
Direction parse_direction(std::string_view s);

struct FeatureConfig {
  std::vector<ResidualKind> kinds{ResidualKind::kFirstOrder, ResidualKind::kSecondOrder,
                                  ResidualKind::kKb};
  std::vector<int> quantizations{1, 2};
  int truncation = 2;
  int cooc_order = 4;
  std::vector<Direction> directions{Direction::kHorizontal, Direction::kVertical};
  bool normalize = true;

  void validate() const;
  std::size_t bins_per_block() const;
  std::size_t dimension() const;
  /// Canonical one-line description; models store it to detect config drift.
  std::string fingerprint() const;

  bool operator==(const FeatureConfig&) const = default;
};

/// Integer residual plane with values in [-T, T].
struct ResidualPlane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::int8_t> values;

  int at(std::size_t r, std::size_t c) const { return values[r * width + c]; }
};

using FeatureVector = std::vector<double>;

/// Residual on valid interior positions only, then r = clamp(round(R / q), -T, T).
/// FIRST_ORDER and SECOND_ORDER are oriented by `dir`; KB is isotropic.
ResidualPlane compute_residual(const ImageGray& img, ResidualKind kind, int q, int truncation,
                               Direction dir = Direction::kHorizontal);

/// Unnormalized counts over all length-`order` windows along `dir`.
std::vector<double> cooccurrence(const ResidualPlane& residual, Direction dir, int order,
                                 int truncation);

FeatureVector extract_features(const ImageGray& img, const FeatureConfig& cfg);

/// Mean squared first-order horizontal residual (unquantized); a cheap
/// source-statistics probe.
double residual_energy(const ImageGray& img);
/// Mean absolute first-order horizontal residual.
double mean_abs_residual(const ImageGray& img);

// Feature CSV: header "label,f0,f1,..." (label column optional).
struct FeatureTable {
  std::vector<std::string> labels;  // empty when the file has no label column
  std::vector<FeatureVector> rows;
};

void write_feature_csv(const std::string& path, const FeatureTable& table);
FeatureTable read_feature_csv(const std::string& path);

}  // namespace stegcheck
