#pragma once

// Random-subspace ensemble of Fisher linear discriminants with majority voting.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegcheck/features.hpp"

namespace stegcheck {

class EnsembleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EcConfig {
  int learners = 51;          // odd
  std::size_t subspace = 0;   // 0 = auto: min(D, 200); an explicit value must be <= D
  double reg_rel = 1e-6;      // ridge = reg_rel * mean diag(S_W)
  bool bootstrap = true;
  std::uint64_t seed = 0;
  bool oob_search = false;    // pick subspace from {100, 200, 400} by out-of-bag error

  void validate(std::size_t dimension) const;
  /// Subspace size actually used for dimension D.
  std::size_t effective_subspace(std::size_t dimension) const;
  bool operator==(const EcConfig&) const = default;
};

struct FldFit {
  std::vector<double> weights;
  double threshold = 0.0;
};

/// Rows of X are samples; y holds 0/1. Solves (S_W + reg_eps I) w = mu1 - mu0
/// with S_W the pooled within-class scatter, threshold at the projected
/// midpoint of the class means, class 1 projecting above it.
FldFit train_fld(std::span<const FeatureVector> X, std::span<const int> y, double reg_eps);

struct Learner {
  std::vector<std::uint32_t> indices;
  std::vector<double> weights;
  double threshold = 0.0;

  double project(std::span<const double> x) const;
  bool operator==(const Learner&) const = default;
};

struct EnsembleModel {
  EcConfig config;
  std::size_t dimension = 0;
  std::string class0 = "0";
  std::string class1 = "1";
  std::vector<Learner> learners;
  double oob_error = -1.0;  // only set by the out-of-bag subspace search

  bool operator==(const EnsembleModel&) const = default;
};

EnsembleModel train_ensemble(std::span<const FeatureVector> X, std::span<const int> y,
                             const EcConfig& cfg, std::string class0 = "0",
                             std::string class1 = "1");

/// Number of learners voting for class 1, in [0, L].
int predict_votes(const EnsembleModel& model, std::span<const double> x);
/// 1 iff votes > L/2.
int predict(const EnsembleModel& model, std::span<const double> x);

// Text persistence; doubles written with 17 significant digits so a reload
// is bit-identical.
inline constexpr const char* kEnsembleMagic = "stegcheck-ensemble";
inline constexpr int kEnsembleFormatVersion = 1;

void write_ensemble(std::ostream& out, const EnsembleModel& model);
EnsembleModel read_ensemble(std::istream& in);

}  // namespace stegcheck
