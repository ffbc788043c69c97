#pragma once

// Inconsistency detection with a cover/stego classifier f_A and a
// stego/double-stego classifier f_B.
//
// A holds the images under analysis; B[i] is A[i] after one more embedding
// with a fresh key. For every test pair (a_i, b_i):
//
//   F1: if f_A(a_i) = S_A then f_B(b_i) must be D_B, otherwise f_B(b_i) must be S_B
//   F2: f_B(a_i) must be S_B and f_A(b_i) must be S_A
//
// An image is inconsistent when either filter fires. The classifier's error
// on a balanced test set is predicted as INC / (2 |A|), which lies in [0, 0.5].

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "stegcheck/embedding.hpp"
#include "stegcheck/ensemble.hpp"
#include "stegcheck/features.hpp"
#include "stegcheck/image.hpp"

namespace stegcheck {

class DetectorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Label { kCover, kStego };
enum class ClassA { kCover, kStego };             // C_A, S_A
enum class ClassB { kStego, kDoubleStego };       // S_B, D_B

const char* to_string(Label l);
const char* to_string(ClassA c);
const char* to_string(ClassB c);

struct DatasetPair {
  std::vector<ImageGray> a;
  std::vector<ImageGray> b;
  std::optional<std::vector<Label>> labels;  // describes A
  EmbedConfig embed_cfg;

  void validate() const;
};

/// Seeded shuffle, first half kept as cover, second half embedded once;
/// B[i] = embed(A[i]). An odd leftover image is dropped so A stays balanced.
DatasetPair build_train_pair(std::span<const ImageGray> covers, const EmbedConfig& cfg,
                             std::uint64_t seed);
/// A = images in input order, B[i] = embed(A[i]) with per-image keys.
DatasetPair build_test_pair(std::span<const ImageGray> images, const EmbedConfig& cfg,
                            std::uint64_t seed);

struct DetectorModels {
  EnsembleModel f_a;  // class0 = cover, class1 = stego
  EnsembleModel f_b;  // class0 = stego, class1 = double-stego
  std::string feature_fingerprint;
  EmbedConfig embed_cfg;

  ClassA classify_a(std::span<const double> x) const;
  ClassB classify_b(std::span<const double> x) const;
};

struct PairFeatures {
  std::vector<FeatureVector> a;
  std::vector<FeatureVector> b;
};

PairFeatures extract_pair_features(const DatasetPair& pair, const FeatureConfig& cfg);

DetectorModels train_detectors(const DatasetPair& pair, const FeatureConfig& feat_cfg,
                               const EcConfig& ec_cfg);
DetectorModels train_detectors(const PairFeatures& features, std::span<const Label> labels,
                               const FeatureConfig& feat_cfg, const EcConfig& ec_cfg,
                               const EmbedConfig& embed_cfg);

bool filter_f1(ClassA pred_a_of_a, ClassB pred_b_of_b);
bool filter_f2(ClassB pred_b_of_a, ClassA pred_a_of_b);

struct ImageVerdict {
  ClassA pred_a_of_a = ClassA::kCover;
  ClassB pred_b_of_b = ClassB::kStego;
  ClassB pred_b_of_a = ClassB::kStego;
  ClassA pred_a_of_b = ClassA::kStego;
  bool f1_flag = false;
  bool f2_flag = false;
  bool inconsistent = false;

  bool operator==(const ImageVerdict&) const = default;
};

ImageVerdict make_verdict(ClassA a_of_a, ClassB b_of_b, ClassB b_of_a, ClassA a_of_b);

using ClassifierA = std::function<ClassA(std::span<const double>)>;
using ClassifierB = std::function<ClassB(std::span<const double>)>;

std::vector<ImageVerdict> analyze_features(const ClassifierA& f_a, const ClassifierB& f_b,
                                           const PairFeatures& test);
std::vector<ImageVerdict> analyze(const DetectorModels& models, const DatasetPair& test,
                                  const FeatureConfig& feat_cfg);

struct Confusion {
  std::size_t tp = 0, tn = 0, fp = 0, fn = 0;
  double err = 0.0;
};

struct DetectionReport {
  std::size_t n = 0;
  std::size_t inc = 0, inc_c = 0, inc_s = 0;
  double err_pred = 0.0;
  std::optional<Confusion> confusion;
};

DetectionReport summarize(std::span<const ImageVerdict> verdicts,
                          std::optional<std::span<const Label>> labels = std::nullopt);

// Table-row CSV; metric cells are empty when labels are unknown.
inline constexpr const char* kReportHeader = "n,TP,TN,FP,FN,Err,Err_pred,INC,INC_C,INC_S";
std::string report_csv_row(const DetectionReport& report);
void write_report_csv(std::ostream& out, const DetectionReport& report);

inline constexpr const char* kVerdictHeader =
    "index,name,pred_A_of_a,pred_B_of_b,pred_B_of_a,pred_A_of_b,F1,F2,inconsistent,label";
void write_verdicts_csv(std::ostream& out, std::span<const ImageVerdict> verdicts,
                        std::span<const std::string> names,
                        std::optional<std::span<const Label>> labels = std::nullopt);

inline constexpr const char* kDetectorMagic = "stegcheck-detector";
inline constexpr int kDetectorFormatVersion = 1;
void write_detector(std::ostream& out, const DetectorModels& models);
DetectorModels read_detector(std::istream& in);
void save_detector(const std::string& path, const DetectorModels& models);
DetectorModels load_detector(const std::string& path);

}  // namespace stegcheck
