#pragma once

// Grayscale rasters, PGM (P5) I/O, and the padding/convolution primitives.

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stegcheck {

/// 8-bit grayscale raster, row-major.
class ImageGray {
 public:
  ImageGray() = default;
  ImageGray(std::size_t width, std::size_t height, std::uint8_t fill = 0);
  ImageGray(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return pixels_.size(); }
  bool empty() const { return pixels_.empty(); }

  std::uint8_t at(std::size_t row, std::size_t col) const { return pixels_[row * width_ + col]; }
  std::uint8_t& at(std::size_t row, std::size_t col) { return pixels_[row * width_ + col]; }
  std::uint8_t operator[](std::size_t i) const { return pixels_[i]; }
  std::uint8_t& operator[](std::size_t i) { return pixels_[i]; }

  std::span<const std::uint8_t> pixels() const { return pixels_; }
  std::span<std::uint8_t> pixels() { return pixels_; }

  bool operator==(const ImageGray&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<std::uint8_t> pixels_;
};

/// Real-valued plane (residuals, costs). +infinity is allowed in cost planes only.
class RealPlane {
 public:
  RealPlane() = default;
  RealPlane(std::size_t width, std::size_t height, double fill = 0.0);
  RealPlane(std::size_t width, std::size_t height, std::vector<double> values);

  static RealPlane from_image(const ImageGray& img);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t size() const { return values_.size(); }

  double at(std::size_t row, std::size_t col) const { return values_[row * width_ + col]; }
  double& at(std::size_t row, std::size_t col) { return values_[row * width_ + col]; }
  double operator[](std::size_t i) const { return values_[i]; }
  double& operator[](std::size_t i) { return values_[i]; }

  std::span<const double> values() const { return values_; }
  std::span<double> values() { return values_; }

  bool operator==(const RealPlane&) const = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::vector<double> values_;
};

enum class PgmErrorKind {
  kBadMagic,
  kBadHeader,
  kBadMaxval,
  kZeroDimension,
  kTruncatedPayload,
  kIo,
};

const char* to_string(PgmErrorKind kind);

class PgmError : public std::runtime_error {
 public:
  PgmError(PgmErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  PgmErrorKind kind() const { return kind_; }

 private:
  PgmErrorKind kind_;
};

/// Strict binary PGM parser: "P5", maxval 255, '#' comments in the header.
ImageGray load_pgm(std::span<const std::uint8_t> bytes);
/// Canonical "P5\n<w> <h>\n255\n" + raw pixels.
std::vector<std::uint8_t> save_pgm(const ImageGray& img);

ImageGray read_pgm_file(const std::string& path);
void write_pgm_file(const std::string& path, const ImageGray& img);

/// Symmetric reflection about the border pixel (…c b | a b c | b a…).
/// Requires margin <= min(width, height).
RealPlane mirror_pad(const RealPlane& plane, std::size_t margin);

/// Square or rectangular kernel with odd sides, row-major.
struct Kernel {
  std::size_t rows = 1;
  std::size_t cols = 1;
  std::vector<double> taps{1.0};

  double at(std::size_t r, std::size_t c) const { return taps[r * cols + c]; }
  static Kernel box(std::size_t side);
};

/// Ker-Bohme "KB" 3x3 high-pass: [[-1,2,-1],[2,-4,2],[-1,2,-1]].
Kernel kb_kernel();

/// Same-size cross-correlation (kernel not flipped) with mirror padding.
RealPlane convolve2d(const RealPlane& plane, const Kernel& kernel);

}  // namespace stegcheck
