#include "stegcheck/image.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

namespace stegcheck {

ImageGray::ImageGray(std::size_t width, std::size_t height, std::uint8_t fill)
    : width_(width), height_(height), pixels_(width * height, fill)
{
  if (width == 0 || height == 0) throw std::invalid_argument("ImageGray: zero dimension");
}

ImageGray::ImageGray(std::size_t width, std::size_t height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels))
{
  if (width == 0 || height == 0) throw std::invalid_argument("ImageGray: zero dimension");
  if (pixels_.size() != width * height)
    throw std::invalid_argument("ImageGray: pixel count does not match dimensions");
}

RealPlane::RealPlane(std::size_t width, std::size_t height, double fill)
    : width_(width), height_(height), values_(width * height, fill)
{
}

RealPlane::RealPlane(std::size_t width, std::size_t height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values))
{
  if (values_.size() != width * height)
    throw std::invalid_argument("RealPlane: value count does not match dimensions");
}

RealPlane RealPlane::from_image(const ImageGray& img)
{
  std::vector<double> v(img.pixels().begin(), img.pixels().end());
  return RealPlane(img.width(), img.height(), std::move(v));
}

const char* to_string(PgmErrorKind kind)
{
  switch (kind) {
    case PgmErrorKind::kBadMagic: return "bad_magic";
    case PgmErrorKind::kBadHeader: return "bad_header";
    case PgmErrorKind::kBadMaxval: return "bad_maxval";
    case PgmErrorKind::kZeroDimension: return "zero_dimension";
    case PgmErrorKind::kTruncatedPayload: return "truncated_payload";
    case PgmErrorKind::kIo: return "io";
  }
  return "unknown";
}

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void skip_space_and_comments()
  {
    while (pos_ < bytes_.size()) {
      const auto c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n' && bytes_[pos_] != '\r') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::uint64_t read_uint(const char* field)
  {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_]))
      throw PgmError(PgmErrorKind::kBadHeader, std::string("pgm: expected integer for ") + field);
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1ULL << 32))
        throw PgmError(PgmErrorKind::kBadHeader, std::string("pgm: ") + field + " too large");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  void expect_single_space()
  {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_]))
      throw PgmError(PgmErrorKind::kBadHeader, "pgm: missing whitespace after maxval");
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  void advance(std::size_t n) { pos_ += n; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

ImageGray load_pgm(std::span<const std::uint8_t> bytes)
{
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    std::string got = bytes.size() >= 2 ? std::string{char(bytes[0]), char(bytes[1])} : "";
    throw PgmError(PgmErrorKind::kBadMagic, "pgm: unsupported magic '" + got + "' (expected P5)");
  }
  HeaderReader reader(bytes);
  reader.advance(2);
  if (reader.pos() < bytes.size() && !std::isspace(bytes[reader.pos()]) && bytes[reader.pos()] != '#')
    throw PgmError(PgmErrorKind::kBadMagic, "pgm: unsupported magic (expected P5)");

  const auto width = reader.read_uint("width");
  const auto height = reader.read_uint("height");
  const auto maxval = reader.read_uint("maxval");
  if (width == 0 || height == 0)
    throw PgmError(PgmErrorKind::kZeroDimension, "pgm: zero width or height");
  if (maxval != 255)
    throw PgmError(PgmErrorKind::kBadMaxval,
                   "pgm: maxval " + std::to_string(maxval) + " unsupported (expected 255)");
  reader.expect_single_space();

  const std::size_t n = width * height;
  if (bytes.size() - reader.pos() < n)
    throw PgmError(PgmErrorKind::kTruncatedPayload,
                   "pgm: payload has " + std::to_string(bytes.size() - reader.pos()) +
                       " bytes, expected " + std::to_string(n));
  std::vector<std::uint8_t> pixels(bytes.begin() + reader.pos(), bytes.begin() + reader.pos() + n);
  return ImageGray(width, height, std::move(pixels));
}

std::vector<std::uint8_t> save_pgm(const ImageGray& img)
{
  const std::string header =
      "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.pixels().begin(), img.pixels().end());
  return out;
}

ImageGray read_pgm_file(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError(PgmErrorKind::kIo, "pgm: cannot open " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return load_pgm(bytes);
  } catch (const PgmError& e) {
    throw PgmError(e.kind(), path + ": " + e.what());
  }
}

void write_pgm_file(const std::string& path, const ImageGray& img)
{
  std::ofstream out(path, std::ios::binary);
  if (!out) throw PgmError(PgmErrorKind::kIo, "pgm: cannot create " + path);
  const auto bytes = save_pgm(img);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw PgmError(PgmErrorKind::kIo, "pgm: write failed for " + path);
}

namespace {

// Maps an index in [-margin, n + margin) onto [0, n) by symmetric reflection
// that does not repeat the edge sample.
std::size_t reflect(std::ptrdiff_t i, std::size_t n)
{
  if (n == 1) return 0;
  const auto period = static_cast<std::ptrdiff_t>(2 * (n - 1));
  std::ptrdiff_t k = i % period;
  if (k < 0) k += period;
  if (k >= static_cast<std::ptrdiff_t>(n)) k = period - k;
  return static_cast<std::size_t>(k);
}

}  // namespace

RealPlane mirror_pad(const RealPlane& plane, std::size_t margin)
{
  const std::size_t w = plane.width();
  const std::size_t h = plane.height();
  if (margin > std::min(w, h))
    throw std::invalid_argument("mirror_pad: margin " + std::to_string(margin) +
                                " exceeds plane size");
  if (margin == 0) return plane;
  const std::size_t pw = w + 2 * margin;
  const std::size_t ph = h + 2 * margin;
  RealPlane out(pw, ph);
  const auto m = static_cast<std::ptrdiff_t>(margin);
  for (std::size_t r = 0; r < ph; ++r) {
    const std::size_t sr = reflect(static_cast<std::ptrdiff_t>(r) - m, h);
    for (std::size_t c = 0; c < pw; ++c) {
      out.at(r, c) = plane.at(sr, reflect(static_cast<std::ptrdiff_t>(c) - m, w));
    }
  }
  return out;
}

Kernel Kernel::box(std::size_t side)
{
  if (side % 2 == 0) throw std::invalid_argument("Kernel::box: side must be odd");
  const double v = 1.0 / static_cast<double>(side * side);
  return Kernel{side, side, std::vector<double>(side * side, v)};
}

Kernel kb_kernel()
{
  return Kernel{3, 3, {-1, 2, -1, 2, -4, 2, -1, 2, -1}};
}

RealPlane convolve2d(const RealPlane& plane, const Kernel& kernel)
{
  if (kernel.rows % 2 == 0 || kernel.cols % 2 == 0)
    throw std::invalid_argument("convolve2d: kernel sides must be odd");
  if (kernel.taps.size() != kernel.rows * kernel.cols)
    throw std::invalid_argument("convolve2d: kernel tap count mismatch");
  if (plane.width() < kernel.cols || plane.height() < kernel.rows)
    throw std::invalid_argument("convolve2d: plane smaller than kernel");

  const std::size_t hr = kernel.rows / 2;
  const std::size_t hc = kernel.cols / 2;
  const RealPlane padded = mirror_pad(plane, std::max(hr, hc));
  const std::size_t off_r = std::max(hr, hc) - hr;
  const std::size_t off_c = std::max(hr, hc) - hc;

  RealPlane out(plane.width(), plane.height());
  for (std::size_t r = 0; r < plane.height(); ++r) {
    for (std::size_t c = 0; c < plane.width(); ++c) {
      double acc = 0.0;
      for (std::size_t kr = 0; kr < kernel.rows; ++kr) {
        for (std::size_t kc = 0; kc < kernel.cols; ++kc) {
          acc += kernel.at(kr, kc) * padded.at(r + kr + off_r, c + kc + off_c);
        }
      }
      out.at(r, c) = acc;
    }
  }
  return out;
}

}  // namespace stegcheck
