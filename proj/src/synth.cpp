#include "stegcheck/synth.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "stegcheck/rng.hpp"

namespace stegcheck {

void SourceParams::validate() const
{
  if (!(texture_scale > 0.0) || !std::isfinite(texture_scale))
    throw std::invalid_argument("SourceParams: texture_scale must be > 0");
  if (!(noise_sigma >= 0.0) || !std::isfinite(noise_sigma))
    throw std::invalid_argument("SourceParams: noise_sigma must be >= 0");
  if (smooth_radius < 0) throw std::invalid_argument("SourceParams: smooth_radius must be >= 0");
  if (!(contrast > 0.0 && contrast <= 1.0))
    throw std::invalid_argument("SourceParams: contrast must be in (0, 1]");
  if (base_level < 0 || base_level > 255)
    throw std::invalid_argument("SourceParams: base_level must be in [0, 255]");
}

std::optional<SourceParams> preset_source(std::string_view name)
{
  // Smooth texture with mild noise vs. a busier, noisier one.
  if (name == "source-A") return SourceParams{0.08, 2.5, 0, 0.8, 128};
  if (name == "source-B") return SourceParams{0.25, 6.0, 0, 0.9, 110};
  return std::nullopt;
}

std::vector<std::string> preset_names() { return {"source-A", "source-B"}; }

ImageGray generate_cover(const SourceParams& params, std::size_t width, std::size_t height,
                         std::uint64_t seed)
{
  params.validate();
  if (width < kMinSynthSide || height < kMinSynthSide)
    throw std::invalid_argument("generate_cover: dimensions must be at least 16x16");

  const double cell = 1.0 / params.texture_scale;
  const auto lat_w = static_cast<std::size_t>(std::floor((width - 1) / cell)) + 2;
  const auto lat_h = static_cast<std::size_t>(std::floor((height - 1) / cell)) + 2;
  const std::uint64_t lattice_key = rng::derive(seed, "lattice");
  std::vector<double> lattice(lat_w * lat_h);
  for (std::size_t i = 0; i < lattice.size(); ++i)
    lattice[i] = 255.0 * rng::uniform01(rng::hash(lattice_key, i));

  const std::uint64_t noise_key = rng::derive(seed, "noise");
  RealPlane plane(width, height);
  for (std::size_t r = 0; r < height; ++r) {
    const double gy = r / cell;
    const auto y0 = static_cast<std::size_t>(gy);
    const double fy = gy - y0;
    for (std::size_t c = 0; c < width; ++c) {
      const double gx = c / cell;
      const auto x0 = static_cast<std::size_t>(gx);
      const double fx = gx - x0;
      const double top = lattice[y0 * lat_w + x0] * (1 - fx) + lattice[y0 * lat_w + x0 + 1] * fx;
      const double bot =
          lattice[(y0 + 1) * lat_w + x0] * (1 - fx) + lattice[(y0 + 1) * lat_w + x0 + 1] * fx;
      double v = top * (1 - fy) + bot * fy;
      if (params.noise_sigma > 0.0) {
        rng::Stream s(rng::hash(noise_key, r * width + c));
        v += params.noise_sigma * s.normal();
      }
      plane.at(r, c) = v;
    }
  }

  if (params.smooth_radius > 0) {
    const auto side = static_cast<std::size_t>(2 * params.smooth_radius + 1);
    if (side > std::min(width, height))
      throw std::invalid_argument("generate_cover: smooth_radius too large for image");
    plane = convolve2d(plane, Kernel::box(side));
  }

  ImageGray img(width, height);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const double v = params.base_level + params.contrast * (plane[i] - 128.0);
    img[i] = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
  }
  return img;
}

std::vector<ImageGray> generate_corpus(const SourceParams& params, std::size_t count,
                                       std::size_t width, std::size_t height, std::uint64_t seed)
{
  if (count == 0) throw std::invalid_argument("generate_corpus: count must be >= 1");
  std::vector<ImageGray> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(generate_cover(params, width, height, rng::split(seed, i)));
  return out;
}

}  // namespace stegcheck
