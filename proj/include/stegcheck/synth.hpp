#pragma once

// Synthetic "camera sources": deterministic cover generators whose residual
// statistics differ between parameter sets.

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "stegcheck/image.hpp"

namespace stegcheck {

struct SourceParams {
  double texture_scale = 0.08;  // lattice frequency in cycles per pixel
  double noise_sigma = 2.5;     // sensor noise std-dev before blur
  int smooth_radius = 0;        // box-blur half width
  double contrast = 0.8;        // in (0, 1]
  int base_level = 128;

  void validate() const;
};

/// "source-A" and "source-B"; nullopt for an unknown name.
std::optional<SourceParams> preset_source(std::string_view name);
std::vector<std::string> preset_names();

inline constexpr std::size_t kMinSynthSide = 16;

/// Value-noise texture -> additive noise -> box blur -> contrast -> clamp/quantize.
/// The pixel stream for each stage is derive(seed, "<stage>") indexed by pixel.
ImageGray generate_cover(const SourceParams& params, std::size_t width, std::size_t height,
                         std::uint64_t seed);

/// Image i uses seed rng::split(seed, i).
std::vector<ImageGray> generate_corpus(const SourceParams& params, std::size_t count,
                                       std::size_t width, std::size_t height, std::uint64_t seed);

}  // namespace stegcheck
