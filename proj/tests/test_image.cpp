#include <doctest.h>

#include <string>
#include <vector>

#include "stegcheck/image.hpp"
#include "stegcheck/rng.hpp"

using namespace stegcheck;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header, std::vector<std::uint8_t> payload)
{
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

PgmErrorKind error_kind(const std::vector<std::uint8_t>& bytes)
{
  try {
    load_pgm(bytes);
  } catch (const PgmError& e) {
    return e.kind();
  }
  FAIL("expected a parse error");
  return PgmErrorKind::kIo;
}

RealPlane random_plane(std::size_t w, std::size_t h, std::uint64_t seed)
{
  RealPlane p(w, h);
  rng::Stream s(seed);
  for (double& v : p.values()) v = 200.0 * s.uniform() - 100.0;
  return p;
}

}  // namespace

TEST_CASE("load_pgm decodes a minimal P5 file")
{
  const auto img = load_pgm(bytes_of("P5 2 2 255\n", {10, 20, 30, 40}));
  CHECK(img.width() == 2);
  CHECK(img.height() == 2);
  CHECK(img.at(0, 0) == 10);
  CHECK(img.at(0, 1) == 20);
  CHECK(img.at(1, 0) == 30);
  CHECK(img.at(1, 1) == 40);
}

TEST_CASE("load_pgm accepts header comments")
{
  const auto img = load_pgm(bytes_of("P5\n# made by hand\n3 1\n# max\n255\n", {1, 2, 3}));
  CHECK(img.width() == 3);
  CHECK(img[2] == 3);
}

TEST_CASE("load_pgm error kinds are distinct")
{
  CHECK(error_kind(bytes_of("P6 2 2 255\n", {1, 2, 3, 4})) == PgmErrorKind::kBadMagic);
  CHECK(error_kind(bytes_of("P2 2 2 255\n", {})) == PgmErrorKind::kBadMagic);
  CHECK(error_kind(bytes_of("P5 2 2 65535\n", {1, 2, 3, 4})) == PgmErrorKind::kBadMaxval);
  CHECK(error_kind(bytes_of("P5 2 2 255\n", {1, 2, 3})) == PgmErrorKind::kTruncatedPayload);
  CHECK(error_kind(bytes_of("P5 0 2 255\n", {})) == PgmErrorKind::kZeroDimension);
  CHECK(error_kind(bytes_of("P5 x 2 255\n", {})) == PgmErrorKind::kBadHeader);
  CHECK(error_kind({}) == PgmErrorKind::kBadMagic);
}

TEST_CASE("save_pgm emits the canonical form")
{
  const auto bytes = save_pgm(ImageGray(1, 1, std::uint8_t{0}));
  const std::string expected_header = "P5\n1 1\n255\n";
  REQUIRE(bytes.size() == expected_header.size() + 1);
  CHECK(std::string(bytes.begin(), bytes.end() - 1) == expected_header);
  CHECK(bytes.back() == 0);
}

TEST_CASE("PGM round trip is the identity on random images")
{
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    rng::Stream s(seed);
    const std::size_t w = 1 + s.below(40), h = 1 + s.below(40);
    ImageGray img(w, h);
    for (auto& p : img.pixels()) p = static_cast<std::uint8_t>(s.below(256));
    const auto bytes = save_pgm(img);
    CHECK(load_pgm(bytes) == img);
    CHECK(save_pgm(load_pgm(bytes)) == bytes);
    CHECK(save_pgm(ImageGray(img)) == bytes);
  }
}

TEST_CASE("mirror_pad reflects without repeating the border")
{
  const RealPlane row(3, 1, std::vector<double>{1, 2, 3});
  // Height 1 collapses to the single row, so the middle row carries the 1-D pattern.
  const auto padded = mirror_pad(row, 1);
  REQUIRE(padded.width() == 5);
  REQUIRE(padded.height() == 3);
  const std::vector<double> expected{2, 1, 2, 3, 2};
  for (std::size_t c = 0; c < 5; ++c) CHECK(padded.at(1, c) == expected[c]);

  const auto plane = random_plane(7, 5, 3);
  CHECK(mirror_pad(plane, 0) == plane);

  const auto big = mirror_pad(plane, 3);
  for (std::size_t r = 0; r < 5; ++r)
    for (std::size_t c = 0; c < 7; ++c) CHECK(big.at(r + 3, c + 3) == plane.at(r, c));

  const auto flat = mirror_pad(RealPlane(4, 4, 7.5), 4);
  CHECK(flat.width() == 12);
  for (double v : flat.values()) CHECK(v == 7.5);

  CHECK_THROWS_AS(mirror_pad(plane, 6), std::invalid_argument);
}

TEST_CASE("convolve2d matches hand-computed correlation")
{
  const RealPlane p(3, 3, std::vector<double>{1, 2, 4, 3, 7, 5, 0, 6, 9});
  // Direct summation over the mirror-padded fixture.
  const std::vector<double> kb_expected{-12, 14, -16, 2, -10, 18, 8, 6, -20};
  const auto out = convolve2d(p, kb_kernel());
  for (std::size_t i = 0; i < 9; ++i) CHECK(out[i] == doctest::Approx(kb_expected[i]));

  // Asymmetric kernel pins the orientation: no flip, so out(r,c) = in(r,c+1).
  const Kernel right{3, 3, {0, 0, 0, 0, 0, 1, 0, 0, 0}};
  const std::vector<double> shift_expected{2, 4, 2, 7, 5, 7, 6, 9, 6};
  const auto shifted = convolve2d(p, right);
  for (std::size_t i = 0; i < 9; ++i) CHECK(shifted[i] == shift_expected[i]);
}

TEST_CASE("convolve2d identity, constant high-pass and errors")
{
  const auto p = random_plane(9, 6, 11);
  CHECK(convolve2d(p, Kernel{}) == p);
  const auto zero = convolve2d(RealPlane(10, 10, 42.0), kb_kernel());
  for (double v : zero.values()) CHECK(v == 0.0);
  CHECK_THROWS_AS(convolve2d(p, Kernel{2, 2, {1, 1, 1, 1}}), std::invalid_argument);
  CHECK_THROWS_AS(convolve2d(RealPlane(2, 2), Kernel::box(3)), std::invalid_argument);
}

TEST_CASE("convolve2d is linear")
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto P = random_plane(8, 11, 2 * seed);
    const auto Q = random_plane(8, 11, 2 * seed + 1);
    const double a = 1.5 + seed, b = -0.25 * seed;
    RealPlane mix(8, 11);
    for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = a * P[i] + b * Q[i];
    const Kernel k{3, 5, {0.3, -1, 2, 0.5, 0.1, 1, 1, -4, 1, 1, 0.2, 0.7, -2, 0.4, 0.9}};
    const auto lhs = convolve2d(mix, k);
    const auto cp = convolve2d(P, k), cq = convolve2d(Q, k);
    for (std::size_t i = 0; i < lhs.size(); ++i) {
      const double rhs = a * cp[i] + b * cq[i];
      CHECK(std::abs(lhs[i] - rhs) <= 1e-9 * std::max(1.0, std::abs(rhs)));
    }
  }
}
