#include <doctest.h>

#include "approx.h"

#include <cmath>
#include <random>

#include "ionaddr/error.h"
#include "ionaddr/gauss_optics.h"

using namespace ionaddr;
using namespace ionaddr::gauss;

namespace {
constexpr double kPi = 3.14159265358979323846;
constexpr double kLambda = 729e-9;

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }
}  // namespace

TEST_CASE("beam from MFD") {
  const auto b = beam_from_mfd(1.73e-6, 3.42e-6, kLambda);
  CHECK(b.x.waist_radius == approx(0.865e-6));
  CHECK(b.y.waist_radius == approx(1.71e-6));
  CHECK(b.x.waist_position == 0.0);
  CHECK(b.y.waist_position == 0.0);
  const auto round = beam_from_mfd(2e-6, 2e-6, kLambda);
  CHECK(round.x.waist_radius == round.y.waist_radius);
  CHECK_THROWS_AS(beam_from_mfd(0.0, 1e-6, kLambda), Error);
  CHECK_THROWS_AS(beam_from_mfd(1e-6, 1e-6, -1.0), Error);
}

TEST_CASE("Rayleigh lengths") {
  const auto b = beam_from_mfd(1.73e-6, 3.42e-6, kLambda);
  // pi w0^2 / lambda by hand: 3.22 um and 12.60 um.
  CHECK(rayleigh_length(b, Axis::kX) == approx(3.2245e-6).epsilon(1e-3));
  CHECK(rayleigh_length(b, Axis::kY) == approx(12.601e-6).epsilon(1e-3));
  CHECK(std::abs(rayleigh_length(b, Axis::kY) - 12.6e-6) < 0.1e-6);

  // Doubling the MFD quadruples z_R.
  const auto wide = beam_from_mfd(3.42e-6, 6.84e-6, kLambda);
  CHECK(rayleigh_length(wide, Axis::kX) == approx(rayleigh_length(b, Axis::kY)));
  CHECK(rayleigh_length(wide, Axis::kY) == approx(4 * rayleigh_length(b, Axis::kY)));
  const auto dense = beam_from_mfd(1.73e-6, 3.42e-6, kLambda, 1.466);
  CHECK(rayleigh_length(dense, Axis::kY) == approx(1.466 * rayleigh_length(b, Axis::kY)));
}

TEST_CASE("NA and waist conversion") {
  const double w0 = na_waist_conversion(0.24, NaConversion::kNaToWaist, kLambda);
  CHECK(w0 == approx(0.9669e-6).epsilon(1e-3));
  CHECK(na_waist_conversion(0.12, NaConversion::kNaToWaist, kLambda) == approx(2 * w0));
  CHECK(na_waist_conversion(w0, NaConversion::kWaistToNa, kLambda) == approx(0.24));
  CHECK_THROWS_AS(na_waist_conversion(1.0, NaConversion::kNaToWaist, kLambda), Error);
  CHECK_THROWS_AS(na_waist_conversion(kLambda / kPi, NaConversion::kWaistToNa, kLambda), Error);
}

TEST_CASE("empty chain is the identity") {
  const auto b = beam_from_mfd(2e-6, 6e-6, kLambda);
  const auto out = propagate_abcd(b, {});
  CHECK(out.x.waist_radius == approx(b.x.waist_radius));
  CHECK(out.y.waist_position == b.y.waist_position);
}

TEST_CASE("thin-lens imaging against the Gaussian conjugate formulas") {
  const double f = 2e-3;
  const auto b = beam_from_mfd(20e-6, 20e-6, kLambda);
  const double zr = rayleigh_length(b, Axis::kX);
  for (double s : {2 * f, 3 * f, 0.5 * f}) {
    CAPTURE(s);
    const std::vector<AbcdElement> chain{FreeSpace{s}, ThinLens{f}};
    const auto out = propagate_abcd(b, chain);
    // Self's formulas: m = 1 / sqrt((1 - s/f)^2 + (zR/f)^2), 1/(s + zR^2/(s - f)) + 1/s' = 1/f.
    const double m = 1.0 / std::sqrt(std::pow(1 - s / f, 2) + std::pow(zr / f, 2));
    const double image = 1.0 / (1.0 / f - 1.0 / (s + zr * zr / (s - f)));
    CHECK(rel(waist_ratio(b, out, Axis::kX), m) < 1e-10);
    CHECK(rel(out.x.waist_position, image) < 1e-10);
  }
  // Geometric limit: a tight source sits at the 2f-2f conjugate.
  const auto tight = beam_from_mfd(2e-6, 2e-6, kLambda);
  const std::vector<AbcdElement> chain{FreeSpace{2 * f}, ThinLens{f}};
  const auto out = propagate_abcd(tight, chain);
  CHECK(waist_ratio(tight, out, Axis::kX) == approx(1.0).epsilon(1e-3));
  CHECK(out.x.waist_position == approx(2 * f).epsilon(1e-3));
}

TEST_CASE("chain composition is associative") {
  auto b = beam_from_mfd(2e-6, 6e-6, kLambda);
  const std::vector<AbcdElement> c1{FreeSpace{300e-6}, ThinLens{211e-6}};
  const std::vector<AbcdElement> c2{FreeSpace{20e-6}, ThinLens{233e-6}, FreeSpace{50e-6}};
  std::vector<AbcdElement> both = c1;
  both.insert(both.end(), c2.begin(), c2.end());
  const auto once = propagate_abcd(b, both);
  const auto twice = propagate_abcd(propagate_abcd(b, c1), c2);
  for (auto a : {Axis::kX, Axis::kY}) {
    CHECK(rel(once.axis(a).waist_radius, twice.axis(a).waist_radius) < 1e-12);
    CHECK(rel(once.axis(a).waist_position, twice.axis(a).waist_position) < 1e-12);
  }
}

TEST_CASE("free space from a waist only shifts the waist") {
  const auto b = beam_from_mfd(2e-6, 6e-6, kLambda);
  const std::vector<AbcdElement> chain{FreeSpace{37e-6}};
  const auto out = propagate_abcd(b, chain);
  CHECK(rel(out.x.waist_radius, b.x.waist_radius) < 1e-12);
  CHECK(out.x.waist_position == approx(-37e-6).epsilon(1e-12));
  const auto q0 = q_parameter(b, Axis::kY), q1 = q_parameter(out, Axis::kY);
  CHECK(std::abs(q1 - (q0 + 37e-6)) < 1e-12 * std::abs(q0));
}

TEST_CASE("w(z) follows the hyperbola at random distances") {
  const auto b = beam_from_mfd(1.73e-6, 3.42e-6, kLambda);
  const double zr = rayleigh_length(b, Axis::kX);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(0.0, 200e-6);
  for (int i = 0; i < 20; ++i) {
    const double z = dist(rng);
    const std::vector<AbcdElement> chain{FreeSpace{z}};
    const auto out = propagate_abcd(b, chain);
    const double analytic = b.x.waist_radius * std::sqrt(1 + (z / zr) * (z / zr));
    CHECK(rel(beam_radius_at(out, Axis::kX, 0.0), analytic) < 1e-12);
    CHECK(rel(beam_radius_at(b, Axis::kX, z), analytic) < 1e-12);
  }
}

TEST_CASE("determinant equals the index ratio") {
  const std::vector<AbcdElement> chain{FreeSpace{10e-6}, FlatInterface{1.0, 1.5}, FreeSpace{20e-6, 1.5},
                                       ThinLens{100e-6}, FlatInterface{1.5, 1.2}};
  CHECK(std::abs(compose(chain).determinant() - 1.0 / 1.2) < 1e-12);
  CHECK(exit_index(chain, 1.0) == approx(1.2));
  const std::vector<AbcdElement> lenses{FreeSpace{300e-6}, ThinLens{211e-6}, FreeSpace{20e-6}, ThinLens{233e-6}};
  CHECK(std::abs(compose(lenses).determinant() - 1.0) < 1e-12);
}

TEST_CASE("invalid elements and singular transforms") {
  CHECK_THROWS_AS(validate(ThinLens{0.0}), Error);
  CHECK_THROWS_AS(validate(FreeSpace{-1e-6}), Error);
  CHECK_THROWS_AS(validate(FlatInterface{0.5, 1.0}), Error);
  try {
    transform_q(RayMatrix{0.0, 1.0, 1.0, 0.0}, std::complex<double>(0.0, 0.0));
    FAIL("expected a singular configuration");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kSingularConfiguration);
  }
}
