#include <cmath>

#include "doctest.h"
#include "nnmass/error.hpp"
#include "nnmass/tensor.hpp"
#include "nnmass/topology.hpp"

using namespace nnmass;

TEST_CASE("nn_mass closed forms") {
  const auto t = nn_mass(preset("convnext-t"));
  CHECK(t.exact_mass == Rational(13248));
  CHECK(t.nonlinear_units == 26496);
  CHECK(t.k == Rational(2));
  CHECK(nn_mass(preset("ran-i-t")).exact_mass == Rational(14710));

  ArchDescriptor r;
  r.name = "one";
  r.family = Family::ResNetBottleneck;
  r.input_resolution = 8;
  r.input_channels = 256;
  r.blocks = {ResNetBottleneckBlock{Rational(1, 4), 3}};
  const auto m = nn_mass(r);
  CHECK(m.exact_mass == Rational(512, 3));
  CHECK(m.k == Rational(3, 4));
  CHECK(m.k * m.exact_mass == Rational(128));
  CHECK(m.nonlinear_units == 128);
}

TEST_CASE("nn_mass errors") {
  ArchDescriptor a = preset("convnext-t");
  std::get<ConvNextBlock>(a.blocks[1]).expansion = Rational(3);
  a.stages.reset();
  try {
    nn_mass(a);
    FAIL("expected non-uniform error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("non-uniform structure") != std::string::npos);
  }
  CHECK_THROWS_AS(nn_mass(preset("ran-e-supernet")), Error);
}

TEST_CASE("nonlinear unit counts") {
  const int n = 64;
  CHECK(block_nonlinear_units(Ibn{Rational(6), 3, 1, n, false, Activation::relu()}, n) == 12 * n);
  CHECK(block_nonlinear_units(RegularConv{3, 1, 16, Activation::none()}, 8) == 0);
  CHECK(block_nonlinear_units(RegularConv{3, 1, 16, Activation::relu()}, 8) == 16);
  CHECK(block_nonlinear_units(ConvNextSplitBlock{Rational(4), 7, Rational(3, 5), Activation::none()}, 96) == 231);
  CHECK(block_nonlinear_units(ConvNextSplitBlock{Rational(4), 7, Rational(3, 5), Activation::gelu()}, 96) == 384);
}

TEST_CASE("proportionality constants") {
  CHECK(proportionality_constant(Family::ResNetBottleneck, Rational(1, 4)) == Rational(3, 4));
  CHECK(proportionality_constant(Family::ConvNext, Rational(4)) == Rational(2));
  CHECK_THROWS_AS(proportionality_constant(Family::ConvNext, Rational(0)), Error);
  CHECK_THROWS_AS(proportionality_constant(Family::RanE, Rational(1)), Error);
}

TEST_CASE("average degree and LDI bounds") {
  CHECK(average_degree(8, 4) == 10);
  CHECK(average_degree(32, 0) == 32);
  CHECK(average_degree(32, 64) == 64);
  const auto b = ldi_bounds(1.0 / 64, 32, 64);
  CHECK(b.lower == doctest::Approx(1 - std::sqrt(0.5)).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(1 + std::sqrt(0.5)).epsilon(1e-12));
  const auto d = ldi_bounds(1.0 / 32, 32, 32);
  CHECK(d.lower == doctest::Approx(0.0));
  CHECK(d.upper == doctest::Approx(2.0));
  const auto u = ldi_bounds(1, 1, 4);
  CHECK(u.lower == doctest::Approx(1.0));
  CHECK(u.upper == doctest::Approx(3.0));
  CHECK_THROWS_AS(ldi_bounds(1, 4, 2), Error);
}

TEST_CASE("region bounds") {
  CHECK(log2_region_upper_bound(0) == 0);
  CHECK(log2_region_upper_bound(26496) == 26496);
  CHECK(log2_region_upper_bound(12 * 64) == 768);
  CHECK(log2_montufar_bound(4, 2, 3) == doctest::Approx(8.0));
  CHECK(log2_montufar_bound(8, 2, 2) == doctest::Approx(10.0));
  CHECK(log2_montufar_bound(3, 3, 5) == doctest::Approx(3 * std::log2(3.0)));
  CHECK_THROWS_AS(log2_montufar_bound(1, 2, 3), Error);
  CHECK(depth_exponent(10, 10, 100) == doctest::Approx(90.0));
  CHECK(depth_exponent(16, 2, 64) == doctest::Approx(6.0));
  CHECK(depth_exponent(16, 2, 16) == doctest::Approx(0.0));
  CHECK_THROWS_AS(depth_exponent(16, 2, 8), Error);
}

TEST_CASE("property: montufar bound monotone, ldi bounds bracket one") {
  for (int n = 2; n <= 12; ++n) {
    for (int l = 1; l <= 6; ++l) {
      CHECK(log2_montufar_bound(n, 2, l + 1) >= log2_montufar_bound(n, 2, l));
      CHECK(log2_montufar_bound(n + 1, 2, l) >= log2_montufar_bound(n, 2, l));
    }
  }
  for (int w = 1; w <= 64; w += 7) {
    for (double k = w; k <= 4 * w; k += 5.5) {
      const auto b = ldi_bounds(1.0 / k, w, k);
      CHECK(b.lower <= 1.0);
      CHECK(b.upper >= 1.0);
    }
  }
}

TEST_CASE("property: mass is linear in width and additive in depth") {
  const auto base = preset("convnext-t");
  StageLayout doubled = *base.stages;
  for (auto& w : doubled.widths) w *= 2;
  const auto d = make_stage_arch("d", Family::ConvNext, 224, 3, doubled);
  CHECK(nn_mass(d).exact_mass == 2 * nn_mass(base).exact_mass);

  StageLayout deeper = *base.stages;
  deeper.depths[2] += 1;
  const auto e = make_stage_arch("e", Family::ConvNext, 224, 3, deeper);
  CHECK(nn_mass(e).exact_mass - nn_mass(base).exact_mass == Rational(2 * 384));
}

TEST_CASE("mass summary line") {
  CHECK(mass_summary(nn_mass(preset("ran-i-t"))).rfind("m=14710 X=29420 k=2 ", 0) == 0);
}
