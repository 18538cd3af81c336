#include <cmath>

#include "doctest.h"
#include "nnmass/costmodel.hpp"
#include "nnmass/error.hpp"

using namespace nnmass;

namespace {

double rel(double got, double want) { return std::abs(got - want) / want; }

}  // namespace

TEST_CASE("shape propagation") {
  SUBCASE("ran-e-supernet stage inputs") {
    const auto a = preset("ran-e-supernet");
    const auto shapes = propagate_shapes(a, Shape{3, 224, 224});
    CHECK(shapes[1].height == 112);
    CHECK(shapes[6].height == 14);
    CHECK(shapes[12].height == 7);
  }
  SUBCASE("convnext-t stage resolutions") {
    const auto a = preset("convnext-t");
    const auto shapes = propagate_shapes(a, Shape{3, 224, 224});
    std::vector<int> seen;
    for (std::size_t i = 0; i < a.blocks.size(); ++i) {
      if (std::holds_alternative<ConvNextBlock>(a.blocks[i]) &&
          (seen.empty() || seen.back() != shapes[i].height)) {
        seen.push_back(shapes[i].height);
      }
    }
    CHECK(seen == std::vector<int>{56, 28, 14, 7});
  }
  SUBCASE("stride-1 regular conv keeps the spatial size") {
    CHECK(block_output_shape(RegularConv{3, 1, 8, Activation::relu()}, Shape{4, 13, 13}) == Shape{8, 13, 13});
  }
  SUBCASE("stride 4 on an odd size") {
    CHECK_THROWS_AS(block_output_shape(Stem{4, 4, 8}, Shape{3, 225, 225}), Error);
  }
  SUBCASE("input channel mismatch") {
    CHECK_THROWS_AS(propagate_shapes(preset("convnext-t"), Shape{1, 224, 224}), Error);
  }
}

TEST_CASE("per-block counts") {
  CHECK(count_block(Stem{4, 4, 96}, Shape{3, 224, 224}).macs == 14'450'688);
  CHECK(count_block(RegularConv{1, 1, 1, Activation::relu()}, Shape{1, 1, 1}).macs == 1);
  CHECK(ibn_pointwise_macs(64, Rational(6), 14, 14) == 9'633'792);
  const auto ibn = count_block(Ibn{Rational(6), 3, 1, 64, false, Activation::relu()}, Shape{64, 14, 14});
  CHECK(ibn.macs == 9'633'792 + 196 * 9 * 384);
  CHECK(ibn.params == 64 * 384 + 2 * 384 + 9 * 384 + 2 * 384 + 384 * 64 + 2 * 64);
  const auto cn = count_block(ConvNextBlock{}, Shape{96, 56, 56});
  CHECK(cn.macs == 56 * 56 * (49 * 96 + 8 * 96 * 96));
}

TEST_CASE("count_arch totals") {
  const auto r = count_arch(preset("convnext-t"), 224);
  CHECK(rel(r.total_params, 28.6e6) <= 0.01);
  CHECK(rel(r.total_macs, 4.47e9) <= 0.02);
  const auto b = count_arch(preset("ran-i-b"), 224);
  CHECK(rel(b.total_params, 52.89e6) <= 0.01);
  CHECK(rel(b.total_macs, 8.45e9) <= 0.02);
  std::int64_t macs = 0, params = 0;
  for (const auto& e : r.per_block) {
    macs += e.macs;
    params += e.params;
    CHECK(e.macs >= 0);
  }
  CHECK(macs == r.total_macs);
  CHECK(params == r.total_params);
}

TEST_CASE("structural sum over propagated shapes") {
  const auto a = preset("ran-e-supernet");
  const auto shapes = propagate_shapes(a, Shape{3, 224, 224});
  std::int64_t macs = 0;
  for (std::size_t i = 0; i < a.blocks.size(); ++i) macs += count_block(a.blocks[i], shapes[i]).macs;
  CHECK(macs == count_arch(a, 224).total_macs);
}

TEST_CASE("ibn_equivalent_width") {
  CHECK(ibn_equivalent_width(64, Rational(6)) == 74);
  CHECK(ibn_equivalent_width(1, Rational(6)) == 1);
  CHECK(ibn_equivalent_width(96, Rational(6)) == 111);
  CHECK(std::abs(9.0 * 74 * 74 - 12.0 * 64 * 64) / (12.0 * 64 * 64) <= 0.005);
  CHECK_THROWS_AS(ibn_equivalent_width(64, Rational(0)), Error);
}

TEST_CASE("IBN to regular conv saves 25% pointwise MACs at equal width") {
  for (int n : {16, 64, 100, 512}) {
    const auto ibn = ibn_pointwise_macs(n, Rational(6), 14, 14);
    const auto conv = regular_conv_macs(n, 3, 14, 14);
    CHECK(4 * conv == 3 * ibn);
  }
}

TEST_CASE("quadratic MAC scaling for 1x1-dominated blocks") {
  const auto a = count_block(ResNetBottleneckBlock{Rational(1, 4), 1}, Shape{64, 8, 8}).macs;
  const auto b = count_block(ResNetBottleneckBlock{Rational(1, 4), 1}, Shape{128, 8, 8}).macs;
  CHECK(b == 4 * a);
}

TEST_CASE("report serialization") {
  const auto r = count_arch(preset("convnext-t"), 224);
  const auto csv = cost_report_csv(r);
  CHECK(csv.rfind("block_index,kind,in_c,in_h,in_w,macs,params\n", 0) == 0);
  CHECK(csv.find("0,stem,3,224,224,14450688,") != std::string::npos);
  CHECK(cost_report_json(r).find("\"total_macs\"") != std::string::npos);
}
