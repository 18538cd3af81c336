#include <cmath>

#include "doctest.h"
#include "nnmass/costmodel.hpp"
#include "nnmass/error.hpp"
#include "nnmass/restructure.hpp"
#include "nnmass/topology.hpp"

using namespace nnmass;

namespace {

ConvWeights eye_1x1(int c) {
  ConvWeights w;
  w.kernel = Tensor({c, c, 1, 1});
  for (int i = 0; i < c; ++i) w.kernel.at(i, i, 0, 0) = 1.0;
  return w;
}

std::size_t count_ibn(const ArchDescriptor& a) {
  std::size_t n = 0;
  for (const auto& b : a.blocks) n += std::holds_alternative<Ibn>(b) ? 1 : 0;
  return n;
}

}  // namespace

TEST_CASE("identity sequence collapses to a delta conv") {
  ConvWeights dw;
  dw.kernel = Tensor({3, 1, 3, 3});
  dw.groups = 3;
  for (int c = 0; c < 3; ++c) dw.kernel.at(c, 0, 1, 1) = 1.0;
  LinearSequence seq{{{eye_1x1(3), std::nullopt}, {dw, std::nullopt}, {eye_1x1(3), std::nullopt}}};
  const auto w = collapse(seq);
  CHECK(w.kernel.shape() == std::vector<int>{3, 3, 3, 3});
  CHECK_FALSE(w.bias.has_value());
  const Tensor x = rand_tensor({3, 8, 8}, Distribution::normal(0.0, 1.0), 3);
  CHECK(max_abs_diff(conv2d(x, w), x) == 0.0);
}

TEST_CASE("bias-free collapse is exact") {
  const auto r = run_collapse_trial(CollapseTrial{});
  CHECK(r.max_abs_diff_full <= 1e-10);
  CHECK(r.pass);
  int n = 0;
  for (int cin : {2, 4, 8}) {
    for (int e : {2, 4, 6}) {
      for (int k : {3, 5, 7}) {
        for (int stride : {1, 2}) {
          for (std::uint64_t s = 0; s < 4; ++s) {
            CollapseTrial t;
            t.seed = 1000 + static_cast<std::uint64_t>(n++) * 7 + s;
            t.in_channels = cin;
            t.expansion = Rational(e);
            t.kernel = k;
            t.stride = stride;
            const auto res = run_collapse_trial(t);
            CHECK(res.max_abs_diff_full <= 1e-10);
          }
        }
      }
    }
  }
  CHECK(n == 216);
}

TEST_CASE("biased collapse is exact on the interior") {
  for (std::uint64_t s = 0; s < 10; ++s) {
    CollapseTrial t;
    t.seed = s;
    t.biased = true;
    t.stride = 1 + static_cast<int>(s % 2);
    const auto r = run_collapse_trial(t);
    CHECK(r.max_abs_diff_interior <= 1e-10);
    CHECK(r.pass);
  }
  CollapseTrial t;
  t.biased = true;
  // Border pixels see padded zeros instead of the depthwise input bias.
  CHECK(run_collapse_trial(t).max_abs_diff_full > 1e-6);
}

TEST_CASE("collapse rejects bad sequences") {
  ConvWeights a;
  a.kernel = rand_tensor({2, 2, 3, 3}, Distribution::normal(0.0, 1.0), 1);
  LinearSequence two_spatial{{{a, std::nullopt}, {a, std::nullopt}}};
  CHECK_THROWS_AS(collapse(two_spatial), Error);
  LinearSequence mismatch{{{eye_1x1(2), std::nullopt}, {eye_1x1(3), std::nullopt}}};
  CHECK_THROWS_AS(collapse(mismatch), Error);
  CHECK_THROWS_AS(collapse(LinearSequence{}), Error);
}

TEST_CASE("interior mask") {
  const auto m = interior_mask(5, 5, 3, 1);
  REQUIRE(m.size() == 25);
  int inside = 0;
  for (bool b : m) inside += b ? 1 : 0;
  CHECK(inside == 9);
  CHECK_FALSE(m[0]);
  CHECK(m[6]);
}

TEST_CASE("afrb_decide") {
  using K = RestructureDecision::Kind;
  CHECK(afrb_decide(1.0).kind == K::Collapse);
  CHECK(afrb_decide(0.0).kind == K::KeepIbn);
  CHECK(afrb_decide(0.8).kind == K::Collapse);
  CHECK(afrb_decide(1.3).kind == K::Collapse);
  CHECK(afrb_decide(1.3000001).kind == K::KeepIbn);
  CHECK(afrb_decide(0.7999999).kind == K::KeepIbn);
  CHECK_THROWS_AS(afrb_decide(1.0, Band{1.3, 0.8}), Error);
  CHECK_THROWS_AS(afrb_decide(std::nan("")), Error);
  // Monotone membership: in-band alphas form one interval.
  int transitions = 0;
  bool prev = false;
  for (double a = -1.0; a <= 3.0; a += 0.01) {
    const bool in = afrb_decide(a).kind == K::Collapse;
    transitions += in != prev ? 1 : 0;
    prev = in;
  }
  CHECK(transitions == 2);
}

TEST_CASE("collapse saves a quarter of the pointwise MACs") {
  for (int n : {16, 24, 96}) {
    CHECK(4 * regular_conv_macs(n, 3, 14, 14) == 3 * ibn_pointwise_macs(n, Rational(6), 14, 14));
  }
}

TEST_CASE("apply_afrb_decisions") {
  const auto supernet = preset("ran-e-supernet");
  const std::size_t n = count_ibn(supernet);
  REQUIRE(n > 2);
  std::vector<double> alphas(n, 0.0);
  alphas[0] = 1.0;
  alphas[1] = 0.9;
  const auto out = apply_afrb_decisions(supernet, alphas);
  CHECK(count_ibn(out) == n - 2);
  int regular = 0;
  for (const auto& b : out.blocks) {
    if (const auto* r = std::get_if<RegularConv>(&b)) {
      ++regular;
      CHECK(r->activation == Activation::relu());
    }
    if (const auto* i = std::get_if<Ibn>(&b)) CHECK(i->activation == Activation::relu());
  }
  CHECK(regular >= 2);
  CHECK(count_arch(out, 224).total_macs < count_arch(supernet, 224).total_macs);
  CHECK_THROWS_AS(apply_afrb_decisions(supernet, {1.0}), Error);
}

TEST_CASE("split block rounding") {
  const auto s = split_convnext_block(ConvNextBlock{}, Rational(3, 5), Activation::none());
  CHECK(block_nonlinear_units(s, 96) == 231);
  CHECK(split_mlp_mac_ratio(Rational(4), Rational(3, 5)) == Rational(29, 40));
  CHECK_THROWS_AS(split_convnext_block(ConvNextBlock{}, Rational(1), Activation::none()), Error);
  CHECK_THROWS_AS(split_convnext_block(ConvNextBlock{}, Rational(0), Activation::none()), Error);
  CHECK_THROWS_AS(split_convnext_block(ConvNextBlock{}, Rational(1, 2), Activation::relu()), Error);
}

TEST_CASE("restructured ConvNext-T cost") {
  const auto a = count_arch(restructure_arch(preset("convnext-t"), Rational(3, 5), Activation::none()), 224);
  CHECK(std::abs(a.total_params - 21.5e6) / 21.5e6 <= 0.01);
  CHECK(std::abs(a.total_macs - 3.32e9) / 3.32e9 <= 0.01);
  const auto c =
      count_arch(restructure_arch(preset("convnext-t"), Rational(3, 5), Activation::exp_kernel()), 224);
  CHECK(c.total_params == a.total_params);
  CHECK(c.total_macs == a.total_macs);
  CHECK_THROWS_AS(restructure_arch(preset("ran-e-supernet"), Rational(3, 5), Activation::none()), Error);
}

TEST_CASE("split MLP equivalences") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto mlp = random_convnext_mlp(16, Rational(4), s);
    const Tensor x = rand_tensor({10, 16}, Distribution::normal(0.0, 1.0), 100 + s);
    auto split = split_mlp(mlp, Rational(3, 5), Activation::none());
    CHECK(split.upper.hidden() == 39);
    CHECK(max_abs_diff(split.forward(x), mlp.forward(x, 39)) <= 1e-12);
    split.lower_w = Tensor({16, 16});
    split.lower_b = Tensor({16});
    CHECK(max_abs_diff(split.forward(x), prune_mlp(mlp, 39).forward(x)) <= 1e-12);
  }
  CHECK_THROWS_AS(prune_mlp(random_convnext_mlp(4, Rational(4), 0), 0), Error);
}

TEST_CASE("collapse report JSON") {
  const auto j = collapse_report_json({run_collapse_trial(CollapseTrial{})});
  for (const char* key : {"\"seed\"", "\"dims\"", "\"max_abs_diff_interior\"", "\"max_abs_diff_full\"", "\"pass\""}) {
    CHECK(j.find(key) != std::string::npos);
  }
}
