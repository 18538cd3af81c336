#include <algorithm>
#include <random>

#include "doctest.h"
#include "nnmass/costmodel.hpp"
#include "nnmass/error.hpp"
#include "nnmass/scaler.hpp"
#include "nnmass/topology.hpp"

using namespace nnmass;

namespace {

const std::vector<ScaleCandidate>& default_scan() {
  static const auto scan = enumerate_candidates(preset("convnext-t"), MultiplierGrid{}, 224);
  return scan;
}

ScaleCandidate cand(std::int64_t macs, double mass, double w = 1.0) {
  ScaleCandidate c;
  c.macs = macs;
  c.params = macs;
  c.mass = mass;
  c.w_m = w;
  c.d_m = 1.0;
  return c;
}

}  // namespace

TEST_CASE("default grid") {
  const auto& scan = default_scan();
  CHECK(scan.size() == 800);
  CHECK(MultiplierGrid{}.widths().front() == 0.25);
  CHECK(MultiplierGrid{}.widths().back() == 1.6);
  CHECK(MultiplierGrid{}.depths().back() == 2.56);
  for (std::size_t i = 1; i < scan.size(); ++i) {
    const bool ordered = scan[i - 1].w_m < scan[i].w_m ||
                         (scan[i - 1].w_m == scan[i].w_m && scan[i - 1].d_m < scan[i].d_m);
    CHECK(ordered);
  }
}

TEST_CASE("single-point grid equals the base") {
  MultiplierGrid g{1.0, 1.0, 1, 1.0, 1.0, 1};
  const auto base = preset("convnext-t");
  const auto c = enumerate_candidates(base, g, 224);
  REQUIRE(c.size() == 1);
  const auto cost = count_arch(base, 224);
  CHECK(c[0].macs == cost.total_macs);
  CHECK(c[0].params == cost.total_params);
  CHECK(c[0].mass == nn_mass(base).mass);
}

TEST_CASE("RAN-i-T point") {
  const auto c = evaluate_candidate(preset("convnext-t"), 0.666, 1.65, 224);
  const auto ref = count_arch(preset("ran-i-t"), 224);
  CHECK(c.widths == std::vector<int>{64, 128, 256, 511});
  CHECK(c.depths == std::vector<int>{5, 5, 15, 5});
  CHECK(c.params == ref.total_params);
  CHECK(c.macs == ref.total_macs);
}

TEST_CASE("degenerate candidates are flagged, not dropped") {
  MultiplierGrid g{0.01, 0.1, 4, 1.0, 1.0, 1};
  const auto c = enumerate_candidates(preset("convnext-t"), g, 224);
  REQUIRE(c.size() == 4);
  CHECK_FALSE(c[0].valid);
  CHECK(c[0].invalid_reason.find("degenerate width") != std::string::npos);
  CHECK(c[3].valid);
}

TEST_CASE("thread count does not change results") {
  MultiplierGrid g;
  g.w_steps = 7;
  g.d_steps = 5;
  const auto a = enumerate_candidates(preset("convnext-t"), g, 224, 1);
  const auto b = enumerate_candidates(preset("convnext-t"), g, 224, 4);
  CHECK(candidates_csv(a, std::nullopt) == candidates_csv(b, std::nullopt));
}

TEST_CASE("budget filtering") {
  const auto& scan = default_scan();
  Budget h2;
  h2.target_macs = 4'500'000'000;
  h2.target_params = 28'000'000;
  const auto f = filter_budget(scan, h2);
  CHECK_FALSE(f.empty());
  const auto base = count_arch(preset("convnext-t"), 224);
  const bool near_base = std::any_of(f.begin(), f.end(), [&](const auto& c) {
    return std::abs(c.macs - base.total_macs) <= 0.025 * base.total_macs &&
           std::abs(c.params - base.total_params) <= 0.025 * base.total_params;
  });
  CHECK(near_base);

  Budget exact;
  exact.target_macs = scan[123].macs;
  exact.tolerance = 0.0;
  const auto e = filter_budget(scan, exact);
  REQUIRE(e.size() >= 1);
  for (const auto& c : e) CHECK(c.macs == scan[123].macs);

  Budget impossible;
  impossible.target_macs = 1;
  CHECK(filter_budget(scan, impossible).empty());

  Budget none;
  CHECK_THROWS_AS(none.validate(), Error);
  Budget wide;
  wide.target_macs = 1;
  wide.tolerance = 0.3;
  CHECK_THROWS_AS(wide.validate(), Error);
}

TEST_CASE("select_max_mass") {
  CHECK_THROWS_AS(select_max_mass({}), Error);
  CHECK(select_max_mass({cand(5, 1)}).macs == 5);
  CHECK(select_max_mass({cand(7, 3), cand(5, 3)}).macs == 5);
  CHECK(select_max_mass({cand(5, 3, 0.5), cand(5, 3, 0.4)}).w_m == 0.4);

  Budget h2;
  h2.target_macs = 4'500'000'000;
  h2.target_params = 28'000'000;
  auto f = filter_budget(default_scan(), h2);
  const auto best = select_max_mass(f);
  for (const auto& c : f) CHECK(best.mass >= c.mass);
  std::mt19937 rng(7);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(f.begin(), f.end(), rng);
    const auto s = select_max_mass(f);
    CHECK(s.w_m == best.w_m);
    CHECK(s.d_m == best.d_m);
  }
}

TEST_CASE("pareto frontier") {
  const auto f = pareto_frontier({cand(1, 5), cand(2, 4)}, CostAxis::Macs);
  REQUIRE(f.size() == 1);
  CHECK(f[0].macs == 1);
  const auto eq = pareto_frontier({cand(3, 2), cand(1, 2), cand(2, 2)}, CostAxis::Macs);
  REQUIRE(eq.size() == 1);
  CHECK(eq[0].macs == 1);

  const auto& scan = default_scan();
  for (CostAxis axis : {CostAxis::Macs, CostAxis::Params}) {
    const auto front = pareto_frontier(scan, axis);
    for (std::size_t i = 1; i < front.size(); ++i) {
      CHECK(candidate_cost(front[i], axis) > candidate_cost(front[i - 1], axis));
      CHECK(front[i].mass > front[i - 1].mass);
    }
    // No scan member strictly dominates a frontier member.
    for (const auto& m : front) {
      for (const auto& c : scan) {
        const bool dominates = candidate_cost(c, axis) <= candidate_cost(m, axis) && c.mass >= m.mass &&
                               (candidate_cost(c, axis) < candidate_cost(m, axis) || c.mass > m.mass);
        CHECK_FALSE(dominates);
      }
    }
  }
}

TEST_CASE("mass is non-decreasing in w_m at fixed d_m") {
  const auto& scan = default_scan();
  for (std::size_t d = 0; d < 20; ++d) {
    for (std::size_t w = 1; w < 40; ++w) CHECK(scan[w * 20 + d].mass >= scan[(w - 1) * 20 + d].mass);
  }
}

TEST_CASE("CSV round trip and selected flag") {
  const auto& scan = default_scan();
  Budget h2;
  h2.target_macs = 4'500'000'000;
  h2.target_params = 28'000'000;
  const auto csv = candidates_csv(scan, h2);
  CHECK(csv.rfind("w_m,d_m,widths,depths,params,macs,mass,nonlinear_units,valid,in_budget,selected\n", 0) == 0);
  const auto back = parse_candidates_csv(csv);
  REQUIRE(back.size() == scan.size());
  for (std::size_t i = 0; i < scan.size(); ++i) {
    CHECK(back[i].macs == scan[i].macs);
    CHECK(back[i].widths == scan[i].widths);
    CHECK(back[i].mass == scan[i].mass);
  }
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 801);
  std::size_t selected = 0, pos = 0;
  while ((pos = csv.find(",true\n", pos)) != std::string::npos) {
    ++selected;
    ++pos;
  }
  CHECK(selected == 1);
  CHECK(candidates_json(scan, h2).find("\"selected\": true") != std::string::npos);
}

TEST_CASE("malformed CSV rows report the line") {
  const std::string header = "w_m,d_m,widths,depths,params,macs,mass,nonlinear_units,valid,in_budget,selected\n";
  try {
    parse_candidates_csv(header + "1,1,96;192,3;3,10,10,5,4,true,false,false\n1,1,x,3,10\n");
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_candidates_csv("bad header\n"), Error);
}
