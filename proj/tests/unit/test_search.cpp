#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "nnmass/error.hpp"
#include "nnmass/search.hpp"

using namespace nnmass;

namespace {

// Best accuracy over linear probes sign(<n, x> - t), n on a fine angle grid.
double best_linear_probe(const Dataset& d) {
  double best = 0.0;
  const int n = d.size();
  std::vector<std::pair<double, int>> proj(static_cast<std::size_t>(n));
  for (int a = 0; a < 720; ++a) {
    const double th = std::numbers::pi * a / 360.0;
    for (int i = 0; i < n; ++i) {
      proj[static_cast<std::size_t>(i)] = {std::cos(th) * d.inputs.at(i, 0) + std::sin(th) * d.inputs.at(i, 1),
                                           d.labels[static_cast<std::size_t>(i)]};
    }
    std::sort(proj.begin(), proj.end());
    // Threshold between sorted positions: predict 1 above it.
    int ones_above = 0;
    for (const auto& p : proj) ones_above += p.second;
    int zeros_below = 0;
    for (int k = 0; k <= n; ++k) {
      best = std::max(best, static_cast<double>(zeros_below + ones_above) / n);
      if (k < n) {
        if (proj[static_cast<std::size_t>(k)].second == 1) {
          --ones_above;
        } else {
          ++zeros_below;
        }
      }
    }
  }
  return best;
}

AfrbMlpModel small_model(std::uint64_t seed, AfrbVariant v = AfrbVariant::A1, int blocks = 2) {
  ModelConfig c;
  c.seed = seed;
  c.variant = v;
  c.blocks = blocks;
  c.width = v == AfrbVariant::A1 ? 6 : 2;
  c.expansion = Rational(3);
  c.alpha_init = 0.3 + 0.05 * static_cast<double>(seed % 10);
  return make_afrb_model(c);
}

Batch small_batch(std::uint64_t seed, int n = 16) {
  return full_batch(make_dataset(DatasetKind::Moons, std::max(n, 8), 0.2, seed));
}

double rel_err(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-4}); }

// Central differences on every parameter class.
double max_gradient_error(AfrbMlpModel m, const Batch& b, double lambda) {
  const auto g = backward(m, b, lambda);
  const double h = 1e-6;
  double worst = 0.0;
  auto probe = [&](double& p, double analytic) {
    const double saved = p;
    p = saved + h;
    const double up = forward_loss(m, b, lambda).loss;
    p = saved - h;
    const double down = forward_loss(m, b, lambda).loss;
    p = saved;
    worst = std::max(worst, rel_err(analytic, (up - down) / (2 * h)));
  };
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto& mb = m.blocks[i];
    const auto& gb = g.grad.blocks[i];
    probe(mb.alpha, gb.alpha);
    for (std::size_t k = 0; k < mb.w_expand.size(); ++k) probe(mb.w_expand[k], gb.w_expand[k]);
    for (std::size_t k = 0; k < mb.w_project.size(); ++k) probe(mb.w_project[k], gb.w_project[k]);
  }
  for (std::size_t k = 0; k < m.head.w.size(); ++k) probe(m.head.w[k], g.grad.head.w[k]);
  for (std::size_t k = 0; k < m.head.b.size(); ++k) probe(m.head.b[k], g.grad.head.b[k]);
  return worst;
}

}  // namespace

TEST_CASE("datasets") {
  const auto blobs = make_dataset(DatasetKind::Blobs, 200, 0.3, 1);
  CHECK(blobs.size() == 200);
  int correct = 0;
  for (int i = 0; i < 200; ++i) correct += (blobs.inputs.at(i, 0) > 0.0) == (blobs.labels[static_cast<std::size_t>(i)] == 1);
  CHECK(correct == 200);
  const auto moons = make_dataset(DatasetKind::Moons, 200, 0.1, 1);
  CHECK(best_linear_probe(moons) < 0.95);
  CHECK(best_linear_probe(make_dataset(DatasetKind::Xor, 200, 0.0, 2)) < 0.95);
  CHECK(make_dataset(DatasetKind::Moons, 50, 0.1, 3).inputs == make_dataset(DatasetKind::Moons, 50, 0.1, 3).inputs);
  CHECK_THROWS_AS(make_dataset(DatasetKind::Blobs, 0, 0.3, 1), Error);
  CHECK_THROWS_AS(parse_dataset_kind("spirals"), Error);
}

TEST_CASE("forward at the attractors") {
  auto m = small_model(3, AfrbVariant::A1, 3);
  const auto b = small_batch(1, 32);
  for (auto& blk : m.blocks) blk.alpha = 1.0;
  const auto r1 = forward_loss(m, b, 1e-3);
  CHECK(r1.regularizer == 0.0);
  // alpha = 1: ReLU -> linear -> linear.
  const Tensor x = rand_tensor({5, 2}, Distribution::normal(0.0, 1.0), 9);
  Tensor relu_x = x;
  for (auto& v : relu_x.data()) v = std::max(v, 0.0);
  const auto& b0 = m.blocks[0];
  CHECK(max_abs_diff(block_forward(b0, x), matmul(matmul(relu_x, transpose(b0.w_expand)), transpose(b0.w_project))) <=
        1e-12);

  for (auto& blk : m.blocks) blk.alpha = 0.0;
  const auto r0 = forward_loss(m, b, 1e-3);
  CHECK(r0.regularizer == doctest::Approx(3e-3).epsilon(1e-12));
  Tensor h = matmul(x, transpose(b0.w_expand));
  for (auto& v : h.data()) v = std::max(v, 0.0);
  CHECK(max_abs_diff(block_forward(m.blocks[0], x), matmul(h, transpose(b0.w_project))) <= 1e-12);

  const auto r = forward_loss(small_model(4), small_batch(2, 32), 1e-3);
  CHECK(std::isfinite(r.loss));
  CHECK(r.accuracy >= 0.0);
  CHECK(r.accuracy <= 1.0);
}

TEST_CASE("gradients match finite differences") {
  double worst = 0.0;
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto variant = static_cast<AfrbVariant>(s % 3);
    worst = std::max(worst, max_gradient_error(small_model(s, variant), small_batch(100 + s), 1e-3));
  }
  CHECK(worst <= 1e-5);
}

TEST_CASE("regularizer-only gradient") {
  auto m = small_model(0);
  for (auto& b : m.blocks) {
    for (auto& v : b.w_expand.data()) v = 0.0;
    for (auto& v : b.w_project.data()) v = 0.0;
  }
  for (auto& v : m.head.w.data()) v = 0.0;
  m.blocks[0].alpha = 0.2;
  m.blocks[1].alpha = 1.7;
  const auto g = backward(m, small_batch(5), 0.01);
  CHECK(g.grad.blocks[0].alpha == doctest::Approx(2 * 0.01 * (0.2 - 1.0)).epsilon(1e-12));
  CHECK(g.grad.blocks[1].alpha == doctest::Approx(2 * 0.01 * (1.7 - 1.0)).epsilon(1e-12));
}

TEST_CASE("alpha gradient vanishes on positive inputs at alpha = 1") {
  auto m = small_model(1, AfrbVariant::A1, 1);
  m.blocks[0].alpha = 1.0;
  for (auto& v : m.blocks[0].w_expand.data()) v = std::abs(v);
  Batch b = small_batch(6);
  for (auto& v : b.inputs.data()) v = std::abs(v) + 0.1;
  CHECK(backward(m, b, 1e-3).grad.blocks[0].alpha == 0.0);
}

TEST_CASE("training") {
  const auto data = make_dataset(DatasetKind::Blobs, 256, 0.3, 0);
  ModelConfig mc;
  mc.seed = 0;
  SearchConfig sc;
  sc.epochs = 0;
  auto m = make_afrb_model(mc);
  const auto before = m.blocks[0].w_expand;
  CHECK(train_search(m, data, sc).empty());
  CHECK(m.blocks[0].w_expand == before);

  sc.epochs = 20;
  sc.lambda = 0.0;
  const auto t0 = train_search(m, data, sc);
  REQUIRE(t0.size() == 20);
  for (const auto& r : t0) CHECK(r.regularizer == 0.0);

  auto a = make_afrb_model(mc), b = make_afrb_model(mc);
  sc.lambda = 1e-3;
  CHECK(trace_csv(train_search(a, data, sc)) == trace_csv(train_search(b, data, sc)));

  auto c = make_afrb_model(mc);
  const auto trace = train_search(c, data, sc);
  CHECK(trace.back().loss <= trace.front().loss);
  CHECK(trace_csv(trace).rfind("epoch,loss,acc,reg,alpha_0,alpha_1,alpha_2\n", 0) == 0);

  sc.lr = 1e6;
  auto d = make_afrb_model(mc);
  CHECK_THROWS_WITH_AS(train_search(d, data, sc), doctest::Contains("divergence at epoch"), Error);
}

TEST_CASE("regularizer pulls alpha geometrically") {
  ModelConfig mc;
  mc.blocks = 2;
  auto m = make_afrb_model(mc);
  for (auto& b : m.blocks) {
    for (auto& v : b.w_expand.data()) v = 0.0;
    for (auto& v : b.w_project.data()) v = 0.0;
  }
  for (auto& v : m.head.w.data()) v = 0.0;
  m.blocks[1].alpha = 2.0;
  const auto data = make_dataset(DatasetKind::Blobs, 16, 0.3, 0);
  SearchConfig sc;
  sc.lambda = 0.05;
  sc.lr = 0.5;
  sc.batch = 16;
  sc.epochs = 10;
  const auto trace = train_search(m, data, sc);
  const double rate = 1.0 - 2.0 * sc.lr * sc.lambda;
  for (std::size_t e = 0; e < trace.size(); ++e) {
    const double k = std::pow(rate, static_cast<double>(e + 1));
    CHECK(trace[e].alphas[0] - 1.0 == doctest::Approx(-0.5 * k).epsilon(1e-12));
    CHECK(trace[e].alphas[1] - 1.0 == doctest::Approx(1.0 * k).epsilon(1e-12));
  }
}

TEST_CASE("nonlinearity count") {
  ModelConfig mc;
  mc.in_dim = 8;
  mc.width = 8;
  mc.alpha_init = 0.0;
  auto m = make_afrb_model(mc);
  CHECK(nonlinearity_count(m) == 96);
  for (auto& b : m.blocks) b.alpha = 1.0;
  CHECK(nonlinearity_count(m) == 0);
  m.blocks[1].alpha = 0.1;
  CHECK(nonlinearity_count(m) == 32);
}

TEST_CASE("finalize") {
  ModelConfig mc;
  mc.in_dim = 4;
  mc.width = 4;
  mc.variant = AfrbVariant::A2;
  auto m = make_afrb_model(mc);
  m.blocks[0].alpha = 1.0;
  m.blocks[1].alpha = 0.0;
  m.blocks[2].alpha = 1.1;
  const auto f = finalize(m);
  REQUIRE(f.blocks.size() == 3);
  CHECK(f.blocks[0].kind == FinalBlock::Kind::Collapsed);
  CHECK(f.blocks[1].kind == FinalBlock::Kind::Ibn);
  CHECK(f.blocks[2].kind == FinalBlock::Kind::Collapsed);

  Tensor x = rand_tensor({20, 4}, Distribution::normal(0.0, 1.0), 3);
  for (auto& v : x.data()) v = std::abs(v);
  CHECK(max_abs_diff(final_block_forward(f.blocks[0], x), block_forward(m.blocks[0], x)) <= 1e-12);
  CHECK(max_abs_diff(final_block_forward(f.blocks[1], x), block_forward(m.blocks[1], x)) <= 1e-12);

  // Collapsed: d * d_out; kept: d * e d + e d * d_out.
  const std::int64_t dense = 4 * 4, ibn = 4 * 16 + 16 * 4;
  CHECK(f.parameter_count() == 2 * dense + ibn + 2 * 4 + 2);
  CHECK(model_parameter_count(m) == 3 * ibn + 3 + 2 * 4 + 2);

  AfrbMlpModel empty;
  empty.head = m.head;
  CHECK(finalize(empty).blocks.empty());
}

TEST_CASE("search defaults reach the target on blobs") {
  const auto data = make_dataset(DatasetKind::Blobs, 256, 0.3, 0);
  ModelConfig mc;
  auto m = make_afrb_model(mc);
  const auto trace = train_search(m, data, SearchConfig{});
  REQUIRE(trace.size() == 300);
  CHECK(trace.back().accuracy >= 0.95);
  int in_band = 0;
  for (double a : trace.back().alphas) in_band += Band{}.contains(a) ? 1 : 0;
  CHECK(in_band >= 2);
  const auto summary = search_summary_json(m, trace, Band{});
  CHECK(summary.find("\"collapse\"") != std::string::npos);
}
