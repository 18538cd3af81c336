#include "nnmass/search.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "json.hpp"
#include "nnmass/error.hpp"

namespace nnmass {

namespace {

void add_bias_rows(Tensor& y, const Tensor& b) {
  for (int r = 0; r < y.dim(0); ++r) {
    for (int c = 0; c < y.dim(1); ++c) y.at(r, c) += b[static_cast<std::size_t>(c)];
  }
}

Tensor map(const Tensor& t, double (*f)(double, double), double a) {
  Tensor out = t;
  for (auto& v : out.data()) v = f(v, a);
  return out;
}

double relu(double x, double) { return std::max(x, 0.0); }

void axpy(Tensor& y, double a, const Tensor& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += a * x[i];
}

// Per-block activations kept for the reverse pass.
struct BlockTape {
  Tensor x, u, h, v;
};

struct Tape {
  std::vector<BlockTape> blocks;
  Tensor features;
  Tensor probs;
};

ForwardResult run_forward(const AfrbMlpModel& model, const Batch& batch, double lambda, Tape* tape) {
  if (batch.inputs.rank() != 2 || batch.inputs.dim(0) != static_cast<int>(batch.labels.size())) {
    throw Error("forward_loss: batch inputs must be [b, d] with one label per row");
  }
  if (batch.labels.empty()) throw Error("forward_loss: empty batch");
  Tensor x = batch.inputs;
  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    const auto& b = model.blocks[i];
    if (x.dim(1) != b.in_dim()) throw Error("forward_loss: shape mismatch at block " + std::to_string(i));
    BlockTape t;
    t.x = x;
    t.u = map(x, prelu, 1.0 - b.alpha);
    t.h = matmul(t.u, transpose(b.w_expand));
    t.v = map(t.h, prelu, b.alpha);
    Tensor y = matmul(t.v, transpose(b.w_project));
    if (b.residual()) axpy(y, 1.0, x);
    if (!y.all_finite()) throw Error("forward_loss: non-finite activations at block " + std::to_string(i));
    if (tape) tape->blocks.push_back(std::move(t));
    x = std::move(y);
  }
  if (x.dim(1) != model.head.w.dim(1)) throw Error("forward_loss: shape mismatch at head");
  Tensor logits = matmul(x, transpose(model.head.w));
  add_bias_rows(logits, model.head.b);

  const int n = logits.dim(0), k = logits.dim(1);
  ForwardResult r;
  Tensor probs({n, k});
  int correct = 0;
  double ce = 0.0;
  for (int i = 0; i < n; ++i) {
    const int y = batch.labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= k) throw Error("forward_loss: label out of range");
    double mx = logits.at(i, 0);
    int arg = 0;
    for (int c = 1; c < k; ++c) {
      if (logits.at(i, c) > mx) {
        mx = logits.at(i, c);
        arg = c;
      }
    }
    double z = 0.0;
    for (int c = 0; c < k; ++c) z += std::exp(logits.at(i, c) - mx);
    for (int c = 0; c < k; ++c) probs.at(i, c) = std::exp(logits.at(i, c) - mx) / z;
    ce += std::log(z) - (logits.at(i, y) - mx);
    correct += arg == y ? 1 : 0;
  }
  double reg = 0.0;
  for (const auto& b : model.blocks) reg += (b.alpha - 1.0) * (b.alpha - 1.0);
  r.regularizer = lambda * reg;
  r.loss = ce / n + r.regularizer;
  r.accuracy = static_cast<double>(correct) / n;
  if (!std::isfinite(r.loss)) throw Error("forward_loss: non-finite loss");
  if (tape) {
    tape->features = std::move(x);
    tape->probs = std::move(probs);
  }
  return r;
}

}  // namespace

DatasetKind parse_dataset_kind(const std::string& name) {
  if (name == "blobs") return DatasetKind::Blobs;
  if (name == "moons") return DatasetKind::Moons;
  if (name == "xor") return DatasetKind::Xor;
  throw Error("unknown dataset '" + name + "' (expected blobs, moons or xor)");
}

Dataset make_dataset(DatasetKind kind, int n, double noise, std::uint64_t seed) {
  if (n < 8) throw Error("make_dataset: n must be >= 8");
  if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error("make_dataset: noise must be finite and >= 0");
  Dataset d;
  d.inputs = Tensor({n, 2});
  d.labels.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto base = static_cast<std::uint64_t>(i) * 4;
    const double u0 = uniform01(seed, base), u1 = uniform01(seed, base + 1);
    const double g0 = standard_normal(seed, base + 2), g1 = standard_normal(seed, base + 3);
    const int label = i % 2;
    double x = 0.0, y = 0.0;
    switch (kind) {
      case DatasetKind::Blobs: {
        const double r = 3.0 * noise * std::sqrt(u0);
        const double a = 2.0 * std::numbers::pi * u1;
        x = (label ? 1.5 : -1.5) + r * std::cos(a);
        y = r * std::sin(a);
        break;
      }
      case DatasetKind::Moons: {
        const double t = std::numbers::pi * u0;
        x = label ? 1.0 - std::cos(t) : std::cos(t);
        y = label ? 0.5 - std::sin(t) : std::sin(t);
        x += noise * g0;
        y += noise * g1;
        break;
      }
      case DatasetKind::Xor: {
        x = 2.0 * u0 - 1.0;
        y = 2.0 * u1 - 1.0;
        d.labels[static_cast<std::size_t>(i)] = (x > 0) == (y > 0) ? 1 : 0;
        x += noise * g0;
        y += noise * g1;
        d.inputs.at(i, 0) = x;
        d.inputs.at(i, 1) = y;
        continue;
      }
    }
    d.inputs.at(i, 0) = x;
    d.inputs.at(i, 1) = y;
    d.labels[static_cast<std::size_t>(i)] = label;
  }
  return d;
}

void AfrbMlpBlock::validate() const {
  if (w_expand.rank() != 2 || w_project.rank() != 2 || w_project.dim(1) != w_expand.dim(0)) {
    throw Error("afrb block: W_expand [h, d] and W_project [d_out, h] must agree");
  }
  if (residual() && out_dim() != in_dim()) throw Error("afrb block: residual variants require d_out == d");
  if (!std::isfinite(alpha)) throw Error("afrb block: alpha must be finite");
}

void AfrbMlpModel::validate() const {
  int d = blocks.empty() ? head.w.dim(1) : blocks.front().in_dim();
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    blocks[i].validate();
    if (blocks[i].in_dim() != d) throw Error("afrb model: dimension mismatch at block " + std::to_string(i));
    d = blocks[i].out_dim();
  }
  if (head.w.rank() != 2 || head.w.dim(1) != d || head.b.rank() != 1 || head.b.dim(0) != head.w.dim(0)) {
    throw Error("afrb model: head must be [classes, d] with [classes] bias");
  }
}

AfrbMlpModel make_afrb_model(const ModelConfig& cfg) {
  if (cfg.blocks < 0 || cfg.in_dim < 1 || cfg.width < 1 || cfg.classes < 2) {
    throw Error("make_afrb_model: invalid configuration");
  }
  const bool residual = cfg.variant != AfrbVariant::A1;
  if (residual && cfg.width != cfg.in_dim) throw Error("make_afrb_model: residual variants require width == in_dim");
  const Rational e = cfg.variant == AfrbVariant::A3 ? Rational(1, 2) : cfg.expansion;
  AfrbMlpModel m;
  int d = cfg.in_dim;
  for (int i = 0; i < cfg.blocks; ++i) {
    const int hidden = static_cast<int>(std::max<std::int64_t>(1, ceil_mul(e, d)));
    const auto s = splitmix64(cfg.seed, static_cast<std::uint64_t>(i));
    AfrbMlpBlock b;
    b.alpha = cfg.alpha_init;
    b.variant = cfg.variant;
    b.w_expand = rand_tensor({hidden, d}, Distribution::normal(0.0, 2.0 / d), splitmix64(s, 1));
    b.w_project = rand_tensor({cfg.width, hidden}, Distribution::normal(0.0, 1.0 / hidden), splitmix64(s, 2));
    m.blocks.push_back(std::move(b));
    d = cfg.width;
  }
  m.head.w = rand_tensor({cfg.classes, d}, Distribution::normal(0.0, 1.0 / d), splitmix64(cfg.seed, 1000));
  m.head.b = Tensor({cfg.classes});
  m.validate();
  return m;
}

Batch full_batch(const Dataset& data) { return Batch{data.inputs, data.labels}; }

ForwardResult forward_loss(const AfrbMlpModel& model, const Batch& batch, double lambda) {
  return run_forward(model, batch, lambda, nullptr);
}

Gradients backward(const AfrbMlpModel& model, const Batch& batch, double lambda) {
  Tape tape;
  Gradients g;
  g.forward = run_forward(model, batch, lambda, &tape);
  const int n = tape.probs.dim(0);

  Tensor dlogits = tape.probs;
  for (int i = 0; i < n; ++i) dlogits.at(i, batch.labels[static_cast<std::size_t>(i)]) -= 1.0;
  for (auto& v : dlogits.data()) v /= n;

  g.grad.head.w = matmul(transpose(dlogits), tape.features);
  g.grad.head.b = Tensor({dlogits.dim(1)});
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < dlogits.dim(1); ++c) g.grad.head.b[static_cast<std::size_t>(c)] += dlogits.at(i, c);
  }
  Tensor dx = matmul(dlogits, model.head.w);

  g.grad.blocks.resize(model.blocks.size());
  for (std::size_t bi = model.blocks.size(); bi-- > 0;) {
    const auto& b = model.blocks[bi];
    const auto& t = tape.blocks[bi];
    auto& gb = g.grad.blocks[bi];
    gb.variant = b.variant;
    const Tensor& dy = dx;

    gb.w_project = matmul(transpose(dy), t.v);
    Tensor dv = matmul(dy, b.w_project);
    double dalpha = 2.0 * lambda * (b.alpha - 1.0);
    Tensor dh = dv;
    for (std::size_t i = 0; i < dh.size(); ++i) {
      const double h = t.h[i];
      dalpha += dv[i] * std::min(h, 0.0);
      dh[i] = h > 0.0 ? dv[i] : b.alpha * dv[i];
    }
    gb.w_expand = matmul(transpose(dh), t.u);
    Tensor du = matmul(dh, b.w_expand);
    Tensor dxi = du;
    for (std::size_t i = 0; i < du.size(); ++i) {
      const double x = t.x[i];
      dalpha -= du[i] * std::min(x, 0.0);
      dxi[i] = x > 0.0 ? du[i] : (1.0 - b.alpha) * du[i];
    }
    if (b.residual()) axpy(dxi, 1.0, dy);
    gb.alpha = dalpha;
    dx = std::move(dxi);
  }
  return g;
}

void SearchConfig::validate() const {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw Error("search config: lambda must lie in [0, 1)");
  if (!(lr > 0.0) || !std::isfinite(lr)) throw Error("search config: lr must be > 0");
  if (epochs < 0) throw Error("search config: epochs must be >= 0");
  if (batch < 1) throw Error("search config: batch must be >= 1");
  band.validate();
}

SearchTrace train_search(AfrbMlpModel& model, const Dataset& data, const SearchConfig& cfg) {
  cfg.validate();
  model.validate();
  const int n = data.size();
  const int d = data.inputs.dim(1);
  SearchTrace trace;
  std::vector<int> order(static_cast<std::size_t>(n));
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    const auto es = splitmix64(cfg.seed, static_cast<std::uint64_t>(epoch));
    for (int i = n - 1; i > 0; --i) {
      const auto j = static_cast<int>(splitmix64(es, static_cast<std::uint64_t>(i)) % static_cast<std::uint64_t>(i + 1));
      std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    double loss_sum = 0.0;
    int batches = 0;
    for (int start = 0; start < n; start += cfg.batch) {
      const int len = std::min(cfg.batch, n - start);
      Batch b{Tensor({len, d}), std::vector<int>(static_cast<std::size_t>(len))};
      for (int r = 0; r < len; ++r) {
        const int src = order[static_cast<std::size_t>(start + r)];
        for (int c = 0; c < d; ++c) b.inputs.at(r, c) = data.inputs.at(src, c);
        b.labels[static_cast<std::size_t>(r)] = data.labels[static_cast<std::size_t>(src)];
      }
      Gradients g;
      try {
        g = backward(model, b, cfg.lambda);
      } catch (const Error& e) {
        throw Error("train_search: divergence at epoch " + std::to_string(epoch) + ": " + e.what());
      }
      loss_sum += g.forward.loss;
      ++batches;
      for (std::size_t i = 0; i < model.blocks.size(); ++i) {
        auto& mb = model.blocks[i];
        const auto& gb = g.grad.blocks[i];
        axpy(mb.w_expand, -cfg.lr, gb.w_expand);
        axpy(mb.w_project, -cfg.lr, gb.w_project);
        mb.alpha -= cfg.lr * gb.alpha;
      }
      axpy(model.head.w, -cfg.lr, g.grad.head.w);
      axpy(model.head.b, -cfg.lr, g.grad.head.b);
    }
    EpochRecord rec;
    rec.loss = loss_sum / batches;
    if (!std::isfinite(rec.loss)) throw Error("train_search: divergence at epoch " + std::to_string(epoch));
    try {
      const ForwardResult full = forward_loss(model, full_batch(data), cfg.lambda);
      rec.accuracy = full.accuracy;
      rec.regularizer = full.regularizer;
    } catch (const Error& e) {
      throw Error("train_search: divergence at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    for (const auto& mb : model.blocks) rec.alphas.push_back(mb.alpha);
    trace.push_back(std::move(rec));
  }
  return trace;
}

std::int64_t nonlinearity_count(const AfrbMlpModel& model, const Band& band) {
  std::int64_t total = 0;
  for (const auto& b : model.blocks) {
    if (afrb_decide(b.alpha, band).kind == RestructureDecision::Kind::KeepIbn) total += b.hidden();
  }
  return total;
}

FinalMlp finalize(const AfrbMlpModel& model, const Band& band) {
  FinalMlp out;
  out.head = model.head;
  for (const auto& b : model.blocks) {
    FinalBlock f;
    f.residual = b.residual();
    if (afrb_decide(b.alpha, band).kind == RestructureDecision::Kind::Collapse) {
      f.kind = FinalBlock::Kind::Collapsed;
      f.dense = matmul(b.w_project, b.w_expand);
    } else {
      f.kind = FinalBlock::Kind::Ibn;
      f.w_expand = b.w_expand;
      f.w_project = b.w_project;
    }
    out.blocks.push_back(std::move(f));
  }
  return out;
}

std::int64_t FinalMlp::parameter_count() const {
  std::int64_t p = static_cast<std::int64_t>(head.w.size() + head.b.size());
  for (const auto& b : blocks) {
    p += static_cast<std::int64_t>(b.kind == FinalBlock::Kind::Collapsed ? b.dense.size()
                                                                         : b.w_expand.size() + b.w_project.size());
  }
  return p;
}

std::int64_t model_parameter_count(const AfrbMlpModel& model) {
  std::int64_t p = static_cast<std::int64_t>(model.head.w.size() + model.head.b.size());
  for (const auto& b : model.blocks) p += static_cast<std::int64_t>(b.w_expand.size() + b.w_project.size()) + 1;
  return p;
}

Tensor block_forward(const AfrbMlpBlock& b, const Tensor& x) {
  Tensor y = matmul(map(matmul(map(x, prelu, 1.0 - b.alpha), transpose(b.w_expand)), prelu, b.alpha),
                    transpose(b.w_project));
  if (b.residual()) axpy(y, 1.0, x);
  return y;
}

Tensor final_block_forward(const FinalBlock& b, const Tensor& x) {
  const Tensor u = map(x, relu, 0.0);
  Tensor y = b.kind == FinalBlock::Kind::Collapsed
                 ? matmul(u, transpose(b.dense))
                 : matmul(map(matmul(u, transpose(b.w_expand)), relu, 0.0), transpose(b.w_project));
  if (b.residual) axpy(y, 1.0, x);
  return y;
}

Tensor final_forward(const FinalMlp& mlp, const Tensor& x) {
  Tensor h = x;
  for (const auto& b : mlp.blocks) h = final_block_forward(b, h);
  Tensor logits = matmul(h, transpose(mlp.head.w));
  add_bias_rows(logits, mlp.head.b);
  return logits;
}

std::string trace_csv(const SearchTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  const std::size_t nb = trace.empty() ? 0 : trace.front().alphas.size();
  os << "epoch,loss,acc,reg";
  for (std::size_t i = 0; i < nb; ++i) os << ",alpha_" << i;
  os << '\n';
  for (std::size_t e = 0; e < trace.size(); ++e) {
    const auto& r = trace[e];
    os << e << ',' << r.loss << ',' << r.accuracy << ',' << r.regularizer;
    for (double a : r.alphas) os << ',' << a;
    os << '\n';
  }
  return os.str();
}

std::string search_summary_json(const AfrbMlpModel& model, const SearchTrace& trace, const Band& band) {
  nlohmann::ordered_json j;
  j["epochs"] = trace.size();
  j["final_loss"] = trace.empty() ? 0.0 : trace.back().loss;
  j["final_accuracy"] = trace.empty() ? 0.0 : trace.back().accuracy;
  j["band"] = {band.lo, band.hi};
  auto blocks = nlohmann::ordered_json::array();
  int collapsed = 0;
  for (std::size_t i = 0; i < model.blocks.size(); ++i) {
    const auto d = afrb_decide(model.blocks[i].alpha, band);
    const bool c = d.kind == RestructureDecision::Kind::Collapse;
    collapsed += c ? 1 : 0;
    blocks.push_back({{"block", i}, {"alpha", d.alpha}, {"decision", c ? "collapse" : "keep_ibn"}});
  }
  j["blocks"] = std::move(blocks);
  j["collapsed_blocks"] = collapsed;
  j["nonlinear_units"] = nonlinearity_count(model, band);
  const FinalMlp f = finalize(model, band);
  j["params_before"] = model_parameter_count(model);
  j["params_after"] = f.parameter_count();
  return j.dump(2) + "\n";
}

}  // namespace nnmass
