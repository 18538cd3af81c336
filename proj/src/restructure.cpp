#include "nnmass/restructure.hpp"

#include <cmath>

#include "json.hpp"
#include "nnmass/error.hpp"

namespace nnmass {

namespace {

bool is_spatial(const ConvWeights& w) { return w.kernel_size() > 1; }

// Dense [C_out, C_in] matrix of a 1x1 conv, expanding groups.
Tensor dense_matrix(const ConvWeights& w) {
  const int c_out = w.out_channels(), c_in = w.in_channels();
  const int cin_g = w.kernel.dim(1), cout_g = c_out / w.groups;
  Tensor m({c_out, c_in});
  for (int o = 0; o < c_out; ++o) {
    const int g = o / cout_g;
    for (int ci = 0; ci < cin_g; ++ci) m.at(o, g * cin_g + ci) = w.kernel.at(o, ci, 0, 0);
  }
  return m;
}

Tensor bias_or_zero(const ConvWeights& w) { return w.bias ? *w.bias : Tensor({w.out_channels()}); }

// Composite state: dense kernel [C_out, C_in, k, k], bias, stride.
struct Composite {
  Tensor kernel;
  Tensor bias;
  int stride = 1;
};

Composite after_pointwise(const Composite& cur, const ConvWeights& layer) {
  const Tensor m = dense_matrix(layer);
  const int c_out = m.dim(0), c_mid = m.dim(1);
  const int c_in = cur.kernel.dim(1), k = cur.kernel.dim(2);
  Composite next{Tensor({c_out, c_in, k, k}), bias_or_zero(layer), cur.stride};
  for (int o = 0; o < c_out; ++o) {
    for (int c = 0; c < c_mid; ++c) {
      const double a = m.at(o, c);
      if (a == 0.0) continue;
      next.bias[static_cast<std::size_t>(o)] += a * cur.bias[static_cast<std::size_t>(c)];
      for (int i = 0; i < c_in; ++i) {
        for (int u = 0; u < k; ++u) {
          for (int v = 0; v < k; ++v) next.kernel.at(o, i, u, v) += a * cur.kernel.at(c, i, u, v);
        }
      }
    }
  }
  return next;
}

// cur must be 1x1 here.
Composite after_spatial(const Composite& cur, const ConvWeights& layer) {
  const int c_out = layer.out_channels(), k = layer.kernel_size();
  const int cin_g = layer.kernel.dim(1), cout_g = c_out / layer.groups;
  const int c_in = cur.kernel.dim(1);
  Composite next{Tensor({c_out, c_in, k, k}), bias_or_zero(layer), layer.stride};
  for (int o = 0; o < c_out; ++o) {
    const int g = o / cout_g;
    for (int cl = 0; cl < cin_g; ++cl) {
      const int c = g * cin_g + cl;
      double tap_sum = 0.0;
      for (int u = 0; u < k; ++u) {
        for (int v = 0; v < k; ++v) {
          const double d = layer.kernel.at(o, cl, u, v);
          tap_sum += d;
          for (int i = 0; i < c_in; ++i) next.kernel.at(o, i, u, v) += d * cur.kernel.at(c, i, 0, 0);
        }
      }
      next.bias[static_cast<std::size_t>(o)] += tap_sum * cur.bias[static_cast<std::size_t>(c)];
    }
  }
  return next;
}

Tensor normal(std::vector<int> shape, double var, std::uint64_t seed) {
  return rand_tensor(std::move(shape), Distribution::normal(0.0, var), seed);
}

BNParams random_bn(int c, std::uint64_t seed) {
  BNParams bn;
  bn.mean = normal({c}, 1.0, splitmix64(seed, 1));
  bn.var = rand_tensor({c}, Distribution::uniform(0.5, 1.5), splitmix64(seed, 2));
  bn.gamma = rand_tensor({c}, Distribution::uniform(0.5, 1.5), splitmix64(seed, 3));
  bn.beta = normal({c}, 1.0, splitmix64(seed, 4));
  bn.epsilon = 1e-5;
  return bn;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::sqrt(2.0))); }

}  // namespace

void LinearSequence::validate() const {
  if (layers.empty()) throw Error("linear sequence: empty");
  int spatial = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const auto& w = layers[i].conv;
    w.validate();
    if (is_spatial(w)) {
      ++spatial;
    } else if (w.stride != 1) {
      throw Error("linear sequence: layer " + std::to_string(i) + " is 1x1 with stride != 1");
    }
    if (i > 0 && layers[i - 1].conv.out_channels() != w.in_channels()) {
      throw Error("linear sequence: channel mismatch at layer " + std::to_string(i) + " (" +
                  std::to_string(layers[i - 1].conv.out_channels()) + " -> " + std::to_string(w.in_channels()) +
                  ")");
    }
  }
  if (spatial > 1) throw Error("linear sequence: more than one spatial element");
}

bool LinearSequence::has_expansion_1x1() const {
  return !layers.empty() && !is_spatial(layers.front().conv) &&
         layers.front().conv.out_channels() > layers.front().conv.in_channels();
}

bool LinearSequence::has_depthwise() const {
  for (const auto& l : layers) {
    if (is_spatial(l.conv) && l.conv.groups == l.conv.in_channels() && l.conv.groups > 1) return true;
  }
  return false;
}

bool LinearSequence::has_projection_1x1() const {
  return layers.size() > 1 && !is_spatial(layers.back().conv);
}

Tensor forward_sequence(const LinearSequence& seq, const Tensor& input) {
  seq.validate();
  Tensor x = input;
  for (const auto& l : seq.layers) {
    x = conv2d(x, l.conv, Padding::Same);
    if (l.bn) x = batch_norm(x, *l.bn);
  }
  return x;
}

ConvWeights collapse(const LinearSequence& seq) {
  seq.validate();
  const int c_in = seq.layers.front().conv.in_channels();
  Composite cur{Tensor({c_in, c_in, 1, 1}), Tensor({c_in}), 1};
  for (int i = 0; i < c_in; ++i) cur.kernel.at(i, i, 0, 0) = 1.0;
  for (const auto& l : seq.layers) {
    const ConvWeights w = l.bn ? fold_bn(l.conv, *l.bn) : l.conv;
    cur = is_spatial(w) ? after_spatial(cur, w) : after_pointwise(cur, w);
  }
  ConvWeights out;
  out.kernel = std::move(cur.kernel);
  out.stride = cur.stride;
  out.groups = 1;
  bool any_bias = false;
  for (double b : cur.bias.data()) any_bias = any_bias || b != 0.0;
  if (any_bias) out.bias = std::move(cur.bias);
  return out;
}

std::vector<bool> interior_mask(int height, int width, int kernel, int stride) {
  const int pad = kernel / 2;
  const int ho = (height + 2 * pad - kernel) / stride + 1;
  const int wo = (width + 2 * pad - kernel) / stride + 1;
  std::vector<bool> mask(static_cast<std::size_t>(ho) * wo);
  auto inside = [&](int o, int size) { return o * stride - pad >= 0 && o * stride - pad + kernel - 1 <= size - 1; };
  for (int y = 0; y < ho; ++y) {
    for (int x = 0; x < wo; ++x) mask[static_cast<std::size_t>(y) * wo + x] = inside(y, height) && inside(x, width);
  }
  return mask;
}

void Band::validate() const {
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw Error("band: bounds must be finite");
  if (lo > hi) throw Error("band: lo must be <= hi");
}

RestructureDecision afrb_decide(double alpha, const Band& band) {
  band.validate();
  if (!std::isfinite(alpha)) throw Error("afrb_decide: alpha must be finite");
  RestructureDecision d;
  d.alpha = alpha;
  d.band = band;
  d.kind = band.contains(alpha) ? RestructureDecision::Kind::Collapse : RestructureDecision::Kind::KeepIbn;
  return d;
}

ArchDescriptor apply_afrb_decisions(const ArchDescriptor& arch, const std::vector<double>& alphas, const Band& band) {
  std::size_t n_ibn = 0;
  for (const auto& b : arch.blocks) n_ibn += std::holds_alternative<Ibn>(b) ? 1 : 0;
  if (alphas.size() != n_ibn) {
    throw Error("apply_afrb_decisions: " + std::to_string(alphas.size()) + " alphas for " + std::to_string(n_ibn) +
                " AFRB blocks");
  }
  ArchDescriptor out = arch;
  out.stages.reset();
  std::size_t next = 0;
  for (auto& b : out.blocks) {
    auto* ibn = std::get_if<Ibn>(&b);
    if (!ibn) continue;
    const auto d = afrb_decide(alphas[next++], band);
    if (d.kind == RestructureDecision::Kind::Collapse) {
      b = RegularConv{ibn->dw_kernel, ibn->stride, ibn->out_channels, Activation::relu()};
    } else {
      ibn->activation = Activation::relu();
    }
  }
  validate(out);
  return out;
}

ConvNextSplitBlock split_convnext_block(const ConvNextBlock& block, const Rational& fraction,
                                       const Activation& branch_activation) {
  if (fraction <= 0 || fraction >= 1) throw Error("split: fraction must lie in (0, 1), got " + to_string(fraction));
  using K = Activation::Kind;
  if (branch_activation.kind != K::None && branch_activation.kind != K::GeLU &&
      branch_activation.kind != K::ExpKernel) {
    throw Error("split: branch activation must be none, gelu or exp_kernel");
  }
  return ConvNextSplitBlock{block.expansion, block.dw_kernel, fraction, branch_activation};
}

ArchDescriptor restructure_arch(const ArchDescriptor& arch, const Rational& fraction,
                                const Activation& branch_activation) {
  if (arch.family != Family::ConvNext) {
    throw Error("restructure_arch: requires the convnext family, got '" + std::string(family_name(arch.family)) +
                "'");
  }
  ArchDescriptor out = arch;
  out.stages.reset();
  for (auto& b : out.blocks) {
    if (const auto* cn = std::get_if<ConvNextBlock>(&b)) b = split_convnext_block(*cn, fraction, branch_activation);
  }
  validate(out);
  return out;
}

Rational split_mlp_mac_ratio(const Rational& expansion, const Rational& fraction) {
  if (expansion <= 0) throw Error("split_mlp_mac_ratio: expansion must be > 0");
  if (fraction <= 0 || fraction >= 1) throw Error("split_mlp_mac_ratio: fraction must lie in (0, 1)");
  return (2 * fraction * expansion + 1) / (2 * expansion);
}

Tensor ConvNextMlp::forward(const Tensor& x, std::optional<int> linear_from) const {
  if (x.rank() != 2 || x.dim(1) != width()) throw Error("mlp forward: input must be [n, " + std::to_string(width()) + "]");
  const int n = x.dim(0), mid = hidden(), w = width();
  const int cut = linear_from.value_or(mid);
  Tensor h = matmul(x, transpose(w1));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < mid; ++c) {
      double v = h.at(r, c) + b1[static_cast<std::size_t>(c)];
      h.at(r, c) = c < cut ? gelu(v) : v;
    }
  }
  Tensor y = matmul(h, transpose(w2));
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < w; ++c) y.at(r, c) += b2[static_cast<std::size_t>(c)];
  }
  return y;
}

ConvNextMlp random_convnext_mlp(int width, const Rational& expansion, std::uint64_t seed) {
  const int mid = static_cast<int>(ceil_mul(expansion, width));
  ConvNextMlp m;
  m.w1 = normal({mid, width}, 1.0 / width, splitmix64(seed, 11));
  m.b1 = normal({mid}, 0.1, splitmix64(seed, 12));
  m.w2 = normal({width, mid}, 1.0 / mid, splitmix64(seed, 13));
  m.b2 = normal({width}, 0.1, splitmix64(seed, 14));
  return m;
}

Tensor SplitMlp::forward(const Tensor& x) const {
  Tensor y = upper.forward(x);
  Tensor l = matmul(x, transpose(lower_w));
  for (int r = 0; r < l.dim(0); ++r) {
    for (int c = 0; c < l.dim(1); ++c) l.at(r, c) += lower_b[static_cast<std::size_t>(c)];
  }
  l = activate(branch_activation, l);
  for (std::size_t i = 0; i < y.size(); ++i) y[i] += l[i];
  return y;
}

ConvNextMlp prune_mlp(const ConvNextMlp& mlp, int keep) {
  const int w = mlp.width(), mid = mlp.hidden();
  if (keep < 1 || keep > mid) throw Error("prune_mlp: keep must lie in [1, " + std::to_string(mid) + "]");
  ConvNextMlp p;
  p.w1 = Tensor({keep, w});
  p.b1 = Tensor({keep});
  p.w2 = Tensor({w, keep});
  p.b2 = mlp.b2;
  for (int c = 0; c < keep; ++c) {
    p.b1[static_cast<std::size_t>(c)] = mlp.b1[static_cast<std::size_t>(c)];
    for (int i = 0; i < w; ++i) {
      p.w1.at(c, i) = mlp.w1.at(c, i);
      p.w2.at(i, c) = mlp.w2.at(i, c);
    }
  }
  return p;
}

SplitMlp split_mlp(const ConvNextMlp& mlp, const Rational& fraction, const Activation& branch_activation) {
  if (fraction <= 0 || fraction >= 1) throw Error("split_mlp: fraction must lie in (0, 1)");
  const int w = mlp.width(), mid = mlp.hidden();
  const int upper = static_cast<int>(ceil_mul(fraction, mid));
  SplitMlp s;
  s.upper = prune_mlp(mlp, upper);
  s.branch_activation = branch_activation;
  s.lower_w = Tensor({w, w});
  s.lower_b = Tensor({w});
  for (int o = 0; o < w; ++o) {
    for (int c = upper; c < mid; ++c) {
      const double a = mlp.w2.at(o, c);
      s.lower_b[static_cast<std::size_t>(o)] += a * mlp.b1[static_cast<std::size_t>(c)];
      for (int i = 0; i < w; ++i) s.lower_w.at(o, i) += a * mlp.w1.at(c, i);
    }
  }
  return s;
}

LinearSequence random_ibn_sequence(const CollapseTrial& t) {
  if (t.in_channels < 1 || t.kernel < 1 || t.kernel % 2 == 0 || t.stride < 1) {
    throw Error("collapse trial: need C_in >= 1, odd k, stride >= 1");
  }
  const int c = t.in_channels;
  const int mid = static_cast<int>(ceil_mul(t.expansion, c));
  if (mid < 1) throw Error("collapse trial: expansion too small");
  const std::uint64_t s = t.seed;
  LinearSequence seq;
  ConvWeights p1{normal({mid, c, 1, 1}, 1.0 / c, splitmix64(s, 1)), std::nullopt, 1, 1};
  ConvWeights dw{normal({mid, 1, t.kernel, t.kernel}, 1.0 / (t.kernel * t.kernel), splitmix64(s, 2)), std::nullopt,
                 t.stride, mid};
  ConvWeights p2{normal({c, mid, 1, 1}, 1.0 / mid, splitmix64(s, 3)), std::nullopt, 1, 1};
  if (t.biased) {
    p1.bias = normal({mid}, 1.0, splitmix64(s, 4));
    dw.bias = normal({mid}, 1.0, splitmix64(s, 5));
    p2.bias = normal({c}, 1.0, splitmix64(s, 6));
  }
  seq.layers.push_back({p1, t.biased ? std::optional(random_bn(mid, splitmix64(s, 7))) : std::nullopt});
  seq.layers.push_back({dw, t.biased ? std::optional(random_bn(mid, splitmix64(s, 8))) : std::nullopt});
  seq.layers.push_back({p2, t.biased ? std::optional(random_bn(c, splitmix64(s, 9))) : std::nullopt});
  return seq;
}

CollapseResult run_collapse_trial(const CollapseTrial& trial, double tolerance) {
  const LinearSequence seq = random_ibn_sequence(trial);
  const Tensor x = normal({trial.in_channels, trial.height, trial.width}, 1.0, splitmix64(trial.seed, 10));
  const Tensor ref = forward_sequence(seq, x);
  const Tensor got = conv2d(x, collapse(seq), Padding::Same);
  CollapseResult r;
  r.trial = trial;
  r.max_abs_diff_full = max_abs_diff(ref, got);
  const auto mask = interior_mask(trial.height, trial.width, trial.kernel, trial.stride);
  const std::size_t plane = mask.size();
  for (std::size_t i = 0; i < ref.size(); ++i) {
    if (mask[i % plane]) r.max_abs_diff_interior = std::max(r.max_abs_diff_interior, std::abs(ref[i] - got[i]));
  }
  r.pass = trial.biased ? r.max_abs_diff_interior <= tolerance : r.max_abs_diff_full <= tolerance;
  return r;
}

std::string collapse_report_json(const std::vector<CollapseResult>& results) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : results) {
    nlohmann::ordered_json j;
    j["seed"] = r.trial.seed;
    j["dims"] = {{"c_in", r.trial.in_channels},
                 {"expansion", to_string(r.trial.expansion)},
                 {"kernel", r.trial.kernel},
                 {"stride", r.trial.stride},
                 {"height", r.trial.height},
                 {"width", r.trial.width},
                 {"biased", r.trial.biased}};
    j["max_abs_diff_interior"] = r.max_abs_diff_interior;
    j["max_abs_diff_full"] = r.max_abs_diff_full;
    j["pass"] = r.pass;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace nnmass
