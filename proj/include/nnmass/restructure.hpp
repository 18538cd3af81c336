#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnmass/archspec.hpp"
#include "nnmass/tensor.hpp"

namespace nnmass {

struct LinearLayer {
  ConvWeights conv;
  std::optional<BNParams> bn;
};

// Convs (each optionally followed by BN) with no activation in between.
// Only one element may be spatial (k > 1); 1x1 elements use stride 1.
struct LinearSequence {
  std::vector<LinearLayer> layers;

  void validate() const;
  bool has_expansion_1x1() const;
  bool has_depthwise() const;
  bool has_projection_1x1() const;
};

// Reference path: every layer applied in order with zero same-padding.
Tensor forward_sequence(const LinearSequence& seq, const Tensor& input);

// Single dense k x k conv equivalent to the sequence. Bias-free sequences
// match everywhere; biased ones match on interior pixels.
ConvWeights collapse(const LinearSequence& seq);

// Output pixels whose receptive field avoids the zero padding.
std::vector<bool> interior_mask(int height, int width, int kernel, int stride);

struct Band {
  double lo = 0.8;
  double hi = 1.3;
  void validate() const;
  bool contains(double alpha) const { return alpha >= lo && alpha <= hi; }
};

struct RestructureDecision {
  enum class Kind { Collapse, KeepIbn };
  Kind kind = Kind::KeepIbn;
  double alpha = 0.0;
  Band band;
};

RestructureDecision afrb_decide(double alpha, const Band& band = {});

// Collapsed AFRBs become RegularConv{dw_kernel, stride, out, ReLU}; kept ones
// stay IBNs with their first activation reinstated. One alpha per IBN block.
ArchDescriptor apply_afrb_decisions(const ArchDescriptor& arch, const std::vector<double>& alphas,
                                    const Band& band = {});

ConvNextSplitBlock split_convnext_block(const ConvNextBlock& block, const Rational& fraction,
                                       const Activation& branch_activation);

ArchDescriptor restructure_arch(const ArchDescriptor& arch, const Rational& fraction,
                                const Activation& branch_activation);

// MLP MACs of the split block relative to the original: (2 f e + 1) / (2 e).
Rational split_mlp_mac_ratio(const Rational& expansion, const Rational& fraction);

// Pointwise part of a ConvNext block on [n, w] rows: GeLU on hidden
// channels [0, linear_from), identity on the rest.
struct ConvNextMlp {
  Tensor w1;  // [mid, w]
  Tensor b1;  // [mid]
  Tensor w2;  // [w, mid]
  Tensor b2;  // [w]

  int width() const { return w1.dim(1); }
  int hidden() const { return w1.dim(0); }
  Tensor forward(const Tensor& x, std::optional<int> linear_from = std::nullopt) const;
};

ConvNextMlp random_convnext_mlp(int width, const Rational& expansion, std::uint64_t seed);

// Upper GeLU branch plus a single w -> w linear branch, branch_activation
// applied to the lower 1x1 output before the two are summed.
struct SplitMlp {
  ConvNextMlp upper;
  Tensor lower_w;  // [w, w]
  Tensor lower_b;  // [w]
  Activation branch_activation;

  Tensor forward(const Tensor& x) const;
};

// Hidden channels [ceil(f * mid), mid) are linearized and merged into the
// lower branch.
SplitMlp split_mlp(const ConvNextMlp& mlp, const Rational& fraction, const Activation& branch_activation);

// Keeps the first `keep` hidden channels.
ConvNextMlp prune_mlp(const ConvNextMlp& mlp, int keep);

struct CollapseTrial {
  std::uint64_t seed = 0;
  int in_channels = 4;
  Rational expansion{6};
  int kernel = 3;
  int stride = 1;
  int height = 12;
  int width = 12;
  bool biased = false;
};

struct CollapseResult {
  CollapseTrial trial;
  double max_abs_diff_interior = 0.0;
  double max_abs_diff_full = 0.0;
  bool pass = false;
};

// expand 1x1 -> depthwise -> project 1x1 (back to in_channels); the biased
// variant adds conv biases and a BN after every layer.
LinearSequence random_ibn_sequence(const CollapseTrial& trial);
CollapseResult run_collapse_trial(const CollapseTrial& trial, double tolerance = 1e-10);
std::string collapse_report_json(const std::vector<CollapseResult>& results);

}  // namespace nnmass
