#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "nnmass/rational.hpp"

namespace nnmass {

// Which closed form NN-Mass uses, and whether width/depth multipliers apply.
enum class Family { ConvNext, ResNetBottleneck, RanE, Generic };

std::string_view family_name(Family f);
Family parse_family(std::string_view name);

struct Activation {
  enum class Kind { None, ReLU, ReLU6, PReLU, GeLU, HSwish, ExpKernel };

  Kind kind = Kind::None;
  // PReLU negative slope, or the ExpKernel pre-exponent clamp.
  double param = 0.0;

  static Activation none() { return {}; }
  static Activation relu() { return {Kind::ReLU, 0.0}; }
  static Activation relu6() { return {Kind::ReLU6, 0.0}; }
  static Activation gelu() { return {Kind::GeLU, 0.0}; }
  static Activation hswish() { return {Kind::HSwish, 0.0}; }
  static Activation prelu(double alpha) { return {Kind::PReLU, alpha}; }
  static Activation exp_kernel(double clamp = 10.0) { return {Kind::ExpKernel, clamp}; }

  bool is_none() const { return kind == Kind::None; }
  bool operator==(const Activation&) const = default;
};

std::string_view activation_name(Activation::Kind k);

struct Stem {
  int kernel = 3;
  int stride = 2;
  int out_channels = 16;
  bool operator==(const Stem&) const = default;
};

// BN -> activation -> k x k conv; the target of a collapsed AFRB.
struct RegularConv {
  int kernel = 3;
  int stride = 1;
  int out_channels = 0;
  Activation activation = Activation::relu();
  bool operator==(const RegularConv&) const = default;
};

// Inverted bottleneck: 1x1 expand -> depthwise k x k -> 1x1 project.
// AFRB-1 is residual=false, AFRB-2/3 residual=true.
struct Ibn {
  Rational expansion{6};
  int dw_kernel = 3;
  int stride = 1;
  int out_channels = 0;
  bool residual = false;
  Activation activation = Activation::relu();
  bool operator==(const Ibn&) const = default;
};

// Width-preserving ConvNext block: depthwise k x k -> norm -> 1x1 (e*w) ->
// GeLU -> 1x1 (w) -> layer scale, plus the residual addition.
struct ConvNextBlock {
  Rational expansion{4};
  int dw_kernel = 7;
  bool operator==(const ConvNextBlock&) const = default;
};

// ConvNext block whose expanded layer is split into a non-linear upper branch
// of ceil(fraction * e * w) channels and a single linear w -> w 1x1 branch,
// optionally followed by branch_activation.
struct ConvNextSplitBlock {
  Rational expansion{4};
  int dw_kernel = 7;
  Rational nonlinear_fraction{3, 5};
  Activation branch_activation = Activation::none();
  bool operator==(const ConvNextSplitBlock&) const = default;
};

// Width-preserving bottleneck: 1x1 (w -> e*w) -> k x k -> 1x1 (e*w -> w).
struct ResNetBottleneckBlock {
  Rational expansion{1, 4};
  int mid_kernel = 3;
  bool operator==(const ResNetBottleneckBlock&) const = default;
};

struct Downsample {
  int kernel = 2;
  int stride = 2;
  int out_channels = 0;
  bool operator==(const Downsample&) const = default;
};

// Classifier top. Without hidden_channels: norm + linear. With it:
// 1x1 -> (optional depthwise) -> global pool -> 1x1 classifier.
struct Head {
  std::optional<int> hidden_channels;
  int classes = 1000;
  std::optional<int> dw_kernel;
  bool operator==(const Head&) const = default;
};

using BlockSpec = std::variant<Stem, RegularConv, Ibn, ConvNextBlock, ConvNextSplitBlock,
                               ResNetBottleneckBlock, Downsample, Head>;

std::string_view block_kind(const BlockSpec& b);
int block_stride(const BlockSpec& b);
// Output channels for a block fed with in_channels. Head reports classes.
int block_out_channels(const BlockSpec& b, int in_channels);

// Per-stage widths/depths for the stage-structured families.
struct StageLayout {
  std::vector<int> widths;
  std::vector<int> depths;
  Rational expansion{4};
  int dw_kernel = 7;
  int classes = 1000;
  bool operator==(const StageLayout&) const = default;
};

struct ArchDescriptor {
  std::string name;
  Family family = Family::Generic;
  int input_resolution = 224;
  int input_channels = 3;
  std::vector<BlockSpec> blocks;
  // Present when the descriptor was built from the stage shorthand; blocks
  // are then exactly expand_stages(family, *stages).
  std::optional<StageLayout> stages;

  bool operator==(const ArchDescriptor&) const = default;
};

// Block list for a stage-structured family (ConvNext or ResNetBottleneck).
std::vector<BlockSpec> expand_stages(Family family, const StageLayout& layout);

ArchDescriptor make_stage_arch(std::string name, Family family, int resolution,
                               int input_channels, StageLayout layout);

// Throws Error naming the offending block index and rule.
void validate(const ArchDescriptor& arch);

ArchDescriptor parse_arch(std::string_view text);
std::string serialize_arch(const ArchDescriptor& arch);

const std::vector<std::string>& preset_names();
ArchDescriptor preset(std::string_view name);

struct ScaleOptions {
  // 0 disables snapping; otherwise widths snap to the nearest multiple.
  int channel_divisor = 0;
};

// Round-half-up helper shared by scale_arch and the scaler.
int round_half_up(double x);

ArchDescriptor scale_arch(const ArchDescriptor& base, double width_mult, double depth_mult,
                          const ScaleOptions& opts = {});

}  // namespace nnmass
