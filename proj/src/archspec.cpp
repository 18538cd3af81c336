#include "nnmass/archspec.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "json.hpp"

#include "nnmass/error.hpp"

namespace nnmass {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

const std::map<std::string_view, Family, std::less<>> kFamilies = {
    {"convnext", Family::ConvNext},
    {"resnet_bottleneck", Family::ResNetBottleneck},
    {"ran_e", Family::RanE},
    {"generic", Family::Generic},
};

const std::map<std::string_view, Activation::Kind, std::less<>> kActivations = {
    {"none", Activation::Kind::None},   {"relu", Activation::Kind::ReLU},
    {"relu6", Activation::Kind::ReLU6}, {"prelu", Activation::Kind::PReLU},
    {"gelu", Activation::Kind::GeLU},   {"hswish", Activation::Kind::HSwish},
    {"exp_kernel", Activation::Kind::ExpKernel},
};

std::string at(std::size_t i) { return "block " + std::to_string(i) + ": "; }

bool valid_stride(int s) { return s == 1 || s == 2 || s == 4; }

void check_activation(const Activation& a, const std::string& where) {
  if (a.kind == Activation::Kind::PReLU && !std::isfinite(a.param)) {
    throw Error(where + "PReLU alpha must be finite");
  }
  if (a.kind == Activation::Kind::ExpKernel && !(std::isfinite(a.param) && a.param > 0.0)) {
    throw Error(where + "ExpKernel clamp must be > 0");
  }
}

void check_odd(int k, const std::string& where, const char* field) {
  if (k < 1 || k % 2 == 0) throw Error(where + field + " must be odd and >= 1");
}

void check_positive(int v, const std::string& where, const char* field) {
  if (v <= 0) throw Error(where + field + " must be positive");
}

void check_stride(int s, const std::string& where) {
  if (!valid_stride(s)) throw Error(where + "stride must be one of {1,2,4}");
}

void check_expansion(const Rational& e, const std::string& where) {
  if (e <= 0) throw Error(where + "expansion must be > 0");
}

// ---------------------------------------------------------------------------
// JSON readers

class Fields {
 public:
  Fields(const json& obj, std::string where) : obj_(obj), where_(std::move(where)) {
    if (!obj_.is_object()) throw Error(where_ + "expected a JSON object");
  }

  const json* find(const char* key) {
    seen_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  const json& need(const char* key) {
    const json* v = find(key);
    if (v == nullptr) throw Error(where_ + "missing field '" + key + "'");
    return *v;
  }

  int integer(const char* key) { return as_int(need(key), key); }

  int integer_or(const char* key, int fallback) {
    const json* v = find(key);
    return v ? as_int(*v, key) : fallback;
  }

  std::optional<int> optional_integer(const char* key) {
    const json* v = find(key);
    if (v == nullptr || v->is_null()) return std::nullopt;
    return as_int(*v, key);
  }

  Rational rational(const char* key) { return as_rational(need(key), key); }

  Rational rational_or(const char* key, Rational fallback) {
    const json* v = find(key);
    return v ? as_rational(*v, key) : fallback;
  }

  bool boolean(const char* key, bool fallback) {
    const json* v = find(key);
    if (v == nullptr) return fallback;
    if (!v->is_boolean()) throw Error(where_ + "field '" + key + "' must be a boolean");
    return v->get<bool>();
  }

  std::string string(const char* key) {
    const json& v = need(key);
    if (!v.is_string()) throw Error(where_ + "field '" + key + "' must be a string");
    return v.get<std::string>();
  }

  Activation activation(const char* key, Activation fallback) {
    const json* v = find(key);
    return v ? parse_activation(*v, where_) : fallback;
  }

  std::vector<int> int_list(const char* key) {
    const json& v = need(key);
    if (!v.is_array()) throw Error(where_ + "field '" + key + "' must be an array");
    std::vector<int> out;
    for (const auto& x : v) out.push_back(as_int(x, key));
    return out;
  }

  // Unknown fields are rejected.
  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!seen_.count(it.key())) throw Error(where_ + "unknown field '" + it.key() + "'");
    }
  }

  static Activation parse_activation(const json& v, const std::string& where) {
    if (v.is_string()) {
      auto it = kActivations.find(v.get<std::string>());
      if (it == kActivations.end()) throw Error(where + "unknown activation '" + v.get<std::string>() + "'");
      Activation a{it->second, 0.0};
      if (a.kind == Activation::Kind::PReLU) a.param = 0.25;
      if (a.kind == Activation::Kind::ExpKernel) a.param = 10.0;
      return a;
    }
    Fields f(v, where);
    Activation a = parse_activation(json(f.string("kind")), where);
    if (a.kind == Activation::Kind::PReLU) {
      if (const json* x = f.find("alpha")) a.param = f.as_double(*x, "alpha");
    } else if (a.kind == Activation::Kind::ExpKernel) {
      if (const json* x = f.find("clamp")) a.param = f.as_double(*x, "clamp");
    }
    f.finish();
    return a;
  }

 private:
  int as_int(const json& v, const char* key) const {
    if (!v.is_number_integer()) throw Error(where_ + "field '" + key + "' must be an integer");
    auto x = v.get<std::int64_t>();
    if (x < -2147483647 || x > 2147483647) throw Error(where_ + "field '" + key + "' out of range");
    return static_cast<int>(x);
  }

  double as_double(const json& v, const char* key) const {
    if (!v.is_number()) throw Error(where_ + "field '" + key + "' must be a number");
    return v.get<double>();
  }

  Rational as_rational(const json& v, const char* key) const {
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_number_float()) return rational_from_double(v.get<double>());
    if (v.is_string()) return parse_rational(v.get<std::string>());
    throw Error(where_ + "field '" + key + "' must be a number or \"p/q\" string");
  }

  const json& obj_;
  std::string where_;
  std::set<std::string> seen_;
};

BlockSpec parse_block(const json& j, std::size_t index) {
  Fields f(j, at(index));
  std::string kind = f.string("kind");
  BlockSpec out;
  if (kind == "stem") {
    out = Stem{f.integer("kernel"), f.integer("stride"), f.integer("out_channels")};
  } else if (kind == "regular_conv") {
    RegularConv b;
    b.kernel = f.integer("kernel");
    b.stride = f.integer("stride");
    b.out_channels = f.integer("out_channels");
    b.activation = f.activation("activation", Activation::relu());
    out = b;
  } else if (kind == "ibn") {
    Ibn b;
    b.expansion = f.rational("expansion");
    b.dw_kernel = f.integer("dw_kernel");
    b.stride = f.integer("stride");
    b.out_channels = f.integer("out_channels");
    b.residual = f.boolean("residual", false);
    b.activation = f.activation("activation", Activation::relu());
    out = b;
  } else if (kind == "convnext") {
    ConvNextBlock b;
    b.expansion = f.rational_or("expansion", Rational(4));
    b.dw_kernel = f.integer_or("dw_kernel", 7);
    out = b;
  } else if (kind == "convnext_split") {
    ConvNextSplitBlock b;
    b.expansion = f.rational_or("expansion", Rational(4));
    b.dw_kernel = f.integer_or("dw_kernel", 7);
    b.nonlinear_fraction = f.rational("nonlinear_fraction");
    b.branch_activation = f.activation("branch_activation", Activation::none());
    out = b;
  } else if (kind == "resnet_bottleneck") {
    ResNetBottleneckBlock b;
    b.expansion = f.rational("expansion");
    b.mid_kernel = f.integer_or("mid_kernel", 3);
    out = b;
  } else if (kind == "downsample") {
    out = Downsample{f.integer("kernel"), f.integer("stride"), f.integer("out_channels")};
  } else if (kind == "head") {
    Head b;
    b.hidden_channels = f.optional_integer("hidden_channels");
    b.classes = f.integer("classes");
    b.dw_kernel = f.optional_integer("dw_kernel");
    out = b;
  } else {
    throw Error(at(index) + "unknown block kind '" + kind + "'");
  }
  f.finish();
  return out;
}

// ---------------------------------------------------------------------------
// JSON writers

ordered_json rational_json(const Rational& r) {
  if (r.denominator() == 1) return r.numerator();
  return to_string(r);
}

ordered_json activation_json(const Activation& a) {
  std::string name(activation_name(a.kind));
  if (a.kind == Activation::Kind::PReLU) return ordered_json{{"kind", name}, {"alpha", a.param}};
  if (a.kind == Activation::Kind::ExpKernel) return ordered_json{{"kind", name}, {"clamp", a.param}};
  return name;
}

ordered_json block_json(const BlockSpec& block) {
  ordered_json j;
  j["kind"] = std::string(block_kind(block));
  std::visit(Overloaded{
                 [&](const Stem& b) {
                   j["kernel"] = b.kernel;
                   j["stride"] = b.stride;
                   j["out_channels"] = b.out_channels;
                 },
                 [&](const RegularConv& b) {
                   j["kernel"] = b.kernel;
                   j["stride"] = b.stride;
                   j["out_channels"] = b.out_channels;
                   j["activation"] = activation_json(b.activation);
                 },
                 [&](const Ibn& b) {
                   j["expansion"] = rational_json(b.expansion);
                   j["dw_kernel"] = b.dw_kernel;
                   j["stride"] = b.stride;
                   j["out_channels"] = b.out_channels;
                   j["residual"] = b.residual;
                   j["activation"] = activation_json(b.activation);
                 },
                 [&](const ConvNextBlock& b) {
                   j["expansion"] = rational_json(b.expansion);
                   j["dw_kernel"] = b.dw_kernel;
                 },
                 [&](const ConvNextSplitBlock& b) {
                   j["expansion"] = rational_json(b.expansion);
                   j["dw_kernel"] = b.dw_kernel;
                   j["nonlinear_fraction"] = rational_json(b.nonlinear_fraction);
                   j["branch_activation"] = activation_json(b.branch_activation);
                 },
                 [&](const ResNetBottleneckBlock& b) {
                   j["expansion"] = rational_json(b.expansion);
                   j["mid_kernel"] = b.mid_kernel;
                 },
                 [&](const Downsample& b) {
                   j["kernel"] = b.kernel;
                   j["stride"] = b.stride;
                   j["out_channels"] = b.out_channels;
                 },
                 [&](const Head& b) {
                   if (b.hidden_channels) j["hidden_channels"] = *b.hidden_channels;
                   j["classes"] = b.classes;
                   if (b.dw_kernel) j["dw_kernel"] = *b.dw_kernel;
                 },
             },
             block);
  return j;
}

}  // namespace

std::string_view family_name(Family f) {
  for (const auto& [name, fam] : kFamilies) {
    if (fam == f) return name;
  }
  return "generic";
}

Family parse_family(std::string_view name) {
  auto it = kFamilies.find(name);
  if (it == kFamilies.end()) throw Error("unknown family '" + std::string(name) + "'");
  return it->second;
}

std::string_view activation_name(Activation::Kind k) {
  for (const auto& [name, kind] : kActivations) {
    if (kind == k) return name;
  }
  return "none";
}

std::string_view block_kind(const BlockSpec& b) {
  static constexpr std::string_view kNames[] = {"stem",       "regular_conv",      "ibn",
                                                "convnext",   "convnext_split",    "resnet_bottleneck",
                                                "downsample", "head"};
  return kNames[b.index()];
}

int block_stride(const BlockSpec& b) {
  return std::visit(Overloaded{
                        [](const Stem& s) { return s.stride; },
                        [](const RegularConv& s) { return s.stride; },
                        [](const Ibn& s) { return s.stride; },
                        [](const Downsample& s) { return s.stride; },
                        [](const auto&) { return 1; },
                    },
                    b);
}

int block_out_channels(const BlockSpec& b, int in_channels) {
  return std::visit(Overloaded{
                        [](const Stem& s) { return s.out_channels; },
                        [](const RegularConv& s) { return s.out_channels; },
                        [](const Ibn& s) { return s.out_channels; },
                        [](const Downsample& s) { return s.out_channels; },
                        [](const Head& s) { return s.classes; },
                        [&](const auto&) { return in_channels; },
                    },
                    b);
}

std::vector<BlockSpec> expand_stages(Family family, const StageLayout& layout) {
  if (family != Family::ConvNext && family != Family::ResNetBottleneck) {
    throw Error("stage shorthand requires family convnext or resnet_bottleneck");
  }
  if (layout.widths.empty() || layout.widths.size() != layout.depths.size()) {
    throw Error("stage_widths and stage_depths must be non-empty and of equal length");
  }
  const bool convnext = family == Family::ConvNext;
  std::vector<BlockSpec> blocks;
  blocks.push_back(convnext ? Stem{4, 4, layout.widths[0]} : Stem{7, 4, layout.widths[0]});
  for (std::size_t s = 0; s < layout.widths.size(); ++s) {
    if (s > 0) {
      blocks.push_back(convnext ? Downsample{2, 2, layout.widths[s]} : Downsample{1, 2, layout.widths[s]});
    }
    for (int d = 0; d < layout.depths[s]; ++d) {
      if (convnext) {
        blocks.push_back(ConvNextBlock{layout.expansion, layout.dw_kernel});
      } else {
        blocks.push_back(ResNetBottleneckBlock{layout.expansion, layout.dw_kernel});
      }
    }
  }
  blocks.push_back(Head{std::nullopt, layout.classes, std::nullopt});
  return blocks;
}

ArchDescriptor make_stage_arch(std::string name, Family family, int resolution, int input_channels,
                               StageLayout layout) {
  for (std::size_t s = 0; s < layout.widths.size(); ++s) {
    if (layout.widths[s] <= 0) throw Error("stage " + std::to_string(s) + ": width must be positive");
    if (s < layout.depths.size() && layout.depths[s] <= 0) {
      throw Error("stage " + std::to_string(s) + ": depth must be positive");
    }
  }
  ArchDescriptor a;
  a.name = std::move(name);
  a.family = family;
  a.input_resolution = resolution;
  a.input_channels = input_channels;
  a.blocks = expand_stages(family, layout);
  a.stages = std::move(layout);
  validate(a);
  return a;
}

void validate(const ArchDescriptor& arch) {
  if (arch.input_resolution <= 0) throw Error("input_resolution must be positive");
  if (arch.input_channels <= 0) throw Error("input_channels must be positive");
  if (arch.blocks.empty()) throw Error("invariant violated: blocks non-empty");

  int channels = arch.input_channels;
  long long total_stride = 1;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const BlockSpec& block = arch.blocks[i];
    const std::string where = at(i);
    std::visit(Overloaded{
                   [&](const Stem& b) {
                     check_positive(b.kernel, where, "kernel");
                     check_stride(b.stride, where);
                     check_positive(b.out_channels, where, "out_channels");
                   },
                   [&](const RegularConv& b) {
                     check_odd(b.kernel, where, "kernel");
                     check_stride(b.stride, where);
                     check_positive(b.out_channels, where, "out_channels");
                     check_activation(b.activation, where);
                   },
                   [&](const Ibn& b) {
                     check_expansion(b.expansion, where);
                     check_odd(b.dw_kernel, where, "dw_kernel");
                     check_stride(b.stride, where);
                     check_positive(b.out_channels, where, "out_channels");
                     check_activation(b.activation, where);
                     if (b.residual && (b.stride != 1 || b.out_channels != channels)) {
                       throw Error(where +
                                   "residual IBN requires stride 1 and in_channels == out_channels "
                                   "(no valid residual skip connection otherwise)");
                     }
                   },
                   [&](const ConvNextBlock& b) {
                     check_expansion(b.expansion, where);
                     check_odd(b.dw_kernel, where, "dw_kernel");
                   },
                   [&](const ConvNextSplitBlock& b) {
                     check_expansion(b.expansion, where);
                     check_odd(b.dw_kernel, where, "dw_kernel");
                     if (b.nonlinear_fraction <= 0 || b.nonlinear_fraction >= 1) {
                       throw Error(where + "nonlinear_fraction must lie in (0,1)");
                     }
                     using K = Activation::Kind;
                     K k = b.branch_activation.kind;
                     if (k != K::None && k != K::GeLU && k != K::ExpKernel) {
                       throw Error(where + "branch_activation must be none, gelu or exp_kernel");
                     }
                     check_activation(b.branch_activation, where);
                   },
                   [&](const ResNetBottleneckBlock& b) {
                     check_expansion(b.expansion, where);
                     check_odd(b.mid_kernel, where, "mid_kernel");
                   },
                   [&](const Downsample& b) {
                     check_positive(b.kernel, where, "kernel");
                     check_stride(b.stride, where);
                     check_positive(b.out_channels, where, "out_channels");
                   },
                   [&](const Head& b) {
                     check_positive(b.classes, where, "classes");
                     if (b.hidden_channels) check_positive(*b.hidden_channels, where, "hidden_channels");
                     if (b.dw_kernel) check_odd(*b.dw_kernel, where, "dw_kernel");
                     if (i + 1 != arch.blocks.size()) throw Error(where + "head must be the last block");
                   },
               },
               block);
    total_stride *= block_stride(block);
    channels = block_out_channels(block, channels);
  }
  if (arch.input_resolution % total_stride != 0) {
    throw Error("input_resolution " + std::to_string(arch.input_resolution) +
                " is not divisible by the total stride " + std::to_string(total_stride));
  }
  if (arch.stages) {
    if (arch.family != Family::ConvNext && arch.family != Family::ResNetBottleneck) {
      throw Error("stage layout is only valid for convnext and resnet_bottleneck families");
    }
    if (expand_stages(arch.family, *arch.stages) != arch.blocks) {
      throw Error("blocks do not match the stage layout");
    }
  }
}

ArchDescriptor parse_arch(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw Error("syntax error at byte " + std::to_string(e.byte) + ": " + e.what());
  }
  Fields f(doc, "");
  ArchDescriptor a;
  a.name = f.string("name");
  a.family = parse_family(f.string("family"));
  a.input_resolution = f.integer("input_resolution");
  a.input_channels = f.integer("input_channels");
  const json* blocks = f.find("blocks");
  const json* widths = f.find("stage_widths");
  if (blocks && widths) throw Error("use either 'blocks' or the stage shorthand, not both");
  if (widths) {
    StageLayout layout;
    layout.widths = f.int_list("stage_widths");
    layout.depths = f.int_list("stage_depths");
    layout.expansion = f.rational("expansion");
    layout.dw_kernel = f.integer("dw_kernel");
    layout.classes = f.integer_or("classes", 1000);
    f.finish();
    return make_stage_arch(a.name, a.family, a.input_resolution, a.input_channels, std::move(layout));
  }
  if (blocks == nullptr) throw Error("missing field 'blocks'");
  if (!blocks->is_array()) throw Error("field 'blocks' must be an array");
  f.finish();
  for (std::size_t i = 0; i < blocks->size(); ++i) a.blocks.push_back(parse_block((*blocks)[i], i));
  validate(a);
  return a;
}

std::string serialize_arch(const ArchDescriptor& arch) {
  ordered_json j;
  j["name"] = arch.name;
  j["family"] = std::string(family_name(arch.family));
  j["input_resolution"] = arch.input_resolution;
  j["input_channels"] = arch.input_channels;
  if (arch.stages && expand_stages(arch.family, *arch.stages) == arch.blocks) {
    j["stage_widths"] = arch.stages->widths;
    j["stage_depths"] = arch.stages->depths;
    j["expansion"] = rational_json(arch.stages->expansion);
    j["dw_kernel"] = arch.stages->dw_kernel;
    j["classes"] = arch.stages->classes;
  } else {
    ordered_json blocks = ordered_json::array();
    for (const auto& b : arch.blocks) blocks.push_back(block_json(b));
    j["blocks"] = std::move(blocks);
  }
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// Presets

const std::vector<std::string>& preset_names() {
  static const std::vector<std::string> names = {"ran-e-supernet", "convnext-t", "convnext-s", "convnext-b",
                                                 "ran-i-t",        "ran-i-s",    "ran-i-b"};
  return names;
}

namespace {

ArchDescriptor ran_e_supernet() {
  // Stages 2..17 of the SuperNet table: {e, stride, C_o, residual}. All
  // depthwise kernels are 3x3. AFRB-2 and AFRB-3 rows carry the residual.
  struct Row {
    int e;
    int stride;
    int out;
    bool residual;
  };
  static constexpr Row kRows[] = {
      {6, 1, 32, false},  {6, 2, 48, false},  {6, 2, 64, false},  {6, 1, 80, false},
      {6, 2, 80, false},  {6, 1, 80, true},   {4, 1, 96, false},  {4, 1, 96, true},
      {6, 1, 128, false}, {6, 1, 128, true},  {6, 2, 160, false}, {4, 1, 176, false},
      {4, 1, 176, true},  {4, 1, 176, true},  {6, 1, 224, false}, {6, 1, 224, true},
  };
  ArchDescriptor a;
  a.name = "ran-e-supernet";
  a.family = Family::RanE;
  a.input_resolution = 224;
  a.input_channels = 3;
  a.blocks.push_back(Stem{3, 2, 16});
  for (const Row& r : kRows) {
    a.blocks.push_back(Ibn{Rational(r.e), 3, r.stride, r.out, r.residual, Activation::relu()});
  }
  a.blocks.push_back(Head{1344, 1000, 7});
  validate(a);
  return a;
}

ArchDescriptor convnext_like(const char* name, std::vector<int> widths, std::vector<int> depths) {
  StageLayout layout;
  layout.widths = std::move(widths);
  layout.depths = std::move(depths);
  layout.expansion = Rational(4);
  layout.dw_kernel = 7;
  layout.classes = 1000;
  return make_stage_arch(name, Family::ConvNext, 224, 3, std::move(layout));
}

}  // namespace

ArchDescriptor preset(std::string_view name) {
  if (name == "ran-e-supernet") return ran_e_supernet();
  if (name == "convnext-t") return convnext_like("convnext-t", {96, 192, 384, 768}, {3, 3, 9, 3});
  if (name == "convnext-s") return convnext_like("convnext-s", {96, 192, 384, 768}, {3, 3, 27, 3});
  if (name == "convnext-b") return convnext_like("convnext-b", {128, 256, 512, 1024}, {3, 3, 27, 3});
  if (name == "ran-i-t") return convnext_like("ran-i-t", {64, 128, 256, 511}, {5, 5, 15, 5});
  if (name == "ran-i-s") return convnext_like("ran-i-s", {76, 151, 303, 606}, {5, 5, 15, 5});
  if (name == "ran-i-b") return convnext_like("ran-i-b", {87, 175, 350, 699}, {7, 7, 21, 7});
  throw Error("unknown preset '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------
// Scaling

int round_half_up(double x) {
  // The epsilon absorbs products such as 3 * 2.5 landing a hair below .5.
  return static_cast<int>(std::floor(x + 0.5 + 1e-9));
}

ArchDescriptor scale_arch(const ArchDescriptor& base, double width_mult, double depth_mult,
                          const ScaleOptions& opts) {
  if (!(width_mult > 0.0) || !(depth_mult > 0.0) || !std::isfinite(width_mult) || !std::isfinite(depth_mult)) {
    throw Error("width and depth multipliers must be positive");
  }
  if (base.family != Family::ConvNext && base.family != Family::ResNetBottleneck) {
    throw Error("scale_arch requires a convnext or resnet_bottleneck family descriptor");
  }
  if (!base.stages) throw Error("scale_arch requires a stage-structured descriptor");
  if (opts.channel_divisor < 0) throw Error("channel_divisor must be >= 0");

  StageLayout layout = *base.stages;
  for (std::size_t s = 0; s < layout.widths.size(); ++s) {
    const double w = layout.widths[s] * width_mult;
    int width = round_half_up(w);
    if (opts.channel_divisor > 0) {
      const int d = opts.channel_divisor;
      width = std::max(d, round_half_up(w / d) * d);
    }
    if (width < 8) {
      throw Error("degenerate width: stage " + std::to_string(s) + " scales to " + std::to_string(width) +
                  " channels (< 8)");
    }
    layout.widths[s] = width;
    layout.depths[s] = std::max(1, round_half_up(layout.depths[s] * depth_mult));
  }
  return make_stage_arch(base.name, base.family, base.input_resolution, base.input_channels, std::move(layout));
}

}  // namespace nnmass
