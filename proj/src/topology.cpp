#include "nnmass/topology.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nnmass/error.hpp"

namespace nnmass {

namespace {

std::string format_number(double v) {
  if (std::abs(v - std::round(v)) < 1e-9 && std::abs(v) < 1e15) {
    return std::to_string(static_cast<long long>(std::llround(v)));
  }
  std::ostringstream os;
  os.precision(10);
  os << v;
  return os.str();
}

}  // namespace

MassReport nn_mass(const ArchDescriptor& arch) {
  if (arch.family != Family::ConvNext && arch.family != Family::ResNetBottleneck) {
    throw Error("nn_mass: closed form defined only for convnext and resnet_bottleneck families");
  }
  MassReport report;
  std::optional<Rational> expansion;
  Rational width_sum(0);
  int channels = arch.input_channels;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const BlockSpec& b = arch.blocks[i];
    const int w1 = channels;
    channels = block_out_channels(b, channels);

    Rational e;
    BlockMass bm;
    bm.block_index = i;
    if (const auto* cn = std::get_if<ConvNextBlock>(&b); cn && arch.family == Family::ConvNext) {
      e = cn->expansion;
      bm.input_channels = (Rational(2) + e) * w1;
      bm.cell_density = Rational(1, 3);
    } else if (const auto* rn = std::get_if<ResNetBottleneckBlock>(&b);
               rn && arch.family == Family::ResNetBottleneck) {
      e = rn->expansion;
      bm.input_channels = (Rational(1) + 2 * e) * w1;
      bm.cell_density = Rational(1) / (Rational(2) + e);
    } else if (std::holds_alternative<Stem>(b) || std::holds_alternative<Downsample>(b) ||
               std::holds_alternative<Head>(b)) {
      continue;
    } else {
      throw Error("nn_mass: non-uniform structure (block " + std::to_string(i) + " is '" +
                  std::string(block_kind(b)) + "')");
    }
    if (expansion && *expansion != e) {
      throw Error("nn_mass: non-uniform structure (mixed expansion ratios " + to_string(*expansion) + " and " +
                  to_string(e) + ")");
    }
    expansion = e;
    bm.mass = bm.input_channels * bm.cell_density;
    report.exact_mass += bm.mass;
    width_sum += w1;
    report.per_block.push_back(bm);
  }
  if (!expansion) throw Error("nn_mass: descriptor has no residual blocks");
  report.mass = to_double(report.exact_mass);
  report.nonlinear_units = nonlinear_units(arch);
  report.k = proportionality_constant(arch.family, *expansion);
  const double mean_width = to_double(width_sum) / static_cast<double>(report.per_block.size());
  report.avg_degree = average_degree(mean_width, report.mass);
  return report;
}

std::int64_t block_nonlinear_units(const BlockSpec& block, int in_channels) {
  if (const auto* b = std::get_if<Ibn>(&block)) return 2 * ceil_mul(b->expansion, in_channels);
  if (const auto* b = std::get_if<ConvNextBlock>(&block)) return ceil_mul(b->expansion, in_channels);
  if (const auto* b = std::get_if<ResNetBottleneckBlock>(&block)) return 2 * ceil_mul(b->expansion, in_channels);
  if (const auto* b = std::get_if<RegularConv>(&block)) return b->activation.is_none() ? 0 : b->out_channels;
  if (const auto* b = std::get_if<ConvNextSplitBlock>(&block)) {
    const std::int64_t mid = ceil_mul(b->expansion, in_channels);
    const std::int64_t upper = ceil_mul(b->nonlinear_fraction, mid);
    return upper + (b->branch_activation.is_none() ? 0 : mid - upper);
  }
  return 0;
}

std::int64_t nonlinear_units(const ArchDescriptor& arch) {
  std::int64_t total = 0;
  int channels = arch.input_channels;
  for (const auto& b : arch.blocks) {
    total += block_nonlinear_units(b, channels);
    channels = block_out_channels(b, channels);
  }
  return total;
}

Rational proportionality_constant(Family family, const Rational& e) {
  if (e <= 0) throw Error("proportionality_constant: expansion must be > 0");
  switch (family) {
    case Family::ResNetBottleneck:
      return (2 * e * (Rational(2) + e)) / (Rational(1) + 2 * e);
    case Family::ConvNext:
      return (3 * e) / (Rational(2) + e);
    default:
      throw Error("proportionality_constant: unsupported family '" + std::string(family_name(family)) + "'");
  }
}

double average_degree(double width, double mass) {
  if (!(width > 0.0)) throw Error("average_degree: width must be > 0");
  if (mass < 0.0) throw Error("average_degree: mass must be >= 0");
  return width + mass / 2.0;
}

Bounds ldi_bounds(double q, double width, double avg_degree) {
  if (!(q > 0.0) || !(width > 0.0)) throw Error("ldi_bounds: q and width must be > 0");
  if (avg_degree < width) throw Error("ldi_bounds: average degree must be >= width");
  const double a = std::sqrt(q * avg_degree);
  const double b = std::sqrt(q * width);
  return {a - b, a + b};
}

double log2_region_upper_bound(std::int64_t nonlinear_units) {
  if (nonlinear_units < 0) throw Error("log2_region_upper_bound: X must be >= 0");
  return static_cast<double>(nonlinear_units);
}

double log2_montufar_bound(int n, int n0, int layers) {
  if (n0 < 1 || layers < 1) throw Error("log2_montufar_bound: n0 and L must be >= 1");
  if (n < n0) throw Error("log2_montufar_bound: n must be >= n0");
  const double ratio = std::log2(static_cast<double>(n) / n0);
  return (layers - 1) * n0 * ratio + n0 * std::log2(static_cast<double>(n));
}

double depth_exponent(int n, int n0, double mass) {
  if (n0 < 1 || n < n0) throw Error("depth_exponent: need n >= n0 >= 1");
  if (mass < n) throw Error("depth_exponent: mass must be >= n");
  return (mass - n) * n0 / n;
}

std::string mass_report_json(const MassReport& report) {
  nlohmann::ordered_json j;
  j["mass"] = report.mass;
  j["mass_exact"] = to_string(report.exact_mass);
  j["nonlinear_units"] = report.nonlinear_units;
  j["k"] = to_string(report.k);
  j["avg_degree"] = report.avg_degree;
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& b : report.per_block) {
    nlohmann::ordered_json e;
    e["block_index"] = b.block_index;
    e["i_b"] = to_double(b.input_channels);
    e["rho_b"] = to_string(b.cell_density);
    e["block_mass"] = to_double(b.mass);
    blocks.push_back(std::move(e));
  }
  j["per_block"] = std::move(blocks);
  return j.dump(2) + "\n";
}

std::string mass_summary(const MassReport& report) {
  return "m=" + format_number(report.mass) + " X=" + std::to_string(report.nonlinear_units) +
         " k=" + to_string(report.k) + " k_hat=" + format_number(report.avg_degree);
}

}  // namespace nnmass
