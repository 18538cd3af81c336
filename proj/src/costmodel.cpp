#include "nnmass/costmodel.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"
#include "nnmass/error.hpp"

namespace nnmass {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

int downsample(int size, int stride) {
  if (size % stride != 0) {
    throw Error("non-integral spatial division: size " + std::to_string(size) + " by stride " +
                std::to_string(stride));
  }
  return size / stride;
}

std::int64_t expanded(const Rational& e, int channels) { return ceil_mul(e, channels); }

}  // namespace

Shape block_output_shape(const BlockSpec& block, const Shape& in) {
  if (std::holds_alternative<Head>(block)) return Shape{std::get<Head>(block).classes, 1, 1};
  const int s = block_stride(block);
  return Shape{block_out_channels(block, in.channels), downsample(in.height, s), downsample(in.width, s)};
}

std::vector<Shape> propagate_shapes(const ArchDescriptor& arch, const Shape& input) {
  if (input.channels != arch.input_channels) {
    throw Error("input has " + std::to_string(input.channels) + " channels, descriptor expects " +
                std::to_string(arch.input_channels));
  }
  if (input.height <= 0 || input.width <= 0) throw Error("input spatial size must be positive");
  std::vector<Shape> shapes;
  shapes.reserve(arch.blocks.size());
  Shape cur = input;
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    shapes.push_back(cur);
    try {
      cur = block_output_shape(arch.blocks[i], cur);
    } catch (const Error& e) {
      throw Error("block " + std::to_string(i) + ": " + e.what());
    }
  }
  return shapes;
}

BlockCost count_block(const BlockSpec& block, const Shape& in) {
  if (in.channels <= 0 || in.height <= 0 || in.width <= 0) throw Error("count_block: shape must be positive");
  const Shape out = block_output_shape(block, in);
  const std::int64_t c_in = in.channels;
  const std::int64_t hw_in = static_cast<std::int64_t>(in.height) * in.width;
  const std::int64_t hw_out = static_cast<std::int64_t>(out.height) * out.width;

  return std::visit(
      Overloaded{
          [&](const Stem& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.kernel) * b.kernel;
            const std::int64_t c = b.out_channels;
            return BlockCost{hw_out * k2 * c_in * c, k2 * c_in * c + c + 2 * c};
          },
          [&](const RegularConv& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.kernel) * b.kernel;
            const std::int64_t c = b.out_channels;
            return BlockCost{hw_out * k2 * c_in * c, k2 * c_in * c + 2 * c};
          },
          [&](const Ibn& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.dw_kernel) * b.dw_kernel;
            const std::int64_t mid = expanded(b.expansion, in.channels);
            const std::int64_t c = b.out_channels;
            const std::int64_t macs = hw_in * c_in * mid + hw_out * k2 * mid + hw_out * mid * c;
            const std::int64_t params = c_in * mid + 2 * mid + k2 * mid + 2 * mid + mid * c + 2 * c;
            return BlockCost{macs, params};
          },
          [&](const ConvNextBlock& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.dw_kernel) * b.dw_kernel;
            const std::int64_t w = c_in;
            const std::int64_t mid = expanded(b.expansion, in.channels);
            const std::int64_t macs = hw_in * (k2 * w + 2 * mid * w);
            // dw + bias, norm, two 1x1 with bias, layer scale
            const std::int64_t params = (k2 * w + w) + 2 * w + (w * mid + mid) + (mid * w + w) + w;
            return BlockCost{macs, params};
          },
          [&](const ConvNextSplitBlock& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.dw_kernel) * b.dw_kernel;
            const std::int64_t w = c_in;
            const std::int64_t mid = expanded(b.expansion, in.channels);
            const std::int64_t upper = ceil_mul(b.nonlinear_fraction, mid);
            const std::int64_t macs = hw_in * (k2 * w + 2 * upper * w + w * w);
            const std::int64_t params =
                (k2 * w + w) + 2 * w + (w * upper + upper) + (upper * w + w) + (w * w + w) + w;
            return BlockCost{macs, params};
          },
          [&](const ResNetBottleneckBlock& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.mid_kernel) * b.mid_kernel;
            const std::int64_t w = c_in;
            const std::int64_t mid = expanded(b.expansion, in.channels);
            const std::int64_t macs = hw_in * (w * mid + k2 * mid * mid + mid * w);
            const std::int64_t params = (w * mid + 2 * mid) + (k2 * mid * mid + 2 * mid) + (mid * w + 2 * w);
            return BlockCost{macs, params};
          },
          [&](const Downsample& b) {
            const std::int64_t k2 = static_cast<std::int64_t>(b.kernel) * b.kernel;
            const std::int64_t c = b.out_channels;
            // norm on the input, then the strided conv with bias
            return BlockCost{hw_out * k2 * c_in * c, 2 * c_in + k2 * c_in * c + c};
          },
          [&](const Head& b) {
            const std::int64_t classes = b.classes;
            if (!b.hidden_channels) {
              return BlockCost{c_in * classes, 2 * c_in + c_in * classes + classes};
            }
            const std::int64_t hid = *b.hidden_channels;
            std::int64_t macs = hw_in * c_in * hid + hid * classes;
            std::int64_t params = c_in * hid + 2 * hid + hid * classes + classes;
            if (b.dw_kernel) {
              const std::int64_t k2 = static_cast<std::int64_t>(*b.dw_kernel) * *b.dw_kernel;
              macs += hw_in * k2 * hid;
              params += k2 * hid + 2 * hid;
            }
            return BlockCost{macs, params};
          },
      },
      block);
}

CostReport count_arch(const ArchDescriptor& arch, int resolution) {
  const auto shapes = propagate_shapes(arch, Shape{arch.input_channels, resolution, resolution});
  CostReport report;
  report.per_block.reserve(arch.blocks.size());
  for (std::size_t i = 0; i < arch.blocks.size(); ++i) {
    const BlockCost c = count_block(arch.blocks[i], shapes[i]);
    BlockCostEntry e;
    e.block_index = i;
    e.kind = std::string(block_kind(arch.blocks[i]));
    e.macs = c.macs;
    e.params = c.params;
    e.in_shape = shapes[i];
    e.out_shape = block_output_shape(arch.blocks[i], shapes[i]);
    report.total_macs += c.macs;
    report.total_params += c.params;
    report.per_block.push_back(std::move(e));
  }
  return report;
}

int ibn_equivalent_width(int n, const Rational& e) {
  if (n <= 0) throw Error("ibn_equivalent_width: n must be positive");
  if (e <= 0) throw Error("ibn_equivalent_width: expansion must be > 0");
  return round_half_up(n * std::sqrt(2.0 * to_double(e) / 9.0));
}

std::int64_t ibn_pointwise_macs(std::int64_t n, const Rational& e, std::int64_t height, std::int64_t width) {
  const std::int64_t mid = ceil_mul(e, n);
  return height * width * (n * mid + mid * n);
}

std::int64_t regular_conv_macs(std::int64_t channels, int kernel, std::int64_t height, std::int64_t width) {
  return height * width * kernel * kernel * channels * channels;
}

std::string cost_report_json(const CostReport& report) {
  nlohmann::ordered_json j;
  j["total_macs"] = report.total_macs;
  j["total_params"] = report.total_params;
  auto blocks = nlohmann::ordered_json::array();
  for (const auto& b : report.per_block) {
    nlohmann::ordered_json e;
    e["block_index"] = b.block_index;
    e["kind"] = b.kind;
    e["in_shape"] = {b.in_shape.channels, b.in_shape.height, b.in_shape.width};
    e["out_shape"] = {b.out_shape.channels, b.out_shape.height, b.out_shape.width};
    e["macs"] = b.macs;
    e["params"] = b.params;
    blocks.push_back(std::move(e));
  }
  j["per_block"] = std::move(blocks);
  return j.dump(2) + "\n";
}

std::string cost_report_csv(const CostReport& report) {
  std::ostringstream os;
  os << "block_index,kind,in_c,in_h,in_w,macs,params\n";
  for (const auto& b : report.per_block) {
    os << b.block_index << ',' << b.kind << ',' << b.in_shape.channels << ',' << b.in_shape.height << ','
       << b.in_shape.width << ',' << b.macs << ',' << b.params << '\n';
  }
  return os.str();
}

}  // namespace nnmass
