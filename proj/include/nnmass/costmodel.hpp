#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "nnmass/archspec.hpp"

namespace nnmass {

struct Shape {
  int channels = 0;
  int height = 0;
  int width = 0;
  bool operator==(const Shape&) const = default;
};

struct BlockCost {
  std::int64_t macs = 0;
  std::int64_t params = 0;
};

struct BlockCostEntry {
  std::size_t block_index = 0;
  std::string kind;
  std::int64_t macs = 0;
  std::int64_t params = 0;
  Shape in_shape;
  Shape out_shape;
};

struct CostReport {
  std::int64_t total_macs = 0;
  std::int64_t total_params = 0;
  std::vector<BlockCostEntry> per_block;
};

// Output shape of one block. Same padding: a stride-s layer maps H to H/s and
// rejects sizes that do not divide. Head maps to {classes, 1, 1}.
Shape block_output_shape(const BlockSpec& block, const Shape& in);

// Input shape of every block, in order.
std::vector<Shape> propagate_shapes(const ArchDescriptor& arch, const Shape& input);

// Conv and linear layers carry MACs; norm, activation and pooling are free.
// Parameters cover weights, biases, norm affine pairs and layer scales.
BlockCost count_block(const BlockSpec& block, const Shape& in);

CostReport count_arch(const ArchDescriptor& arch, int resolution);

// Channel count m of a 3x3 regular conv whose MACs match the pointwise
// layers of an IBN with n channels and expansion e: 9 m^2 = 2 e n^2.
int ibn_equivalent_width(int n, const Rational& e);

// Pointwise (expand + project) MACs of an IBN with C_in = C_out = n.
std::int64_t ibn_pointwise_macs(std::int64_t n, const Rational& e, std::int64_t height, std::int64_t width);
std::int64_t regular_conv_macs(std::int64_t channels, int kernel, std::int64_t height, std::int64_t width);

std::string cost_report_json(const CostReport& report);
// Columns: block_index,kind,in_c,in_h,in_w,macs,params
std::string cost_report_csv(const CostReport& report);

}  // namespace nnmass
