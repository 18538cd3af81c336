#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnmass/tensor.hpp"
#include "nnmass/topology.hpp"

namespace nnmass {

// Deep linear MLP of `depth` layers at width w. Layer l >= 2 also reads
// `skip` channels drawn without replacement from the outputs of layers
// 0..l-2 (layer 0 is the input).
struct LinearDensenetConfig {
  int width = 32;
  int depth = 8;
  int skip = 32;
  double q = 1.0 / 64.0;
  std::uint64_t seed = 0;
  void validate() const;
};

struct SkipSource {
  int layer = 0;
  int channel = 0;
};

struct DenseLayer {
  Tensor weight;  // [w, w + skip_l]
  std::vector<SkipSource> skips;
  int fan_in() const { return weight.dim(1); }
};

struct LinearDensenet {
  std::vector<DenseLayer> layers;
  double mass = 0.0;   // 2 * mean skip count over layers that may receive skips
  double k_hat = 0.0;  // w + mass / 2
};

LinearDensenet build_linear_densenet(const LinearDensenetConfig& cfg);

struct LdiReport {
  std::vector<double> layer_mean_sigma;  // per layer, averaged over trials
  double k_hat = 0.0;
  Bounds bounds;
  double fraction_within = 0.0;
  double grand_mean = 0.0;
  bool vacuous = false;  // lower bound <= 0
  int trials = 0;
};

LdiReport ldi_report(const LinearDensenetConfig& cfg, int trials, unsigned threads = 0);
std::string ldi_report_json(const LinearDensenetConfig& cfg, const LdiReport& r);

// R^2 -> R network; hidden layer i applies ReLU when relu[i] is set.
struct ReluMlp {
  std::vector<Tensor> weights;  // [out, in]
  std::vector<Tensor> biases;   // [out]
  std::vector<bool> relu;       // one flag per layer; the last layer is linear

  int relu_units() const;
  void validate() const;
};

// widths = {2, h1, ..., 1}; weights and biases ~ Normal(0, 1).
ReluMlp random_relu_mlp(const std::vector<int>& widths, std::uint64_t seed, bool with_relu = true);

struct RegionCount {
  std::int64_t distinct_patterns = 0;
  int grid_resolution = 0;
  int relu_units = 0;
  double log2_upper = 0.0;
};

// Lattice of (grid + 1)^2 points x_i = -r + 2 r i / grid, so doubling the
// grid keeps every earlier point.
RegionCount count_linear_regions(const ReluMlp& mlp, double box_radius, int grid);

struct MontufarReport {
  int n = 0, n0 = 0, layers = 0, trials = 0;
  double mean_patterns = 0.0;
  std::int64_t max_patterns = 0;
  double log2_montufar = 0.0;
  int relu_units = 0;
  bool within_upper = true;
  bool unit_depth_term = false;  // n == n0
};

// Networks n0 -> n (x layers, ReLU) -> 1. The lattice counter is 2-D, so
// n0 must be 2.
MontufarReport montufar_consistency(int n, int n0, int layers, int trials, std::uint64_t seed = 0,
                                    int grid = 256, double box_radius = 3.0);
std::string montufar_report_json(const std::vector<MontufarReport>& reports);

}  // namespace nnmass
