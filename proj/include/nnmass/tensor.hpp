#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnmass/archspec.hpp"

namespace nnmass {

// Dense row-major float64 array.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  static Tensor matrix(int rows, int cols, std::vector<double> data);
  static Tensor identity(int n);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }

  // Rank-2 / rank-3 / rank-4 element access.
  double at(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  double& at(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
  double at(int i, int j, int k) const { return data_[index3(i, j, k)]; }
  double& at(int i, int j, int k) { return data_[index3(i, j, k)]; }
  double at(int i, int j, int k, int l) const { return data_[index4(i, j, k, l)]; }
  double& at(int i, int j, int k, int l) { return data_[index4(i, j, k, l)]; }

  Tensor reshaped(std::vector<int> shape) const;
  bool all_finite() const;

  bool operator==(const Tensor&) const = default;

 private:
  std::size_t index3(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k;
  }
  std::size_t index4(int i, int j, int k, int l) const {
    return ((static_cast<std::size_t>(i) * shape_[1] + j) * shape_[2] + k) * shape_[3] + l;
  }

  std::vector<int> shape_;
  std::vector<double> data_;
};

double max_abs_diff(const Tensor& a, const Tensor& b);

Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& m);

struct ConvWeights {
  Tensor kernel;  // [C_out, C_in / groups, k, k]
  std::optional<Tensor> bias;
  int stride = 1;
  int groups = 1;

  int out_channels() const { return kernel.dim(0); }
  int in_channels() const { return kernel.dim(1) * groups; }
  int kernel_size() const { return kernel.dim(2); }
  void validate() const;
};

struct BNParams {
  Tensor mean, var, gamma, beta;
  double epsilon = 1e-5;
};

enum class Padding { Same, Valid };

Tensor conv2d(const Tensor& input, const ConvWeights& w, Padding padding = Padding::Same);

// Inference-mode batch norm over the channel axis of [C, H, W].
Tensor batch_norm(const Tensor& input, const BNParams& bn);

ConvWeights fold_bn(const ConvWeights& w, const BNParams& bn);

// PReLU(x; a) = max(x, 0) + a * min(x, 0).
double prelu(double x, double a);
Tensor activate(const Activation& act, const Tensor& t);

// Descending, non-negative.
std::vector<double> singular_values(const Tensor& m);

// Counter-based generator: every draw is a pure function of (seed, index).
std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index);
double uniform01(std::uint64_t seed, std::uint64_t index);
double standard_normal(std::uint64_t seed, std::uint64_t index);

struct Distribution {
  enum class Kind { Normal, Uniform } kind = Kind::Normal;
  double a = 0.0;  // mean, or lower bound
  double b = 1.0;  // variance, or upper bound

  static Distribution normal(double mean, double var) { return {Kind::Normal, mean, var}; }
  static Distribution uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
};

Tensor rand_tensor(std::vector<int> shape, const Distribution& dist, std::uint64_t seed);

// "NNMTENS\0", u32 rank, u32 reserved, u64 dims[rank], float64 data; little-endian.
std::string tensor_to_bytes(const Tensor& t);
Tensor tensor_from_bytes(const std::string& bytes);
void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace nnmass
