#include "nnmass/tensor.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "nnmass/error.hpp"

namespace nnmass {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d < 0) throw Error("tensor: negative dimension");
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

std::string shape_str(const std::vector<int>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

int out_size(int in, int k, int stride, Padding padding) {
  const int pad = padding == Padding::Same ? k / 2 : 0;
  const int span = in + 2 * pad - k;
  if (span < 0) throw Error("conv2d: kernel larger than input");
  return span / stride + 1;
}

template <class T>
void put_le(std::string& out, T v) {
  static_assert(std::endian::native == std::endian::little, "little-endian host required");
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("tensor file truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

constexpr char kMagic[8] = {'N', 'N', 'M', 'T', 'E', 'N', 'S', '\0'};

}  // namespace

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)), data_(product(shape_), fill) {}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != product(shape_)) {
    throw Error("tensor: data length " + std::to_string(data_.size()) + " does not match shape " +
                shape_str(shape_));
  }
}

Tensor Tensor::matrix(int rows, int cols, std::vector<double> data) { return Tensor({rows, cols}, std::move(data)); }

Tensor Tensor::identity(int n) {
  Tensor t({n, n});
  for (int i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

Tensor Tensor::reshaped(std::vector<int> shape) const { return Tensor(std::move(shape), data_); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw Error("shape mismatch: " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw Error("matmul: shape mismatch " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  }
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  Tensor c({n, m});
  for (int i = 0; i < n; ++i) {
    for (int p = 0; p < k; ++p) {
      const double v = a.at(i, p);
      if (v == 0.0) continue;
      for (int j = 0; j < m; ++j) c.at(i, j) += v * b.at(p, j);
    }
  }
  return c;
}

Tensor transpose(const Tensor& m) {
  if (m.rank() != 2) throw Error("transpose: rank-2 tensor required");
  Tensor t({m.dim(1), m.dim(0)});
  for (int i = 0; i < m.dim(0); ++i) {
    for (int j = 0; j < m.dim(1); ++j) t.at(j, i) = m.at(i, j);
  }
  return t;
}

void ConvWeights::validate() const {
  if (kernel.rank() != 4) throw Error("conv weights: kernel must be rank 4");
  if (kernel.dim(2) != kernel.dim(3) || kernel.dim(2) < 1) throw Error("conv weights: kernel must be square, k >= 1");
  if (groups < 1 || kernel.dim(0) % groups != 0) throw Error("conv weights: C_out must be divisible by groups");
  if (stride < 1) throw Error("conv weights: stride must be >= 1");
  if (bias && (bias->rank() != 1 || bias->dim(0) != kernel.dim(0))) throw Error("conv weights: bias must be [C_out]");
}

Tensor conv2d(const Tensor& input, const ConvWeights& w, Padding padding) {
  w.validate();
  if (input.rank() != 3) throw Error("conv2d: input must be [C, H, W]");
  const int c_in = input.dim(0), h = input.dim(1), wd = input.dim(2);
  if (c_in != w.in_channels()) {
    throw Error("conv2d: shape mismatch, input has " + std::to_string(c_in) + " channels, weights expect " +
                std::to_string(w.in_channels()));
  }
  const int k = w.kernel_size();
  const int pad = padding == Padding::Same ? k / 2 : 0;
  const int ho = out_size(h, k, w.stride, padding), wo = out_size(wd, k, w.stride, padding);
  const int c_out = w.out_channels();
  const int cin_g = w.kernel.dim(1), cout_g = c_out / w.groups;

  Tensor out({c_out, ho, wo});
  for (int o = 0; o < c_out; ++o) {
    const int g = o / cout_g;
    const double b = w.bias ? (*w.bias)[static_cast<std::size_t>(o)] : 0.0;
    for (int y = 0; y < ho; ++y) {
      for (int x = 0; x < wo; ++x) {
        double acc = b;
        for (int ci = 0; ci < cin_g; ++ci) {
          const int c = g * cin_g + ci;
          for (int u = 0; u < k; ++u) {
            const int iy = y * w.stride + u - pad;
            if (iy < 0 || iy >= h) continue;
            for (int v = 0; v < k; ++v) {
              const int ix = x * w.stride + v - pad;
              if (ix < 0 || ix >= wd) continue;
              acc += w.kernel.at(o, ci, u, v) * input.at(c, iy, ix);
            }
          }
        }
        out.at(o, y, x) = acc;
      }
    }
  }
  return out;
}

namespace {

void check_bn(const BNParams& bn, int channels) {
  for (const Tensor* t : {&bn.mean, &bn.var, &bn.gamma, &bn.beta}) {
    if (t->rank() != 1 || t->dim(0) != channels) {
      throw Error("batch norm: parameters must be [" + std::to_string(channels) + "]");
    }
  }
  for (std::size_t c = 0; c < bn.var.size(); ++c) {
    if (!(bn.var[c] + bn.epsilon > 0.0)) throw Error("batch norm: var + epsilon must be > 0");
  }
}

}  // namespace

Tensor batch_norm(const Tensor& input, const BNParams& bn) {
  if (input.rank() != 3) throw Error("batch_norm: input must be [C, H, W]");
  const int c = input.dim(0);
  check_bn(bn, c);
  Tensor out = input;
  const std::size_t plane = static_cast<std::size_t>(input.dim(1)) * input.dim(2);
  for (int ch = 0; ch < c; ++ch) {
    const auto i = static_cast<std::size_t>(ch);
    const double scale = bn.gamma[i] / std::sqrt(bn.var[i] + bn.epsilon);
    for (std::size_t p = 0; p < plane; ++p) {
      double& v = out[i * plane + p];
      v = (v - bn.mean[i]) * scale + bn.beta[i];
    }
  }
  return out;
}

ConvWeights fold_bn(const ConvWeights& w, const BNParams& bn) {
  w.validate();
  const int c_out = w.out_channels();
  check_bn(bn, c_out);
  ConvWeights f = w;
  Tensor bias({c_out});
  const std::size_t per_out = w.kernel.size() / static_cast<std::size_t>(c_out);
  for (int o = 0; o < c_out; ++o) {
    const auto i = static_cast<std::size_t>(o);
    const double scale = bn.gamma[i] / std::sqrt(bn.var[i] + bn.epsilon);
    for (std::size_t j = 0; j < per_out; ++j) f.kernel[i * per_out + j] *= scale;
    const double b = w.bias ? (*w.bias)[i] : 0.0;
    bias[i] = (b - bn.mean[i]) * scale + bn.beta[i];
  }
  f.bias = std::move(bias);
  return f;
}

double prelu(double x, double a) { return std::max(x, 0.0) + a * std::min(x, 0.0); }

Tensor activate(const Activation& act, const Tensor& t) {
  if (!t.all_finite()) throw Error("activate: non-finite input");
  Tensor out = t;
  auto& d = out.data();
  using K = Activation::Kind;
  switch (act.kind) {
    case K::None:
      break;
    case K::ReLU:
      for (auto& v : d) v = std::max(v, 0.0);
      break;
    case K::ReLU6:
      for (auto& v : d) v = std::clamp(v, 0.0, 6.0);
      break;
    case K::PReLU:
      for (auto& v : d) v = prelu(v, act.param);
      break;
    case K::GeLU:
      for (auto& v : d) v = 0.5 * v * (1.0 + std::erf(v / std::numbers::sqrt2));
      break;
    case K::HSwish:
      for (auto& v : d) v = v * std::clamp(v + 3.0, 0.0, 6.0) / 6.0;
      break;
    case K::ExpKernel: {
      if (!(act.param > 0.0)) throw Error("activate: exp_kernel clamp must be > 0");
      for (auto& v : d) v = std::exp(std::clamp(v, -act.param, act.param));
      break;
    }
  }
  return out;
}

std::vector<double> singular_values(const Tensor& m) {
  if (m.rank() != 2) throw Error("singular_values: rank-2 tensor required");
  if (!m.all_finite()) throw Error("singular_values: non-finite entries");
  const int r = m.dim(0), c = m.dim(1);
  if (r > 512 || c > 512) throw Error("singular_values: dimensions above 512 are not supported");
  if (r == 0 || c == 0) return {};

  // Gram matrix over the smaller dimension.
  const bool rows = r <= c;
  const int n = rows ? r : c;
  std::vector<double> g(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      if (rows) {
        for (int k = 0; k < c; ++k) s += m.at(i, k) * m.at(j, k);
      } else {
        for (int k = 0; k < r; ++k) s += m.at(k, i) * m.at(k, j);
      }
      g[static_cast<std::size_t>(i) * n + j] = s;
      g[static_cast<std::size_t>(j) * n + i] = s;
    }
  }
  auto G = [&](int i, int j) -> double& { return g[static_cast<std::size_t>(i) * n + j]; };

  double total = 0.0;
  for (double v : g) total += v * v;
  const double tol = 1e-12 * std::sqrt(total);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (i != j) off += G(i, j) * G(i, j);
      }
    }
    if (std::sqrt(off) <= tol) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = G(p, q);
        if (apq == 0.0) continue;
        const double theta = (G(q, q) - G(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double cs = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * cs;
        for (int k = 0; k < n; ++k) {
          const double gkp = G(k, p), gkq = G(k, q);
          G(k, p) = cs * gkp - sn * gkq;
          G(k, q) = sn * gkp + cs * gkq;
        }
        for (int k = 0; k < n; ++k) {
          const double gpk = G(p, k), gqk = G(q, k);
          G(p, k) = cs * gpk - sn * gqk;
          G(q, k) = sn * gpk + cs * gqk;
        }
      }
    }
  }
  std::vector<double> sv(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) sv[static_cast<std::size_t>(i)] = std::sqrt(std::max(G(i, i), 0.0));
  std::sort(sv.begin(), sv.end(), std::greater<>());
  return sv;
}

std::uint64_t splitmix64(std::uint64_t seed, std::uint64_t index) {
  auto mix = [](std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  };
  return mix(mix(seed) + (index + 1) * 0x9E3779B97F4A7C15ULL);
}

double uniform01(std::uint64_t seed, std::uint64_t index) {
  return static_cast<double>(splitmix64(seed, index) >> 11) * 0x1.0p-53;
}

double standard_normal(std::uint64_t seed, std::uint64_t index) {
  const std::uint64_t pair = index & ~std::uint64_t{1};
  const double u1 = 1.0 - uniform01(seed, pair);
  const double u2 = uniform01(seed, pair + 1);
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  return (index & 1) ? r * std::sin(a) : r * std::cos(a);
}

Tensor rand_tensor(std::vector<int> shape, const Distribution& dist, std::uint64_t seed) {
  Tensor t(std::move(shape));
  if (dist.kind == Distribution::Kind::Normal) {
    if (dist.b < 0.0) throw Error("rand_tensor: variance must be >= 0");
    const double sd = std::sqrt(dist.b);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist.a + sd * standard_normal(seed, i);
  } else {
    if (dist.b < dist.a) throw Error("rand_tensor: uniform bounds must satisfy a <= b");
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist.a + (dist.b - dist.a) * uniform01(seed, i);
  }
  return t;
}

std::string tensor_to_bytes(const Tensor& t) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(t.rank()));
  put_le<std::uint32_t>(out, 0);
  for (int d : t.shape()) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(d));
  for (double v : t.data()) put_le<double>(out, v);
  return out;
}

Tensor tensor_from_bytes(const std::string& bytes) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error("tensor file: bad magic");
  }
  std::size_t pos = 8;
  const auto rank = get_le<std::uint32_t>(bytes, pos);
  get_le<std::uint32_t>(bytes, pos);
  if (rank > 8) throw Error("tensor file: rank " + std::to_string(rank) + " too large");
  std::vector<int> shape;
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    const auto d = get_le<std::uint64_t>(bytes, pos);
    if (d > (1ULL << 31)) throw Error("tensor file: dimension too large");
    shape.push_back(static_cast<int>(d));
    n *= d;
  }
  if (bytes.size() != pos + n * sizeof(double)) throw Error("tensor file: size does not match header");
  std::vector<double> data(n);
  for (auto& v : data) v = get_le<double>(bytes, pos);
  return Tensor(std::move(shape), std::move(data));
}

void save_tensor(const std::string& path, const Tensor& t) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("cannot open '" + tmp + "' for writing");
    const std::string bytes = tensor_to_bytes(t);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw Error("write to '" + tmp + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

Tensor load_tensor(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return tensor_from_bytes(ss.str());
}

}  // namespace nnmass
