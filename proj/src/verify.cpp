#include "nnmass/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <thread>
#include <unordered_set>

#include "json.hpp"
#include "nnmass/error.hpp"

namespace nnmass {

void LinearDensenetConfig::validate() const {
  if (width < 2) throw Error("linear densenet: width must be >= 2");
  if (depth < 3) throw Error("linear densenet: depth must be >= 3");
  if (!(q > 0.0) || !std::isfinite(q)) throw Error("linear densenet: q must be > 0");
  if (skip < 0 || skip > width) {
    throw Error("linear densenet: infeasible skip count " + std::to_string(skip) + " (need 0 <= s <= w = " +
                std::to_string(width) + ")");
  }
}

LinearDensenet build_linear_densenet(const LinearDensenetConfig& cfg) {
  cfg.validate();
  const int w = cfg.width;
  LinearDensenet net;
  std::int64_t skip_total = 0;
  for (int l = 1; l <= cfg.depth; ++l) {
    const auto ls = splitmix64(cfg.seed, static_cast<std::uint64_t>(l));
    DenseLayer layer;
    const int s = l >= 2 ? cfg.skip : 0;
    if (s > 0) {
      // Partial Fisher-Yates over the (l - 1) * w earlier channels.
      std::vector<int> pool(static_cast<std::size_t>((l - 1) * w));
      std::iota(pool.begin(), pool.end(), 0);
      for (int i = 0; i < s; ++i) {
        const auto span = static_cast<std::uint64_t>(pool.size() - static_cast<std::size_t>(i));
        const auto j = static_cast<std::size_t>(i) +
                       static_cast<std::size_t>(splitmix64(ls, static_cast<std::uint64_t>(i)) % span);
        std::swap(pool[static_cast<std::size_t>(i)], pool[j]);
        layer.skips.push_back({pool[static_cast<std::size_t>(i)] / w, pool[static_cast<std::size_t>(i)] % w});
      }
      skip_total += s;
    }
    layer.weight = rand_tensor({w, w + s}, Distribution::normal(0.0, cfg.q), splitmix64(ls, 1u << 20));
    net.layers.push_back(std::move(layer));
  }
  net.mass = 2.0 * static_cast<double>(skip_total) / (cfg.depth - 1);
  net.k_hat = w + net.mass / 2.0;
  return net;
}

LdiReport ldi_report(const LinearDensenetConfig& cfg, int trials, unsigned threads) {
  cfg.validate();
  if (trials < 50) throw Error("ldi_report: trials must be >= 50");
  const int layers = cfg.depth;
  // means[t * layers + l]
  std::vector<double> means(static_cast<std::size_t>(trials) * layers);
  double k_hat = 0.0;
  auto work = [&](int begin, int end) {
    for (int t = begin; t < end; ++t) {
      LinearDensenetConfig c = cfg;
      c.seed = splitmix64(cfg.seed, static_cast<std::uint64_t>(t));
      const LinearDensenet net = build_linear_densenet(c);
      for (int l = 0; l < layers; ++l) {
        const auto sv = singular_values(net.layers[static_cast<std::size_t>(l)].weight);
        means[static_cast<std::size_t>(t) * layers + l] = std::accumulate(sv.begin(), sv.end(), 0.0) / sv.size();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(trials));
  if (threads <= 1) {
    work(0, trials);
  } else {
    std::vector<std::thread> pool;
    const int chunk = (trials + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (int b = 0; b < trials; b += chunk) pool.emplace_back(work, b, std::min(trials, b + chunk));
    for (auto& th : pool) th.join();
  }
  k_hat = build_linear_densenet(cfg).k_hat;

  LdiReport r;
  r.trials = trials;
  r.k_hat = k_hat;
  r.bounds = ldi_bounds(cfg.q, cfg.width, k_hat);
  r.vacuous = r.bounds.lower <= 0.0;
  r.layer_mean_sigma.assign(static_cast<std::size_t>(layers), 0.0);
  std::int64_t within = 0;
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    for (int l = 0; l < layers; ++l) {
      const double m = means[static_cast<std::size_t>(t) * layers + l];
      r.layer_mean_sigma[static_cast<std::size_t>(l)] += m / trials;
      sum += m;
      within += (m >= r.bounds.lower && m <= r.bounds.upper) ? 1 : 0;
    }
  }
  const double pairs = static_cast<double>(trials) * layers;
  r.fraction_within = within / pairs;
  r.grand_mean = sum / pairs;
  return r;
}

std::string ldi_report_json(const LinearDensenetConfig& cfg, const LdiReport& r) {
  nlohmann::ordered_json j;
  j["width"] = cfg.width;
  j["depth"] = cfg.depth;
  j["skip"] = cfg.skip;
  j["q"] = cfg.q;
  j["seed"] = cfg.seed;
  j["trials"] = r.trials;
  j["k_hat"] = r.k_hat;
  j["bounds"] = {{"lower", r.bounds.lower}, {"upper", r.bounds.upper}};
  j["vacuous"] = r.vacuous;
  j["fraction_within"] = r.fraction_within;
  j["grand_mean_sigma"] = r.grand_mean;
  j["layer_mean_sigma"] = r.layer_mean_sigma;
  return j.dump(2) + "\n";
}

int ReluMlp::relu_units() const {
  int x = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) x += relu[i] ? weights[i].dim(0) : 0;
  return x;
}

void ReluMlp::validate() const {
  if (weights.empty() || weights.size() != biases.size() || weights.size() != relu.size()) {
    throw Error("relu mlp: weights, biases and relu flags must have equal non-zero length");
  }
  int d = 2;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i].rank() != 2 || weights[i].dim(1) != d || biases[i].rank() != 1 ||
        biases[i].dim(0) != weights[i].dim(0)) {
      throw Error("relu mlp: shape mismatch at layer " + std::to_string(i));
    }
    d = weights[i].dim(0);
  }
}

ReluMlp random_relu_mlp(const std::vector<int>& widths, std::uint64_t seed, bool with_relu) {
  if (widths.size() < 2 || widths.front() != 2) throw Error("random_relu_mlp: widths must start at 2");
  ReluMlp m;
  for (std::size_t i = 0; i + 1 < widths.size(); ++i) {
    const auto ls = splitmix64(seed, i);
    m.weights.push_back(rand_tensor({widths[i + 1], widths[i]}, Distribution::normal(0.0, 1.0), splitmix64(ls, 1)));
    m.biases.push_back(rand_tensor({widths[i + 1]}, Distribution::normal(0.0, 1.0), splitmix64(ls, 2)));
    m.relu.push_back(with_relu && i + 2 < widths.size());
  }
  m.validate();
  return m;
}

RegionCount count_linear_regions(const ReluMlp& mlp, double box_radius, int grid) {
  mlp.validate();
  const int x_units = mlp.relu_units();
  if (x_units > 24) throw Error("count_linear_regions: X = " + std::to_string(x_units) + " exceeds 24");
  if (grid < 1 || grid > 2048) throw Error("count_linear_regions: grid must lie in [1, 2048]");
  if (!(box_radius > 0.0)) throw Error("count_linear_regions: box radius must be > 0");

  std::unordered_set<std::uint32_t> patterns;
  std::vector<double> cur, next;
  for (int i = 0; i <= grid; ++i) {
    for (int j = 0; j <= grid; ++j) {
      cur = {-box_radius + 2.0 * box_radius * i / grid, -box_radius + 2.0 * box_radius * j / grid};
      std::uint32_t code = 0;
      int bit = 0;
      for (std::size_t l = 0; l < mlp.weights.size(); ++l) {
        const Tensor& w = mlp.weights[l];
        next.assign(static_cast<std::size_t>(w.dim(0)), 0.0);
        for (int o = 0; o < w.dim(0); ++o) {
          double acc = mlp.biases[l][static_cast<std::size_t>(o)];
          for (int c = 0; c < w.dim(1); ++c) acc += w.at(o, c) * cur[static_cast<std::size_t>(c)];
          if (mlp.relu[l]) {
            if (acc > 0.0) code |= 1u << bit;
            ++bit;
            acc = std::max(acc, 0.0);
          }
          next[static_cast<std::size_t>(o)] = acc;
        }
        std::swap(cur, next);
      }
      patterns.insert(code);
    }
  }
  RegionCount r;
  r.distinct_patterns = static_cast<std::int64_t>(patterns.size());
  r.grid_resolution = grid;
  r.relu_units = x_units;
  r.log2_upper = log2_region_upper_bound(x_units);
  if (r.distinct_patterns > (std::int64_t{1} << x_units)) {
    throw Error("count_linear_regions: pattern count exceeds 2^X");
  }
  return r;
}

MontufarReport montufar_consistency(int n, int n0, int layers, int trials, std::uint64_t seed, int grid,
                                    double box_radius) {
  if (n0 != 2) throw Error("montufar_consistency: the lattice counter needs n0 = 2");
  if (n < n0 || layers < 1 || trials < 1) throw Error("montufar_consistency: need n >= n0, L >= 1, trials >= 1");
  if (n * layers > 24) throw Error("montufar_consistency: X = n * L must be <= 24");
  MontufarReport r;
  r.n = n;
  r.n0 = n0;
  r.layers = layers;
  r.trials = trials;
  r.relu_units = n * layers;
  r.log2_montufar = log2_montufar_bound(n, n0, layers);
  r.unit_depth_term = n == n0;
  std::vector<int> widths{n0};
  for (int l = 0; l < layers; ++l) widths.push_back(n);
  widths.push_back(1);
  double sum = 0.0;
  for (int t = 0; t < trials; ++t) {
    const ReluMlp mlp = random_relu_mlp(widths, splitmix64(seed, static_cast<std::uint64_t>(t)));
    const RegionCount c = count_linear_regions(mlp, box_radius, grid);
    sum += static_cast<double>(c.distinct_patterns);
    r.max_patterns = std::max(r.max_patterns, c.distinct_patterns);
    r.within_upper = r.within_upper && c.distinct_patterns <= (std::int64_t{1} << c.relu_units);
  }
  r.mean_patterns = sum / trials;
  return r;
}

std::string montufar_report_json(const std::vector<MontufarReport>& reports) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& r : reports) {
    nlohmann::ordered_json j;
    j["n"] = r.n;
    j["n0"] = r.n0;
    j["L"] = r.layers;
    j["trials"] = r.trials;
    j["X"] = r.relu_units;
    j["mean_patterns"] = r.mean_patterns;
    j["max_patterns"] = r.max_patterns;
    j["log2_upper"] = static_cast<double>(r.relu_units);
    j["log2_montufar_bound"] = r.log2_montufar;
    j["within_upper"] = r.within_upper;
    j["unit_depth_term"] = r.unit_depth_term;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

}  // namespace nnmass
