#include "nnmass/scaler.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nnmass/costmodel.hpp"
#include "nnmass/error.hpp"
#include "nnmass/topology.hpp"

namespace nnmass {

namespace {

std::vector<double> linspace(double lo, double hi, int steps) {
  std::vector<double> v(static_cast<std::size_t>(steps));
  for (int i = 0; i < steps; ++i) {
    v[static_cast<std::size_t>(i)] = steps == 1 ? lo : lo + (hi - lo) * i / (steps - 1);
  }
  if (steps > 1) v.back() = hi;
  return v;
}

// true if a should be preferred over b when masses tie
bool tie_less(const ScaleCandidate& a, const ScaleCandidate& b) {
  if (a.macs != b.macs) return a.macs < b.macs;
  if (a.params != b.params) return a.params < b.params;
  if (a.w_m != b.w_m) return a.w_m < b.w_m;
  return a.d_m < b.d_m;
}

std::string join(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

// Index of the argmax-mass candidate among those admitted by the budget.
std::optional<std::size_t> selected_index(const std::vector<ScaleCandidate>& cands, const std::optional<Budget>& budget) {
  if (!budget) return std::nullopt;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    if (!c.valid || !budget->admits(c.macs, c.params)) continue;
    if (!best || c.mass > cands[*best].mass || (c.mass == cands[*best].mass && tie_less(c, cands[*best]))) {
      best = i;
    }
  }
  return best;
}

}  // namespace

void MultiplierGrid::validate() const {
  if (!(w_min > 0.0) || w_max < w_min) throw Error("grid: need 0 < w_min <= w_max");
  if (!(d_min > 0.0) || d_max < d_min) throw Error("grid: need 0 < d_min <= d_max");
  if (w_steps < 1 || d_steps < 1) throw Error("grid: steps must be >= 1");
}

std::vector<double> MultiplierGrid::widths() const { return linspace(w_min, w_max, w_steps); }
std::vector<double> MultiplierGrid::depths() const { return linspace(d_min, d_max, d_steps); }

void Budget::validate() const {
  if (!target_macs && !target_params) throw Error("budget: at least one of target_macs/target_params is required");
  if (target_macs && *target_macs <= 0) throw Error("budget: target_macs must be positive");
  if (target_params && *target_params <= 0) throw Error("budget: target_params must be positive");
  if (!(tolerance >= 0.0 && tolerance <= 0.25)) throw Error("budget: tolerance must lie in [0, 0.25]");
}

bool Budget::admits(std::int64_t macs, std::int64_t params) const {
  auto within = [&](std::int64_t value, std::int64_t target) {
    const double rel = std::abs(static_cast<double>(value - target)) / static_cast<double>(target);
    return rel <= tolerance;
  };
  if (target_macs && !within(macs, *target_macs)) return false;
  if (target_params && !within(params, *target_params)) return false;
  return true;
}

ScaleCandidate evaluate_candidate(const ArchDescriptor& base, double w_m, double d_m, int resolution) {
  if (!base.stages) throw Error("enumerate_candidates: base must be stage-structured");
  ScaleCandidate c;
  c.w_m = w_m;
  c.d_m = d_m;
  for (std::size_t s = 0; s < base.stages->widths.size(); ++s) {
    c.widths.push_back(round_half_up(base.stages->widths[s] * w_m));
    c.depths.push_back(std::max(1, round_half_up(base.stages->depths[s] * d_m)));
  }
  try {
    const ArchDescriptor scaled = scale_arch(base, w_m, d_m);
    const CostReport cost = count_arch(scaled, resolution);
    const MassReport mass = nn_mass(scaled);
    c.widths = scaled.stages->widths;
    c.depths = scaled.stages->depths;
    c.macs = cost.total_macs;
    c.params = cost.total_params;
    c.mass = mass.mass;
    c.nonlinear_units = mass.nonlinear_units;
  } catch (const Error& e) {
    c.valid = false;
    c.invalid_reason = e.what();
  }
  return c;
}

std::vector<ScaleCandidate> enumerate_candidates(const ArchDescriptor& base, const MultiplierGrid& grid,
                                                 int resolution, unsigned threads) {
  grid.validate();
  if (base.family != Family::ConvNext && base.family != Family::ResNetBottleneck) {
    throw Error("enumerate_candidates: base family must be convnext or resnet_bottleneck");
  }
  if (!base.stages) throw Error("enumerate_candidates: base must be stage-structured");
  const auto ws = grid.widths();
  const auto ds = grid.depths();
  std::vector<ScaleCandidate> out(ws.size() * ds.size());

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min<unsigned>(threads, static_cast<unsigned>(out.size()));
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      out[i] = evaluate_candidate(base, ws[i / ds.size()], ds[i % ds.size()], resolution);
    }
  };
  if (threads <= 1) {
    work(0, out.size());
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (out.size() + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(out.size(), b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
    for (auto& th : pool) th.join();
  }
  return out;
}

std::vector<ScaleCandidate> filter_budget(const std::vector<ScaleCandidate>& cands, const Budget& budget) {
  budget.validate();
  std::vector<ScaleCandidate> out;
  std::copy_if(cands.begin(), cands.end(), std::back_inserter(out),
               [&](const ScaleCandidate& c) { return c.valid && budget.admits(c.macs, c.params); });
  return out;
}

ScaleCandidate select_max_mass(const std::vector<ScaleCandidate>& cands) {
  if (cands.empty()) throw Error("select_max_mass: empty candidate list");
  const ScaleCandidate* best = &cands.front();
  for (const auto& c : cands) {
    if (c.mass > best->mass || (c.mass == best->mass && tie_less(c, *best))) best = &c;
  }
  return *best;
}

std::int64_t candidate_cost(const ScaleCandidate& c, CostAxis axis) {
  return axis == CostAxis::Macs ? c.macs : c.params;
}

std::vector<ScaleCandidate> pareto_frontier(const std::vector<ScaleCandidate>& cands, CostAxis axis) {
  std::vector<const ScaleCandidate*> order;
  for (const auto& c : cands) {
    if (c.valid) order.push_back(&c);
  }
  // Cost ascending; at equal cost the heaviest first, then (w_m, d_m).
  std::stable_sort(order.begin(), order.end(), [&](const ScaleCandidate* a, const ScaleCandidate* b) {
    const auto ca = candidate_cost(*a, axis), cb = candidate_cost(*b, axis);
    if (ca != cb) return ca < cb;
    if (a->mass != b->mass) return a->mass > b->mass;
    if (a->w_m != b->w_m) return a->w_m < b->w_m;
    return a->d_m < b->d_m;
  });
  std::vector<ScaleCandidate> frontier;
  for (const ScaleCandidate* c : order) {
    if (frontier.empty() || c->mass > frontier.back().mass) frontier.push_back(*c);
  }
  return frontier;
}

std::string candidates_csv(const std::vector<ScaleCandidate>& cands, const std::optional<Budget>& budget) {
  const auto sel = selected_index(cands, budget);
  std::ostringstream os;
  os << "w_m,d_m,widths,depths,params,macs,mass,nonlinear_units,valid,in_budget,selected\n";
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    const bool in_budget = budget && c.valid && budget->admits(c.macs, c.params);
    os << num(c.w_m) << ',' << num(c.d_m) << ',' << join(c.widths) << ',' << join(c.depths) << ',' << c.params
       << ',' << c.macs << ',' << num(c.mass) << ',' << c.nonlinear_units << ',' << (c.valid ? "true" : "false")
       << ',' << (in_budget ? "true" : "false") << ',' << (sel && *sel == i ? "true" : "false") << '\n';
  }
  return os.str();
}

std::string candidates_json(const std::vector<ScaleCandidate>& cands, const std::optional<Budget>& budget) {
  const auto sel = selected_index(cands, budget);
  auto arr = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < cands.size(); ++i) {
    const auto& c = cands[i];
    nlohmann::ordered_json j;
    j["w_m"] = c.w_m;
    j["d_m"] = c.d_m;
    j["widths"] = c.widths;
    j["depths"] = c.depths;
    j["params"] = c.params;
    j["macs"] = c.macs;
    j["mass"] = c.mass;
    j["nonlinear_units"] = c.nonlinear_units;
    j["valid"] = c.valid;
    j["in_budget"] = budget && c.valid && budget->admits(c.macs, c.params);
    j["selected"] = sel && *sel == i;
    if (!c.valid) j["invalid_reason"] = c.invalid_reason;
    arr.push_back(std::move(j));
  }
  return arr.dump(2) + "\n";
}

std::vector<ScaleCandidate> parse_candidates_csv(const std::string& text) {
  std::istringstream is(text);
  std::string line;
  if (!std::getline(is, line) || line != "w_m,d_m,widths,depths,params,macs,mass,nonlinear_units,valid,in_budget,selected") {
    throw Error("malformed CSV row at line 1: unexpected header");
  }
  std::vector<ScaleCandidate> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = split(line, ',');
    const std::string where = "malformed CSV row at line " + std::to_string(lineno);
    if (f.size() != 11) throw Error(where + ": expected 11 fields");
    try {
      ScaleCandidate c;
      std::size_t pos = 0;
      auto whole_double = [&](const std::string& s) {
        double v = std::stod(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return v;
      };
      auto whole_int = [&](const std::string& s) {
        long long v = std::stoll(s, &pos);
        if (pos != s.size()) throw std::invalid_argument(s);
        return static_cast<std::int64_t>(v);
      };
      auto boolean = [&](const std::string& s) {
        if (s == "true") return true;
        if (s == "false") return false;
        throw std::invalid_argument(s);
      };
      auto ints = [&](const std::string& s) {
        std::vector<int> v;
        for (const auto& x : split(s, ';')) v.push_back(static_cast<int>(whole_int(x)));
        return v;
      };
      c.w_m = whole_double(f[0]);
      c.d_m = whole_double(f[1]);
      c.widths = ints(f[2]);
      c.depths = ints(f[3]);
      c.params = whole_int(f[4]);
      c.macs = whole_int(f[5]);
      c.mass = whole_double(f[6]);
      c.nonlinear_units = whole_int(f[7]);
      c.valid = boolean(f[8]);
      boolean(f[9]);
      boolean(f[10]);
      out.push_back(std::move(c));
    } catch (const std::exception&) {
      throw Error(where + ": unparsable field");
    }
  }
  return out;
}

}  // namespace nnmass
