#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nnmass/archspec.hpp"

namespace nnmass {

struct MultiplierGrid {
  double w_min = 0.25;
  double w_max = 1.6;
  int w_steps = 40;
  double d_min = 0.6;
  double d_max = 2.56;
  int d_steps = 20;

  void validate() const;
  // Uniform, endpoints inclusive; a single step yields the minimum.
  std::vector<double> widths() const;
  std::vector<double> depths() const;
};

struct Budget {
  std::optional<std::int64_t> target_macs;
  std::optional<std::int64_t> target_params;
  double tolerance = 0.025;

  void validate() const;
  bool admits(std::int64_t macs, std::int64_t params) const;
  bool operator==(const Budget&) const = default;
};

struct ScaleCandidate {
  double w_m = 0.0;
  double d_m = 0.0;
  std::vector<int> widths;
  std::vector<int> depths;
  std::int64_t macs = 0;
  std::int64_t params = 0;
  double mass = 0.0;
  std::int64_t nonlinear_units = 0;
  bool valid = true;
  std::string invalid_reason;
};

// Evaluates one (w_m, d_m) pair; degenerate widths yield valid=false.
ScaleCandidate evaluate_candidate(const ArchDescriptor& base, double w_m, double d_m, int resolution);

// Ordered by (w_m, d_m) ascending regardless of how many threads evaluate.
std::vector<ScaleCandidate> enumerate_candidates(const ArchDescriptor& base, const MultiplierGrid& grid,
                                                 int resolution, unsigned threads = 0);

// Valid candidates within the relative tolerance of every set target.
std::vector<ScaleCandidate> filter_budget(const std::vector<ScaleCandidate>& cands, const Budget& budget);

// Highest mass; ties go to lower macs, then params, then w_m, then d_m.
ScaleCandidate select_max_mass(const std::vector<ScaleCandidate>& cands);

enum class CostAxis { Macs, Params };

// Non-dominated valid candidates in (cost down, mass up), cost ascending,
// with strictly increasing mass.
std::vector<ScaleCandidate> pareto_frontier(const std::vector<ScaleCandidate>& cands, CostAxis axis);

std::int64_t candidate_cost(const ScaleCandidate& c, CostAxis axis);

// Scan CSV: w_m,d_m,widths,depths,params,macs,mass,nonlinear_units,valid,in_budget,selected
// Lists inside a field are ';'-separated.
std::string candidates_csv(const std::vector<ScaleCandidate>& cands, const std::optional<Budget>& budget);
std::string candidates_json(const std::vector<ScaleCandidate>& cands, const std::optional<Budget>& budget);
std::vector<ScaleCandidate> parse_candidates_csv(const std::string& text);

}  // namespace nnmass
