#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnmass/archspec.hpp"

namespace nnmass {

struct BlockMass {
  std::size_t block_index = 0;
  Rational input_channels;  // i_b: total input channels over the block's layers
  Rational cell_density;    // rho_b
  Rational mass;            // i_b * rho_b
};

struct MassReport {
  double mass = 0.0;
  Rational exact_mass;
  std::vector<BlockMass> per_block;  // mass-bearing (residual) blocks only
  std::int64_t nonlinear_units = 0;
  Rational k;                 // X = k * m
  double avg_degree = 0.0;    // w + m/2 with w the mean residual-block width
};

// NN-Mass of a uniform residual ConvNext or ResNet bottleneck network.
//   ResNet bottleneck: i_b = (1+2e) w1, rho_b = 1/(2+e)
//   ConvNext:          i_b = (2+e) w1,  rho_b = 1/3
// Stems, downsamplers and heads carry no mass.
MassReport nn_mass(const ArchDescriptor& arch);

// Scalar non-linear activation sites, summed over blocks.
std::int64_t nonlinear_units(const ArchDescriptor& arch);
std::int64_t block_nonlinear_units(const BlockSpec& block, int in_channels);

// k_R = 2e(2+e)/(1+2e), k_C = 3e/(2+e).
Rational proportionality_constant(Family family, const Rational& e);

double average_degree(double width, double mass);

struct Bounds {
  double lower = 0.0;
  double upper = 0.0;
};

// sqrt(q k) -/+ sqrt(q w) bracket on the mean layerwise singular value.
Bounds ldi_bounds(double q, double width, double avg_degree);

// log2 of the 2^X region upper bound, i.e. X itself.
double log2_region_upper_bound(std::int64_t nonlinear_units);

// log2 of (n/n0)^((L-1) n0) * n^n0.
double log2_montufar_bound(int n, int n0, int layers);

// Depth exponent (m - n) n0 / n with m = nL for a uniform residual net.
double depth_exponent(int n, int n0, double mass);

std::string mass_report_json(const MassReport& report);
// One-line summary: "m=... X=... k=... k_hat=..."
std::string mass_summary(const MassReport& report);

}  // namespace nnmass
