#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nnmass/restructure.hpp"
#include "nnmass/tensor.hpp"

namespace nnmass {

enum class DatasetKind { Blobs, Moons, Xor };

DatasetKind parse_dataset_kind(const std::string& name);

struct Dataset {
  Tensor inputs;  // [n, 2]
  std::vector<int> labels;
  int size() const { return static_cast<int>(labels.size()); }
};

// Blobs: two centers 3 apart, points uniform in a disk of radius noise * 3.
// Moons: interleaved half circles plus Gaussian noise. Xor: sign quadrants.
Dataset make_dataset(DatasetKind kind, int n, double noise, std::uint64_t seed);

// A1 plain, A2 residual, A3 residual with expansion 1/2.
enum class AfrbVariant { A1, A2, A3 };

// x -> PReLU(x; 1 - alpha) -> W_expand -> PReLU(.; alpha) -> W_project (+ x).
struct AfrbMlpBlock {
  double alpha = 0.5;
  Tensor w_expand;   // [hidden, d]
  Tensor w_project;  // [d_out, hidden]
  AfrbVariant variant = AfrbVariant::A1;

  bool residual() const { return variant != AfrbVariant::A1; }
  int in_dim() const { return w_expand.dim(1); }
  int hidden() const { return w_expand.dim(0); }
  int out_dim() const { return w_project.dim(0); }
  void validate() const;
};

struct LinearHead {
  Tensor w;  // [classes, d]
  Tensor b;  // [classes]
};

struct AfrbMlpModel {
  std::vector<AfrbMlpBlock> blocks;
  LinearHead head;
  void validate() const;
};

struct ModelConfig {
  AfrbVariant variant = AfrbVariant::A1;
  int blocks = 3;
  int in_dim = 2;
  // Residual variants keep width == in_dim.
  int width = 8;
  Rational expansion{4};
  int classes = 2;
  double alpha_init = 0.5;
  std::uint64_t seed = 0;
};

AfrbMlpModel make_afrb_model(const ModelConfig& cfg);

struct Batch {
  Tensor inputs;  // [b, d]
  std::vector<int> labels;
};

Batch full_batch(const Dataset& data);

struct ForwardResult {
  double loss = 0.0;  // cross-entropy + regularizer
  double accuracy = 0.0;
  double regularizer = 0.0;  // lambda * sum (alpha - 1)^2
};

ForwardResult forward_loss(const AfrbMlpModel& model, const Batch& batch, double lambda);

// Same layout as the model; alpha gradients live in blocks[i].alpha.
struct Gradients {
  AfrbMlpModel grad;
  ForwardResult forward;
};

Gradients backward(const AfrbMlpModel& model, const Batch& batch, double lambda);

struct SearchConfig {
  double lambda = 1e-3;
  double lr = 0.1;
  int epochs = 300;
  int batch = 4;
  Band band;
  std::uint64_t seed = 0;
  void validate() const;
};

struct EpochRecord {
  double loss = 0.0;  // mean over the epoch's minibatches
  double accuracy = 0.0;  // on the full dataset after the epoch
  std::vector<double> alphas;
  double regularizer = 0.0;
};

using SearchTrace = std::vector<EpochRecord>;

SearchTrace train_search(AfrbMlpModel& model, const Dataset& data, const SearchConfig& cfg);

// Hidden units of every block whose alpha falls outside the band.
std::int64_t nonlinearity_count(const AfrbMlpModel& model, const Band& band = {});

struct FinalBlock {
  enum class Kind { Collapsed, Ibn } kind = Kind::Ibn;
  bool residual = false;
  Tensor dense;      // Collapsed: W_project * W_expand, [d_out, d]
  Tensor w_expand;   // Ibn
  Tensor w_project;  // Ibn
};

// Collapsed: ReLU -> dense. Ibn: ReLU -> W_expand -> ReLU -> W_project.
struct FinalMlp {
  std::vector<FinalBlock> blocks;
  LinearHead head;
  std::int64_t parameter_count() const;
};

FinalMlp finalize(const AfrbMlpModel& model, const Band& band = {});

Tensor block_forward(const AfrbMlpBlock& block, const Tensor& x);
Tensor final_block_forward(const FinalBlock& block, const Tensor& x);
Tensor final_forward(const FinalMlp& mlp, const Tensor& x);
std::int64_t model_parameter_count(const AfrbMlpModel& model);

std::string trace_csv(const SearchTrace& trace);
std::string search_summary_json(const AfrbMlpModel& model, const SearchTrace& trace, const Band& band);

}  // namespace nnmass
