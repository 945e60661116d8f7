#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairexit/autodiff.hpp"
#include "fairexit/dataset.hpp"
#include "fairexit/matrix.hpp"

namespace fairexit {

struct ModelConfig {
  int input_dim = 16;
  int n_blocks = 4;  // mirrors one exit per residual stage
  int block_width = 32;
  int n_exits = 4;  // must equal n_blocks; the last head is the final classifier
  int head_hidden = 64;
  int n_classes = 2;
  bool residual = true;
  std::uint64_t seed = 1;

  void validate() const;
};

// Backbone of dense blocks with a two-layer classifier head per block. The
// last head is the final classifier; the others are internal classifiers.
// Parameters are a flat list of named tensors in a fixed order so that
// initialisation, SGD updates and checkpoints all traverse identically.
struct MultiExitNet {
  ModelConfig config;
  struct Tensor {
    std::string name;
    Matrix value;
  };
  std::vector<Tensor> params;

  Matrix& tensor(const std::string& name);
  const Matrix& tensor(const std::string& name) const;
  bool bitwise_same_params(const MultiExitNet& other) const;
};

// Deterministic per-tensor initialisation: weights uniform in
// [-sqrt(6/(fan_in+fan_out)), +...] from a stream seeded by (seed, name);
// biases zero.
MultiExitNet init(const ModelConfig& config);

// Per-exit outputs for a batch. features[i] is the block output feeding
// head i, confidence the row-wise max softmax probability.
struct BatchTrace {
  std::vector<Matrix> features;
  std::vector<Matrix> logits;
  std::vector<Matrix> probs;
  std::vector<std::vector<double>> confidence;
  int n_exits() const { return static_cast<int>(logits.size()); }
  int rows() const { return logits.empty() ? 0 : logits.front().rows; }
};

// Per-instance view of one row of a BatchTrace.
struct ExitTrace {
  std::vector<std::vector<double>> logits;
  std::vector<std::vector<double>> probs;
  std::vector<std::vector<double>> features;
  std::vector<double> confidence;
  int n_exits() const { return static_cast<int>(confidence.size()); }
};

BatchTrace forward_all_exits(const MultiExitNet& net, const Matrix& x);
ExitTrace extract_trace(const BatchTrace& trace, int row);

// Block outputs only (probe features); heads untouched.
std::vector<Matrix> forward_block_features(const MultiExitNet& net, const Matrix& x);

// Final-classifier logits without instrumenting the internal heads.
Matrix forward_final_logits(const MultiExitNet& net, const Matrix& x);

// Tape (differentiable) forward. Registers every tensor of `net` as a tape
// parameter under its name and returns per-exit feature/logit nodes.
struct TapeForward {
  std::vector<Var> features;
  std::vector<Var> logits;
};
TapeForward tape_forward(Tape& tape, const MultiExitNet& net, const Matrix& x);

// ---- checkpointing ---------------------------------------------------------

// Self-describing binary container; round-trips parameters bitwise.
void save_checkpoint(const MultiExitNet& net, const std::string& path);
MultiExitNet load_checkpoint(const std::string& path);

// ---- frozen-backbone probes -------------------------------------------------

struct ProbeConfig {
  int hidden = 64;
  int epochs = 40;
  double learning_rate = 0.01;
  int batch_size = 128;
  std::uint64_t seed = 1;
};

struct ProbeLayerResult {
  int layer = 0;         // 1-based block index
  double accuracy = 0.0; // percent, on eval data
  double eo = 0.0;       // percentage points, on eval data
};

struct ProbeResult {
  std::vector<ProbeLayerResult> layers;
  // trained probe heads, 4 tensors per layer (w1, b1, w2, b2)
  std::vector<std::vector<Matrix>> heads;
  std::vector<std::vector<int>> eval_predictions;  // per layer
};

// Trains one fresh two-layer head per block on that block's frozen features
// and reports accuracy and equalized odds on the eval data. The backbone is
// never written to.
ProbeResult probe_frozen_backbone(const MultiExitNet& net,
                                  const std::vector<LabeledInstance>& train_data,
                                  const std::vector<LabeledInstance>& eval_data,
                                  const ProbeConfig& config, int n_groups);

}  // namespace fairexit
