#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairexit/autodiff.hpp"
#include "fairexit/matrix.hpp"

namespace fairexit {

// Per-exit weights and the accuracy/fairness trade-off lambda.
struct LossWeights {
  std::vector<double> alpha = {0.3, 0.45, 0.6, 0.9};
  double lambda = 0.0;

  void validate() const;
};

enum class FairnessTag { none, hsic, mmd_distill, adversarial };

std::string to_string(FairnessTag tag);
FairnessTag fairness_tag_from_string(const std::string& s);

struct FairnessMethod {
  FairnessTag tag = FairnessTag::none;
  // kernel methods; 0 selects the per-batch median heuristic. The bandwidth
  // is treated as a constant w.r.t. differentiation either way.
  double kernel_bandwidth = 0.0;
  // adversarial
  int adversary_hidden = 32;
  double reversal_strength = 1.0;

  void validate() const;
};

// Two-layer MLP predicting the sensitive group from (reversed) features.
// Owned by the training run; not part of the model checkpoint.
struct AdversaryHead {
  std::string prefix;
  Matrix w1, b1, w2, b2;

  static AdversaryHead init(int in_dim, int hidden, int n_groups, std::uint64_t seed,
                            const std::string& prefix);
};

// Extra inputs an exit loss may need, depending on the method.
struct ExitLossContext {
  const Matrix* teacher_features = nullptr;  // mmd_distill
  AdversaryHead* adversary = nullptr;        // adversarial (params registered on tape)
  int n_classes = 0;                         // mmd_distill conditioning
};

// Biased empirical HSIC between features and the discrete group label:
// trace(Kc Lc) / (n-1)^2 with a Gaussian kernel K on features (median
// heuristic unless a bandwidth is given) and the delta kernel L on groups.
// Differentiable w.r.t. features; requires n >= 4.
Var hsic(Tape& tape, Var features, const std::vector<int>& sensitives, double bandwidth = 0.0);

// Class-conditional cross-group teacher-student distillation: for each
// target class y, MMD^2(student(y, a=0), teacher(y, a=1)) plus the mirrored
// term, with the biased Gaussian-kernel estimator. Cells with fewer than two
// samples contribute zero (warning). Requires binary sensitive groups.
Var mmd_distill(Tape& tape, Var student_features, const Matrix& teacher_features,
                const std::vector<int>& targets, const std::vector<int>& sensitives,
                int n_classes, double bandwidth = 0.0);

// Adversary cross-entropy on gradient-reversed features. Minimising the
// total loss trains the adversary while the backbone receives reversed
// gradients.
Var adversarial_term(Tape& tape, Var features, const std::vector<int>& sensitives,
                     AdversaryHead& adversary, double reversal_strength);

// cross_entropy(logits, targets) + lambda * fairness_term. Batches with a
// single sensitive group degrade to a zero fairness term with a warning.
Var exit_loss(Tape& tape, Var logits, Var features, const std::vector<int>& targets,
              const std::vector<int>& sensitives, const FairnessMethod& method, double lambda,
              const ExitLossContext& ctx = {});

// sum_i alpha_i * loss_i
Var aggregate_loss(Tape& tape, const std::vector<Var>& per_exit_losses, const LossWeights& w);
double aggregate_loss(const std::vector<double>& per_exit_losses, const LossWeights& w);

}  // namespace fairexit
