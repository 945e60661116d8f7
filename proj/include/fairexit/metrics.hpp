#pragma once

#include <string>
#include <vector>

namespace fairexit {

// One-vs-rest confusion counts for one (target class k, sensitive group a)
// cell. "Positive" means target == k.
struct ConfusionCell {
  long tp = 0;
  long fp = 0;
  long tn = 0;
  long fn = 0;

  bool tpr_defined() const { return tp + fn > 0; }
  bool fpr_defined() const { return fp + tn > 0; }
  double tpr() const;
  double fpr() const;
};

// Cells indexed k * n_groups + a. Throws on label out of range.
std::vector<ConfusionCell> confusion_cells(const std::vector<int>& predictions,
                                           const std::vector<int>& targets,
                                           const std::vector<int>& sensitives, int n_classes,
                                           int n_groups);

enum class EoVariant {
  paper,      // sum_k |dTPR_k + dFPR_k|, signed sum inside one absolute value
  split_abs,  // sum_k (|dTPR_k| + |dFPR_k|), cross-check only
};

// Equalized-odds score in percentage points; 0 is perfectly fair. For more
// than two groups the score is the max of the pairwise binary scores over
// unordered group pairs. Throws when a required rate has an empty cell,
// naming the (class, group) cell.
double equalized_odds(const std::vector<int>& predictions, const std::vector<int>& targets,
                      const std::vector<int>& sensitives, int n_classes, int n_groups,
                      EoVariant variant = EoVariant::paper);

// |P(pred = positive_class | a=g0) - P(... | a=g1)| * 100; max over pairs
// when there are more than two groups. Throws on an empty group.
double demographic_parity_gap(const std::vector<int>& predictions,
                              const std::vector<int>& sensitives, int positive_class);

// mean(prediction == target) * 100, exact.
double accuracy_percent(const std::vector<int>& predictions, const std::vector<int>& targets);

struct FairnessReport {
  double accuracy = 0.0;  // percent
  double eo = 0.0;        // percentage points
  double dp_gap = 0.0;    // percentage points
  long n = 0;
  std::vector<ConfusionCell> cells;  // k * n_groups + a
};

FairnessReport evaluate_predictions(const std::vector<int>& predictions,
                                    const std::vector<int>& targets,
                                    const std::vector<int>& sensitives, int n_classes,
                                    int n_groups, int positive_class = 1);

}  // namespace fairexit
