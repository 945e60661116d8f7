#include "fairexit/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace fairexit {

double ConfusionCell::tpr() const {
  if (!tpr_defined()) throw std::runtime_error("ConfusionCell: TPR undefined (no positives)");
  return static_cast<double>(tp) / static_cast<double>(tp + fn);
}

double ConfusionCell::fpr() const {
  if (!fpr_defined()) throw std::runtime_error("ConfusionCell: FPR undefined (no negatives)");
  return static_cast<double>(fp) / static_cast<double>(fp + tn);
}

static void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b)
    throw std::invalid_argument(std::string(what) + ": vector lengths differ (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

std::vector<ConfusionCell> confusion_cells(const std::vector<int>& predictions,
                                           const std::vector<int>& targets,
                                           const std::vector<int>& sensitives, int n_classes,
                                           int n_groups) {
  require_same_length(predictions.size(), targets.size(), "confusion_cells");
  require_same_length(predictions.size(), sensitives.size(), "confusion_cells");
  if (n_classes < 2) throw std::invalid_argument("confusion_cells: need at least 2 classes");
  if (n_groups < 2) throw std::invalid_argument("confusion_cells: need at least 2 groups");

  std::vector<ConfusionCell> cells(static_cast<std::size_t>(n_classes) * n_groups);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const int y = targets[i], p = predictions[i], a = sensitives[i];
    if (y < 0 || y >= n_classes)
      throw std::invalid_argument("confusion_cells: target " + std::to_string(y) +
                                  " outside [0," + std::to_string(n_classes) + ")");
    if (p < 0 || p >= n_classes)
      throw std::invalid_argument("confusion_cells: prediction " + std::to_string(p) +
                                  " outside [0," + std::to_string(n_classes) + ")");
    if (a < 0 || a >= n_groups)
      throw std::invalid_argument("confusion_cells: group " + std::to_string(a) + " outside [0," +
                                  std::to_string(n_groups) + ")");
    for (int k = 0; k < n_classes; ++k) {
      ConfusionCell& c = cells[static_cast<std::size_t>(k) * n_groups + a];
      const bool actual = (y == k);
      const bool predicted = (p == k);
      if (actual && predicted)
        ++c.tp;
      else if (actual && !predicted)
        ++c.fn;
      else if (!actual && predicted)
        ++c.fp;
      else
        ++c.tn;
    }
  }
  return cells;
}

static double rate_or_throw(const ConfusionCell& c, bool want_tpr, int k, int a) {
  const bool defined = want_tpr ? c.tpr_defined() : c.fpr_defined();
  if (!defined)
    throw std::runtime_error(std::string("equalized_odds: ") + (want_tpr ? "TPR" : "FPR") +
                             " undefined, empty (class=" + std::to_string(k) +
                             ", group=" + std::to_string(a) + ") cell");
  return want_tpr ? c.tpr() : c.fpr();
}

// Binary-pair score between groups g0 and g1 from precomputed cells.
static double eo_pair(const std::vector<ConfusionCell>& cells, int n_classes, int n_groups, int g0,
                      int g1, EoVariant variant) {
  double score = 0.0;
  for (int k = 0; k < n_classes; ++k) {
    const ConfusionCell& c0 = cells[static_cast<std::size_t>(k) * n_groups + g0];
    const ConfusionCell& c1 = cells[static_cast<std::size_t>(k) * n_groups + g1];
    const double d_tpr = rate_or_throw(c1, true, k, g1) - rate_or_throw(c0, true, k, g0);
    const double d_fpr = rate_or_throw(c1, false, k, g1) - rate_or_throw(c0, false, k, g0);
    if (variant == EoVariant::paper)
      score += std::fabs(d_tpr + d_fpr);
    else
      score += std::fabs(d_tpr) + std::fabs(d_fpr);
  }
  return score * 100.0;
}

double equalized_odds(const std::vector<int>& predictions, const std::vector<int>& targets,
                      const std::vector<int>& sensitives, int n_classes, int n_groups,
                      EoVariant variant) {
  const auto cells = confusion_cells(predictions, targets, sensitives, n_classes, n_groups);
  double worst = 0.0;
  for (int g0 = 0; g0 < n_groups; ++g0)
    for (int g1 = g0 + 1; g1 < n_groups; ++g1)
      worst = std::max(worst, eo_pair(cells, n_classes, n_groups, g0, g1, variant));
  return worst;
}

double demographic_parity_gap(const std::vector<int>& predictions,
                              const std::vector<int>& sensitives, int positive_class) {
  require_same_length(predictions.size(), sensitives.size(), "demographic_parity_gap");
  if (predictions.empty()) throw std::invalid_argument("demographic_parity_gap: empty input");
  int n_groups = 0;
  for (int a : sensitives) {
    if (a < 0) throw std::invalid_argument("demographic_parity_gap: negative group label");
    n_groups = std::max(n_groups, a + 1);
  }
  if (n_groups < 2)
    throw std::runtime_error("demographic_parity_gap: need at least two nonempty groups");
  std::vector<long> total(n_groups, 0), positive(n_groups, 0);
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    ++total[sensitives[i]];
    if (predictions[i] == positive_class) ++positive[sensitives[i]];
  }
  std::vector<double> rate(n_groups);
  for (int a = 0; a < n_groups; ++a) {
    if (total[a] == 0)
      throw std::runtime_error("demographic_parity_gap: empty group " + std::to_string(a));
    rate[a] = static_cast<double>(positive[a]) / static_cast<double>(total[a]);
  }
  double gap = 0.0;
  for (int g0 = 0; g0 < n_groups; ++g0)
    for (int g1 = g0 + 1; g1 < n_groups; ++g1) gap = std::max(gap, std::fabs(rate[g0] - rate[g1]));
  return gap * 100.0;
}

double accuracy_percent(const std::vector<int>& predictions, const std::vector<int>& targets) {
  require_same_length(predictions.size(), targets.size(), "accuracy_percent");
  if (predictions.empty()) throw std::invalid_argument("accuracy_percent: empty input");
  long correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == targets[i]) ++correct;
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

FairnessReport evaluate_predictions(const std::vector<int>& predictions,
                                    const std::vector<int>& targets,
                                    const std::vector<int>& sensitives, int n_classes,
                                    int n_groups, int positive_class) {
  FairnessReport r;
  r.n = static_cast<long>(predictions.size());
  r.accuracy = accuracy_percent(predictions, targets);
  r.cells = confusion_cells(predictions, targets, sensitives, n_classes, n_groups);
  r.eo = equalized_odds(predictions, targets, sensitives, n_classes, n_groups, EoVariant::paper);
  r.dp_gap = demographic_parity_gap(predictions, sensitives, positive_class);
  return r;
}

}  // namespace fairexit
