#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fairexit/matrix.hpp"

namespace fairexit {

// One classification instance: features x, target class y, sensitive group a.
struct LabeledInstance {
  std::vector<double> features;
  int target = 0;
  int sensitive = 0;
};

struct DatasetSpec {
  int n_train = 7000;
  int n_val = 1000;
  int n_test = 2000;
  int d = 16;  // feature dimension; the last channel carries the leak
  int n_classes = 2;
  int n_groups = 2;
  double bias_corr = 0.0;        // rho: target/sensitive coupling in [0,1]
  double leak_strength = 0.0;    // weight of the sensitive-signal channel
  double imbalance_level = 1.0;  // within-class group ratio (paper's bias level)
  double class_separation = 1.0;
  double noise_sigma = 1.0;
  std::uint64_t seed = 1;

  int n_total() const { return n_train + n_val + n_test; }
  void validate() const;
};

struct Split {
  std::vector<LabeledInstance> train, val, test;
};

// Synthetic biased data. The generative process, fixed and deterministic
// given the seed:
//
//   1. Each instance's (y, a) cell is drawn from the joint
//        P(y, a)  propto  align(y, a) * imb(y, a)
//      where align(y,a) = (1 + rho * (N*[y == a mod N] - 1)) / N gives
//      P(y = parity-aligned class | a) = (1+rho)/2 for binary targets and
//      uniform y at rho = 0, and imb(y,a) multiplies the parity-favoured
//      group (a == y mod M) by imbalance_level, producing the L:1
//      within-class group ratio of the data-imbalance setting.
//   2. Features on channels 0..d-2: class mean plus isotropic gaussian
//      noise. Class means sit on a shared unit direction, adjacent classes
//      separated by class_separation.
//   3. Channel d-1 carries the leak: a * leak_strength plus the same noise.
//
// Splitting is stratified per (y, a) cell so every cell is nonempty in every
// split; if generation leaves a cell with fewer than 3 members the draw is
// retried with a re-derived seed (bounded retries, then error).
Split generate_synthetic(const DatasetSpec& spec);

// CSV schema: header "f0,...,f{d-1},target,sensitive"; UTF-8, '.' decimal.
// Doubles are written with 17 significant digits so a load reproduces the
// generated values bitwise. n_classes/n_groups > 0 enable range checks.
void save_csv(const std::vector<LabeledInstance>& data, const std::string& path);
std::vector<LabeledInstance> load_csv(const std::string& path, int n_classes = 0,
                                      int n_groups = 0);

// Deterministic batch index sequence; the final partial batch is kept.
std::vector<std::vector<int>> batches(int n, int batch_size, std::uint64_t seed, bool shuffle);

// ---- converters ------------------------------------------------------------

Matrix features_matrix(const std::vector<LabeledInstance>& data);
std::vector<int> targets_of(const std::vector<LabeledInstance>& data);
std::vector<int> sensitives_of(const std::vector<LabeledInstance>& data);
std::vector<LabeledInstance> subset(const std::vector<LabeledInstance>& data,
                                    const std::vector<int>& idx);

int infer_classes(const Split& split);
int infer_groups(const Split& split);

}  // namespace fairexit
