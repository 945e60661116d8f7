#include "fairexit/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "fairexit/rng.hpp"

namespace fairexit {

void DatasetSpec::validate() const {
  if (n_train <= 0 || n_val <= 0 || n_test <= 0)
    throw std::invalid_argument("DatasetSpec: split counts must be positive");
  if (d < 2) throw std::invalid_argument("DatasetSpec: need at least 2 feature channels");
  if (n_classes < 2) throw std::invalid_argument("DatasetSpec: need at least 2 classes");
  if (n_groups < 2) throw std::invalid_argument("DatasetSpec: need at least 2 groups");
  if (bias_corr < 0.0 || bias_corr > 1.0)
    throw std::invalid_argument("DatasetSpec: bias_corr must lie in [0,1]");
  if (imbalance_level < 1.0)
    throw std::invalid_argument("DatasetSpec: imbalance_level must be >= 1");
  if (!(noise_sigma > 0.0)) throw std::invalid_argument("DatasetSpec: noise_sigma must be positive");
}

// Joint cell weights over (y, a); see the header for the construction.
static std::vector<double> cell_weights(const DatasetSpec& s) {
  std::vector<double> w(static_cast<std::size_t>(s.n_classes) * s.n_groups);
  double total = 0.0;
  for (int y = 0; y < s.n_classes; ++y)
    for (int a = 0; a < s.n_groups; ++a) {
      const bool aligned = (y == a % s.n_classes);
      const double align =
          (1.0 + s.bias_corr * (s.n_classes * (aligned ? 1.0 : 0.0) - 1.0)) / s.n_classes;
      const double imb = (a == y % s.n_groups) ? s.imbalance_level : 1.0;
      const double v = align * imb;
      w[static_cast<std::size_t>(y) * s.n_groups + a] = v;
      total += v;
    }
  if (!(total > 0.0)) throw std::runtime_error("generate_synthetic: degenerate cell weights");
  for (double& v : w) v /= total;
  return w;
}

static std::vector<LabeledInstance> draw_instances(const DatasetSpec& s,
                                                   const std::vector<double>& cell_p,
                                                   std::uint64_t seed) {
  Rng rng(seed);
  const int n = s.n_total();
  const double mean_dir = 1.0 / std::sqrt(static_cast<double>(s.d - 1));
  std::vector<LabeledInstance> out(n);
  for (int i = 0; i < n; ++i) {
    // cell draw by cumulative weight
    const double u = rng.uniform01();
    double acc = 0.0;
    int cell = static_cast<int>(cell_p.size()) - 1;
    for (std::size_t c = 0; c < cell_p.size(); ++c) {
      acc += cell_p[c];
      if (u < acc) {
        cell = static_cast<int>(c);
        break;
      }
    }
    const int y = cell / s.n_groups;
    const int a = cell % s.n_groups;
    LabeledInstance& inst = out[i];
    inst.target = y;
    inst.sensitive = a;
    inst.features.resize(s.d);
    const double class_mean =
        (y - (s.n_classes - 1) / 2.0) * s.class_separation * mean_dir;
    for (int f = 0; f + 1 < s.d; ++f)
      inst.features[f] = class_mean + s.noise_sigma * rng.gauss();
    inst.features[s.d - 1] = a * s.leak_strength + s.noise_sigma * rng.gauss();
  }
  return out;
}

// Stratified split: per-cell largest-remainder quotas with a minimum of one
// instance per split, then leftovers assigned to whichever split still needs
// the most. Exact split sizes, disjoint and exhaustive.
static Split stratified_split(const DatasetSpec& s, std::vector<LabeledInstance> all) {
  const int n = s.n_total();
  const int n_cells = s.n_classes * s.n_groups;
  std::vector<std::vector<int>> members(n_cells);
  for (int i = 0; i < n; ++i)
    members[all[i].target * s.n_groups + all[i].sensitive].push_back(i);

  const double frac[3] = {static_cast<double>(s.n_train) / n, static_cast<double>(s.n_val) / n,
                          static_cast<double>(s.n_test) / n};
  const int want[3] = {s.n_train, s.n_val, s.n_test};

  std::vector<std::array<int, 3>> quota(n_cells, {0, 0, 0});
  int assigned[3] = {0, 0, 0};
  for (int c = 0; c < n_cells; ++c) {
    const int m = static_cast<int>(members[c].size());
    int used = 0;
    for (int sidx = 0; sidx < 3; ++sidx) {
      quota[c][sidx] = std::max(1, static_cast<int>(std::floor(m * frac[sidx])));
      used += quota[c][sidx];
    }
    // m >= 3 guaranteed by the retry loop; shed any floor+min overshoot.
    while (used > m) {
      int big = 0;
      for (int sidx = 1; sidx < 3; ++sidx)
        if (quota[c][sidx] > quota[c][big]) big = sidx;
      --quota[c][big];
      --used;
    }
    for (int sidx = 0; sidx < 3; ++sidx) assigned[sidx] += quota[c][sidx];
  }
  // distribute leftovers to exact totals
  for (int c = 0; c < n_cells; ++c) {
    int leftovers = static_cast<int>(members[c].size()) - quota[c][0] - quota[c][1] - quota[c][2];
    while (leftovers-- > 0) {
      int best = 0;
      for (int sidx = 1; sidx < 3; ++sidx)
        if (want[sidx] - assigned[sidx] > want[best] - assigned[best]) best = sidx;
      ++quota[c][best];
      ++assigned[best];
    }
  }
  for (int sidx = 0; sidx < 3; ++sidx)
    if (assigned[sidx] != want[sidx])
      throw std::runtime_error("generate_synthetic: internal split accounting error");

  Split split;
  split.train.reserve(s.n_train);
  split.val.reserve(s.n_val);
  split.test.reserve(s.n_test);
  for (int c = 0; c < n_cells; ++c) {
    int pos = 0;
    for (int sidx = 0; sidx < 3; ++sidx) {
      std::vector<LabeledInstance>* dst =
          sidx == 0 ? &split.train : (sidx == 1 ? &split.val : &split.test);
      for (int k = 0; k < quota[c][sidx]; ++k) dst->push_back(all[members[c][pos++]]);
    }
  }
  return split;
}

Split generate_synthetic(const DatasetSpec& spec) {
  spec.validate();
  const auto cell_p = cell_weights(spec);
  constexpr int kMaxRetries = 20;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::uint64_t draw_seed =
        attempt == 0 ? mix_seed(spec.seed, "synthetic")
                     : mix_seed(mix_seed(spec.seed, "synthetic"), static_cast<std::uint64_t>(attempt));
    auto all = draw_instances(spec, cell_p, draw_seed);
    // every (y, a) cell needs one member per split
    std::vector<int> counts(static_cast<std::size_t>(spec.n_classes) * spec.n_groups, 0);
    for (const auto& inst : all) ++counts[inst.target * spec.n_groups + inst.sensitive];
    bool ok = true;
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (cell_p[c] == 0.0) {
        // deterministic coupling (rho = 1) legitimately empties cells
        if (counts[c] != 0) ok = false;
        continue;
      }
      if (counts[c] < 3) ok = false;
    }
    if (ok) {
      // Cells that are impossible under the joint must be dropped from the
      // stratification bookkeeping; stratified_split handles empty member
      // lists naturally.
      return stratified_split(spec, std::move(all));
    }
  }
  throw std::runtime_error(
      "generate_synthetic: a (target, group) cell stayed too small after " +
      std::to_string(kMaxRetries) + " attempts; increase counts or reduce skew");
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

void save_csv(const std::vector<LabeledInstance>& data, const std::string& path) {
  if (data.empty()) throw std::invalid_argument("save_csv: empty dataset");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_csv: cannot open '" + path + "' for writing");
  const int d = static_cast<int>(data.front().features.size());
  for (int f = 0; f < d; ++f) out << "f" << f << ",";
  out << "target,sensitive\n";
  char buf[40];
  for (const auto& inst : data) {
    if (static_cast<int>(inst.features.size()) != d)
      throw std::invalid_argument("save_csv: inconsistent feature dimensions");
    for (double v : inst.features) {
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << buf << ",";
    }
    out << inst.target << "," << inst.sensitive << "\n";
  }
  if (!out) throw std::runtime_error("save_csv: write error on '" + path + "'");
}

static std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      out.push_back(line.substr(start));
      break;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return out;
}

static double parse_double(const std::string& s, int row, const std::string& col) {
  double v = 0.0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end)
    throw std::runtime_error("load_csv: non-numeric value '" + s + "' at row " +
                             std::to_string(row) + ", column " + col);
  if (!std::isfinite(v))
    throw std::runtime_error("load_csv: non-finite value at row " + std::to_string(row) +
                             ", column " + col);
  return v;
}

static int parse_int(const std::string& s, int row, const std::string& col) {
  int v = 0;
  const char* begin = s.data();
  const char* end = begin + s.size();
  auto [p, ec] = std::from_chars(begin, end, v);
  if (ec != std::errc() || p != end)
    throw std::runtime_error("load_csv: non-integer value '" + s + "' at row " +
                             std::to_string(row) + ", column " + col);
  return v;
}

std::vector<LabeledInstance> load_csv(const std::string& path, int n_classes, int n_groups) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("load_csv: '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const auto header = split_line(line);
  const int ncols = static_cast<int>(header.size());
  if (ncols < 3 || header[ncols - 2] != "target" || header[ncols - 1] != "sensitive")
    throw std::runtime_error("load_csv: header must end with ',target,sensitive'");
  const int d = ncols - 2;
  for (int f = 0; f < d; ++f)
    if (header[f] != "f" + std::to_string(f))
      throw std::runtime_error("load_csv: missing column f" + std::to_string(f) +
                               " (got '" + header[f] + "')");

  std::vector<LabeledInstance> out;
  int row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (static_cast<int>(fields.size()) != ncols)
      throw std::runtime_error("load_csv: row " + std::to_string(row) + " has " +
                               std::to_string(fields.size()) + " fields, expected " +
                               std::to_string(ncols));
    LabeledInstance inst;
    inst.features.resize(d);
    for (int f = 0; f < d; ++f)
      inst.features[f] = parse_double(fields[f], row, "f" + std::to_string(f));
    inst.target = parse_int(fields[d], row, "target");
    inst.sensitive = parse_int(fields[d + 1], row, "sensitive");
    if (inst.target < 0 || (n_classes > 0 && inst.target >= n_classes))
      throw std::runtime_error("load_csv: target " + std::to_string(inst.target) +
                               " out of range at row " + std::to_string(row));
    if (inst.sensitive < 0 || (n_groups > 0 && inst.sensitive >= n_groups))
      throw std::runtime_error("load_csv: sensitive " + std::to_string(inst.sensitive) +
                               " out of range at row " + std::to_string(row));
    out.push_back(std::move(inst));
  }
  return out;
}

std::vector<std::vector<int>> batches(int n, int batch_size, std::uint64_t seed, bool shuffle) {
  if (batch_size < 1) throw std::invalid_argument("batches: batch_size must be >= 1");
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  if (shuffle) {
    Rng rng(mix_seed(seed, "batches"));
    rng.shuffle(order);
  }
  std::vector<std::vector<int>> out;
  for (int start = 0; start < n; start += batch_size) {
    const int end = std::min(n, start + batch_size);
    out.emplace_back(order.begin() + start, order.begin() + end);
  }
  return out;
}

Matrix features_matrix(const std::vector<LabeledInstance>& data) {
  if (data.empty()) return Matrix();
  const int d = static_cast<int>(data.front().features.size());
  Matrix x(static_cast<int>(data.size()), d);
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (static_cast<int>(data[i].features.size()) != d)
      throw std::invalid_argument("features_matrix: inconsistent feature dimensions");
    for (int j = 0; j < d; ++j) x(static_cast<int>(i), j) = data[i].features[j];
  }
  return x;
}

std::vector<int> targets_of(const std::vector<LabeledInstance>& data) {
  std::vector<int> y(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) y[i] = data[i].target;
  return y;
}

std::vector<int> sensitives_of(const std::vector<LabeledInstance>& data) {
  std::vector<int> a(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) a[i] = data[i].sensitive;
  return a;
}

std::vector<LabeledInstance> subset(const std::vector<LabeledInstance>& data,
                                    const std::vector<int>& idx) {
  std::vector<LabeledInstance> out;
  out.reserve(idx.size());
  for (int i : idx) out.push_back(data.at(i));
  return out;
}

static int max_label(const Split& split, bool target) {
  int m = -1;
  for (const auto* part : {&split.train, &split.val, &split.test})
    for (const auto& inst : *part) m = std::max(m, target ? inst.target : inst.sensitive);
  return m + 1;
}

int infer_classes(const Split& split) { return max_label(split, true); }
int infer_groups(const Split& split) { return max_label(split, false); }

}  // namespace fairexit
