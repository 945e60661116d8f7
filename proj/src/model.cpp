#include "fairexit/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "fairexit/metrics.hpp"
#include "fairexit/rng.hpp"

namespace fairexit {

void ModelConfig::validate() const {
  if (input_dim < 1) throw std::invalid_argument("ModelConfig: input_dim must be >= 1");
  if (n_blocks < 1) throw std::invalid_argument("ModelConfig: n_blocks must be >= 1");
  if (n_exits != n_blocks)
    throw std::invalid_argument("ModelConfig: n_exits must equal n_blocks (one head per block)");
  if (block_width < 1 || head_hidden < 1 || n_classes < 2)
    throw std::invalid_argument("ModelConfig: widths must be >= 1 and n_classes >= 2");
}

Matrix& MultiExitNet::tensor(const std::string& name) {
  for (auto& t : params)
    if (t.name == name) return t.value;
  throw std::invalid_argument("MultiExitNet: no tensor named '" + name + "'");
}

const Matrix& MultiExitNet::tensor(const std::string& name) const {
  for (const auto& t : params)
    if (t.name == name) return t.value;
  throw std::invalid_argument("MultiExitNet: no tensor named '" + name + "'");
}

bool MultiExitNet::bitwise_same_params(const MultiExitNet& other) const {
  if (params.size() != other.params.size()) return false;
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i].name != other.params[i].name) return false;
    if (!bitwise_equal(params[i].value, other.params[i].value)) return false;
  }
  return true;
}

static Matrix init_weight(int fan_in, int fan_out, std::uint64_t seed) {
  const double s = std::sqrt(6.0 / (fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  Rng rng(seed);
  for (double& v : w.data) v = rng.uniform(-s, s);
  return w;
}

MultiExitNet init(const ModelConfig& config) {
  config.validate();
  MultiExitNet net;
  net.config = config;
  auto push = [&](const std::string& name, Matrix m) {
    net.params.push_back({name, std::move(m)});
  };
  for (int b = 0; b < config.n_blocks; ++b) {
    const int in = b == 0 ? config.input_dim : config.block_width;
    const std::string prefix = "block" + std::to_string(b + 1);
    push(prefix + ".w", init_weight(in, config.block_width, mix_seed(config.seed, prefix + ".w")));
    push(prefix + ".b", Matrix(1, config.block_width, 0.0));
  }
  for (int e = 0; e < config.n_exits; ++e) {
    const std::string prefix = "exit" + std::to_string(e + 1);
    push(prefix + ".h1.w", init_weight(config.block_width, config.head_hidden,
                                       mix_seed(config.seed, prefix + ".h1.w")));
    push(prefix + ".h1.b", Matrix(1, config.head_hidden, 0.0));
    push(prefix + ".h2.w", init_weight(config.head_hidden, config.n_classes,
                                       mix_seed(config.seed, prefix + ".h2.w")));
    push(prefix + ".h2.b", Matrix(1, config.n_classes, 0.0));
  }
  return net;
}

static void require_input_dim(const MultiExitNet& net, const Matrix& x) {
  if (x.cols != net.config.input_dim)
    throw std::invalid_argument("forward: input has " + std::to_string(x.cols) +
                                " features, model expects " +
                                std::to_string(net.config.input_dim));
}

std::vector<Matrix> forward_block_features(const MultiExitNet& net, const Matrix& x) {
  require_input_dim(net, x);
  std::vector<Matrix> feats;
  feats.reserve(net.config.n_blocks);
  Matrix h = x;
  for (int b = 0; b < net.config.n_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b + 1);
    Matrix z = relu(add_rowvec(matmul(h, net.tensor(prefix + ".w")), net.tensor(prefix + ".b")));
    // residual add once widths line up (block 1 changes dimensionality)
    if (net.config.residual && b > 0) z = add(z, h);
    h = std::move(z);
    feats.push_back(h);
  }
  return feats;
}

static Matrix head_logits(const MultiExitNet& net, int exit_idx, const Matrix& feat) {
  const std::string prefix = "exit" + std::to_string(exit_idx + 1);
  Matrix hidden =
      relu(add_rowvec(matmul(feat, net.tensor(prefix + ".h1.w")), net.tensor(prefix + ".h1.b")));
  return add_rowvec(matmul(hidden, net.tensor(prefix + ".h2.w")), net.tensor(prefix + ".h2.b"));
}

BatchTrace forward_all_exits(const MultiExitNet& net, const Matrix& x) {
  BatchTrace trace;
  trace.features = forward_block_features(net, x);
  trace.logits.reserve(net.config.n_exits);
  for (int e = 0; e < net.config.n_exits; ++e) {
    trace.logits.push_back(head_logits(net, e, trace.features[e]));
    trace.probs.push_back(softmax_rows(trace.logits.back()));
    trace.confidence.push_back(rowmax(trace.probs.back()));
  }
  return trace;
}

ExitTrace extract_trace(const BatchTrace& trace, int row) {
  if (row < 0 || row >= trace.rows())
    throw std::invalid_argument("extract_trace: row out of range");
  ExitTrace t;
  const int e = trace.n_exits();
  t.logits.resize(e);
  t.probs.resize(e);
  t.features.resize(e);
  t.confidence.resize(e);
  for (int i = 0; i < e; ++i) {
    const Matrix& z = trace.logits[i];
    const Matrix& p = trace.probs[i];
    const Matrix& f = trace.features[i];
    t.logits[i].assign(&z.data[static_cast<std::size_t>(row) * z.cols],
                       &z.data[static_cast<std::size_t>(row) * z.cols] + z.cols);
    t.probs[i].assign(&p.data[static_cast<std::size_t>(row) * p.cols],
                      &p.data[static_cast<std::size_t>(row) * p.cols] + p.cols);
    t.features[i].assign(&f.data[static_cast<std::size_t>(row) * f.cols],
                         &f.data[static_cast<std::size_t>(row) * f.cols] + f.cols);
    t.confidence[i] = trace.confidence[i][row];
  }
  return t;
}

Matrix forward_final_logits(const MultiExitNet& net, const Matrix& x) {
  const auto feats = forward_block_features(net, x);
  return head_logits(net, net.config.n_exits - 1, feats.back());
}

TapeForward tape_forward(Tape& tape, const MultiExitNet& net, const Matrix& x) {
  require_input_dim(net, x);
  TapeForward out;
  // register every tensor so gradients carry one entry per parameter
  std::vector<Var> vars;
  vars.reserve(net.params.size());
  for (const auto& t : net.params) vars.push_back(tape.parameter(t.name, t.value));
  auto var_of = [&](const std::string& name) -> Var {
    for (std::size_t i = 0; i < net.params.size(); ++i)
      if (net.params[i].name == name) return vars[i];
    throw std::invalid_argument("tape_forward: no tensor named '" + name + "'");
  };

  Var h = tape.constant(x);
  for (int b = 0; b < net.config.n_blocks; ++b) {
    const std::string prefix = "block" + std::to_string(b + 1);
    Var z = relu(affine(h, var_of(prefix + ".w"), var_of(prefix + ".b")));
    if (net.config.residual && b > 0) z = add(z, h);
    h = z;
    out.features.push_back(h);
  }
  for (int e = 0; e < net.config.n_exits; ++e) {
    const std::string prefix = "exit" + std::to_string(e + 1);
    Var hidden = relu(affine(out.features[e], var_of(prefix + ".h1.w"), var_of(prefix + ".h1.b")));
    out.logits.push_back(affine(hidden, var_of(prefix + ".h2.w"), var_of(prefix + ".h2.b")));
  }
  return out;
}

// ---------------------------------------------------------------------------
// checkpoint
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'F', 'X', 'C', 'K', 'P', 'T', '0', '1'};

void write_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

std::uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_string(std::ostream& out, const std::string& s) {
  write_u64(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string read_string(std::istream& in) {
  const std::uint64_t n = read_u64(in);
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  return s;
}

}  // namespace

void save_checkpoint(const MultiExitNet& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open '" + path + "'");
  out.write(kMagic, sizeof kMagic);
  const ModelConfig& c = net.config;
  write_u64(out, static_cast<std::uint64_t>(c.input_dim));
  write_u64(out, static_cast<std::uint64_t>(c.n_blocks));
  write_u64(out, static_cast<std::uint64_t>(c.block_width));
  write_u64(out, static_cast<std::uint64_t>(c.n_exits));
  write_u64(out, static_cast<std::uint64_t>(c.head_hidden));
  write_u64(out, static_cast<std::uint64_t>(c.n_classes));
  write_u64(out, c.residual ? 1 : 0);
  write_u64(out, c.seed);
  write_u64(out, net.params.size());
  for (const auto& t : net.params) {
    write_string(out, t.name);
    write_u64(out, static_cast<std::uint64_t>(t.value.rows));
    write_u64(out, static_cast<std::uint64_t>(t.value.cols));
    out.write(reinterpret_cast<const char*>(t.value.data.data()),
              static_cast<std::streamsize>(t.value.data.size() * sizeof(double)));
  }
  if (!out) throw std::runtime_error("save_checkpoint: write error on '" + path + "'");
}

MultiExitNet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open '" + path + "'");
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0)
    throw std::runtime_error("load_checkpoint: '" + path + "' is not a checkpoint file");
  MultiExitNet net;
  ModelConfig& c = net.config;
  c.input_dim = static_cast<int>(read_u64(in));
  c.n_blocks = static_cast<int>(read_u64(in));
  c.block_width = static_cast<int>(read_u64(in));
  c.n_exits = static_cast<int>(read_u64(in));
  c.head_hidden = static_cast<int>(read_u64(in));
  c.n_classes = static_cast<int>(read_u64(in));
  c.residual = read_u64(in) != 0;
  c.seed = read_u64(in);
  const std::uint64_t n_tensors = read_u64(in);
  for (std::uint64_t i = 0; i < n_tensors; ++i) {
    MultiExitNet::Tensor t;
    t.name = read_string(in);
    const int rows = static_cast<int>(read_u64(in));
    const int cols = static_cast<int>(read_u64(in));
    t.value = Matrix(rows, cols);
    in.read(reinterpret_cast<char*>(t.value.data.data()),
            static_cast<std::streamsize>(t.value.data.size() * sizeof(double)));
    net.params.push_back(std::move(t));
  }
  if (!in) throw std::runtime_error("load_checkpoint: truncated file '" + path + "'");
  c.validate();
  for (const auto& t : net.params) check_finite(t.value, "load_checkpoint");
  return net;
}

// ---------------------------------------------------------------------------
// frozen-backbone probes
// ---------------------------------------------------------------------------

ProbeResult probe_frozen_backbone(const MultiExitNet& net,
                                  const std::vector<LabeledInstance>& train_data,
                                  const std::vector<LabeledInstance>& eval_data,
                                  const ProbeConfig& config, int n_groups) {
  if (train_data.empty() || eval_data.empty())
    throw std::invalid_argument("probe_frozen_backbone: empty data");
  const Matrix x_train = features_matrix(train_data);
  const Matrix x_eval = features_matrix(eval_data);
  const std::vector<int> y_train = targets_of(train_data);
  const std::vector<int> y_eval = targets_of(eval_data);
  const std::vector<int> a_eval = sensitives_of(eval_data);
  const int n_classes = net.config.n_classes;

  // block features are computed once; probe training never touches the net
  const auto feats_train = forward_block_features(net, x_train);
  const auto feats_eval = forward_block_features(net, x_eval);

  ProbeResult result;
  for (int layer = 0; layer < net.config.n_blocks; ++layer) {
    const Matrix& f_train = feats_train[layer];
    const int width = f_train.cols;
    const std::uint64_t head_seed = mix_seed(config.seed, "probe" + std::to_string(layer + 1));
    Matrix w1 = init_weight(width, config.hidden, mix_seed(head_seed, "w1"));
    Matrix b1(1, config.hidden, 0.0);
    Matrix w2 = init_weight(config.hidden, n_classes, mix_seed(head_seed, "w2"));
    Matrix b2(1, n_classes, 0.0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
      const auto batch_idx = batches(f_train.rows, config.batch_size,
                                     mix_seed(head_seed, static_cast<std::uint64_t>(epoch)), true);
      for (const auto& idx : batch_idx) {
        Matrix xb(static_cast<int>(idx.size()), width);
        std::vector<int> yb(idx.size());
        for (std::size_t r = 0; r < idx.size(); ++r) {
          yb[r] = y_train[idx[r]];
          for (int j = 0; j < width; ++j)
            xb(static_cast<int>(r), j) = f_train(idx[r], j);
        }
        Tape tape;
        Var vw1 = tape.parameter("w1", w1);
        Var vb1 = tape.parameter("b1", b1);
        Var vw2 = tape.parameter("w2", w2);
        Var vb2 = tape.parameter("b2", b2);
        Var logits = affine(relu(affine(tape.constant(xb), vw1, vb1)), vw2, vb2);
        Var loss = cross_entropy(logits, yb);
        Gradients g = tape.backward(loss);
        const double lr = config.learning_rate;
        auto step = [&](Matrix& w, const Matrix& gw) {
          for (long i = 0; i < w.size(); ++i) w.data[i] -= lr * gw.data[i];
        };
        step(w1, g.at("w1"));
        step(b1, g.at("b1"));
        step(w2, g.at("w2"));
        step(b2, g.at("b2"));
      }
    }

    Matrix logits_eval =
        add_rowvec(matmul(relu(add_rowvec(matmul(feats_eval[layer], w1), b1)), w2), b2);
    const std::vector<int> preds = argmax_rows(logits_eval);
    ProbeLayerResult row;
    row.layer = layer + 1;
    row.accuracy = accuracy_percent(preds, y_eval);
    row.eo = equalized_odds(preds, y_eval, a_eval, n_classes, n_groups, EoVariant::paper);
    result.layers.push_back(row);
    result.heads.push_back({w1, b1, w2, b2});
    result.eval_predictions.push_back(preds);
  }
  return result;
}

}  // namespace fairexit
