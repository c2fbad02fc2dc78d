#pragma once

// Dense feed-forward classifier with hand-written forward/backward passes and
// Adam. Weight matrix W_l has one column per neuron of layer l (rows = width of
// layer l-1), so the pre-activation of a batch X is Z = X W + b.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "l1o/common.hpp"
#include "l1o/regularizers.hpp"

namespace l1o {

enum class Activation { relu, sigmoid, softmax };

inline std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
  }
  return "relu";
}

struct MlpArchitecture {
  int input_dim = 1;
  std::vector<int> hidden_sizes{1};
  int n_classes = 2;

  Activation hidden_activation() const { return Activation::relu; }
  Activation output_activation() const { return n_classes == 2 ? Activation::sigmoid : Activation::softmax; }
  int output_width() const { return n_classes == 2 ? 1 : n_classes; }

  /// Widths of every layer including the input layer.
  std::vector<int> widths() const {
    std::vector<int> w{input_dim};
    w.insert(w.end(), hidden_sizes.begin(), hidden_sizes.end());
    w.push_back(output_width());
    return w;
  }

  std::size_t n_layers() const { return hidden_sizes.size() + 1; }

  void validate() const {
    if (input_dim < 1) throw ConfigError("input_dim must be >= 1");
    if (hidden_sizes.empty()) throw ConfigError("at least one hidden layer is required");
    for (int h : hidden_sizes) {
      if (h < 1) throw ConfigError("hidden layer sizes must be >= 1");
    }
    if (n_classes < 2) throw ConfigError("n_classes must be >= 2");
  }

  bool operator==(const MlpArchitecture&) const = default;
};

struct TrainConfig {
  double learning_rate = 0.001;
  int batch_size = 32;
  int epochs = 10;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 0) throw ConfigError("epochs must be >= 0");
    if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must be in (0, 1)");
    if (!(adam_beta2 > 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must be in (0, 1)");
    if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be > 0");
  }
};

struct MlpModel {
  MlpArchitecture arch;
  Weights weights;
  std::vector<RowVector> biases;
  // Recorded by train(); defaults for a freshly initialized model.
  TrainConfig train_config;
  RegularizerSpec regularizer;

  void validate() const {
    arch.validate();
    const auto w = arch.widths();
    if (weights.size() != arch.n_layers() || biases.size() != arch.n_layers()) {
      throw ShapeError("model layer count does not match architecture");
    }
    for (std::size_t l = 0; l < weights.size(); ++l) {
      if (weights[l].rows() != w[l] || weights[l].cols() != w[l + 1] || biases[l].size() != w[l + 1]) {
        throw ShapeError("layer " + std::to_string(l) + " has inconsistent shape");
      }
      if (!weights[l].allFinite() || !biases[l].allFinite()) {
        throw InputError("layer " + std::to_string(l) + " holds non-finite parameters");
      }
    }
  }
};

struct Gradients {
  Weights weights;
  std::vector<RowVector> biases;
};

struct EpochRecord {
  double data_loss = 0.0;
  double penalty = 0.0;
  double objective = 0.0;
  double train_accuracy = 0.0;
};

using TrainHistory = std::vector<EpochRecord>;

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
inline MlpModel init_model(const MlpArchitecture& arch, std::uint64_t seed) {
  arch.validate();
  MlpModel m;
  m.arch = arch;
  m.train_config.seed = seed;
  Rng rng(seed);
  const auto w = arch.widths();
  for (std::size_t l = 0; l + 1 < w.size(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(w[l] + w[l + 1]));
    Matrix wl(w[l], w[l + 1]);
    // Column-major fill order is part of the determinism contract.
    for (Eigen::Index c = 0; c < wl.cols(); ++c) {
      for (Eigen::Index r = 0; r < wl.rows(); ++r) wl(r, c) = rng.uniform(-limit, limit);
    }
    m.weights.push_back(std::move(wl));
    m.biases.push_back(RowVector::Zero(w[l + 1]));
  }
  return m;
}

struct ForwardCache {
  /// activations[0] = X, activations[l] = output of layer l (last = probs).
  std::vector<Matrix> activations;
  /// Pre-activations Z_l for l = 1..L.
  std::vector<Matrix> pre;

  const Matrix& probs() const { return activations.back(); }
};

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

inline ForwardCache forward(const MlpModel& model, const Matrix& x) {
  if (x.cols() != model.arch.input_dim) {
    throw ShapeError("input has " + std::to_string(x.cols()) + " columns, model expects " +
                     std::to_string(model.arch.input_dim));
  }
  ForwardCache cache;
  cache.activations.reserve(model.weights.size() + 1);
  cache.pre.reserve(model.weights.size());
  cache.activations.push_back(x);
  const std::size_t n_layers = model.weights.size();
  for (std::size_t l = 0; l < n_layers; ++l) {
    Matrix z = cache.activations.back() * model.weights[l];
    z.rowwise() += model.biases[l];
    Matrix a;
    if (l + 1 < n_layers) {
      a = z.cwiseMax(0.0);
    } else if (model.arch.output_activation() == Activation::sigmoid) {
      a = z.unaryExpr([](double v) { return sigmoid(v); });
    } else {
      a.resize(z.rows(), z.cols());
      for (Eigen::Index i = 0; i < z.rows(); ++i) {
        const double mx = z.row(i).maxCoeff();
        RowVector e = (z.row(i).array() - mx).exp();
        a.row(i) = e / e.sum();
      }
    }
    cache.pre.push_back(std::move(z));
    cache.activations.push_back(std::move(a));
  }
  return cache;
}

/// Class-probability matrix (N x n_classes) from raw network output; the
/// binary single column is expanded to [1-p, p].
inline Matrix class_probabilities(const Matrix& out, int n_classes) {
  if (n_classes != 2) return out;
  Matrix p(out.rows(), 2);
  p.col(0) = (1.0 - out.col(0).array()).matrix();
  p.col(1) = out.col(0);
  return p;
}

inline Matrix predict_proba(const MlpModel& model, const Matrix& x) {
  return class_probabilities(forward(model, x).probs(), model.arch.n_classes);
}

/// Hard class decision: p > 0.5 for binary, argmax (lowest index on ties) otherwise.
inline Labels argmax_classes(const Matrix& out, int n_classes) {
  Labels y(static_cast<std::size_t>(out.rows()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    if (n_classes == 2) {
      y[i] = out(i, 0) > 0.5 ? 1 : 0;
    } else {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < out.cols(); ++c) {
        if (out(i, c) > out(i, best)) best = c;
      }
      y[i] = static_cast<int>(best);
    }
  }
  return y;
}

inline Labels predict(const MlpModel& model, const Matrix& x) {
  return argmax_classes(forward(model, x).probs(), model.arch.n_classes);
}

inline constexpr double kProbClamp = 1e-12;

inline void check_labels(const Labels& y, int n_classes, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(y.size()) != rows) {
    throw ShapeError("label count " + std::to_string(y.size()) + " does not match " + std::to_string(rows) +
                     " rows");
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0 || y[i] >= n_classes) {
      throw InputError("label " + std::to_string(y[i]) + " at row " + std::to_string(i) + " outside [0, " +
                       std::to_string(n_classes) + ")");
    }
  }
}

/// Mean binary/categorical cross-entropy. A single-column `probs` is read as
/// P(class 1) of a binary problem.
inline double data_loss(const Matrix& probs, const Labels& y) {
  const bool binary = probs.cols() == 1;
  check_labels(y, binary ? 2 : static_cast<int>(probs.cols()), probs.rows());
  if (y.empty()) throw InputError("data_loss: empty batch");
  auto clamp = [](double p) { return std::clamp(p, kProbClamp, 1.0 - kProbClamp); };
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (binary) {
      const double p = clamp(probs(r, 0));
      s -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
    } else {
      s -= std::log(clamp(probs(r, y[i])));
    }
  }
  return s / static_cast<double>(y.size());
}

/// Gradient of mean data loss plus penalty(weights, reg), using a forward cache
/// computed on the same batch.
inline Gradients backward(const MlpModel& model, const ForwardCache& cache, const Labels& y,
                          const RegularizerSpec& reg) {
  const Matrix& out = cache.probs();
  check_labels(y, model.arch.n_classes, out.rows());
  const double n = static_cast<double>(out.rows());
  // Sigmoid+BCE and softmax+CE share dL/dZ = (p - onehot(y)) / N.
  Matrix delta = out;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    if (out.cols() == 1) {
      delta(r, 0) -= y[i];
    } else {
      delta(r, y[i]) -= 1.0;
    }
  }
  delta /= n;

  const std::size_t n_layers = model.weights.size();
  Gradients g;
  g.weights.resize(n_layers);
  g.biases.resize(n_layers);
  for (std::size_t l = n_layers; l-- > 0;) {
    g.weights[l] = cache.activations[l].transpose() * delta;
    g.biases[l] = delta.colwise().sum();
    if (l > 0) {
      Matrix back = delta * model.weights[l].transpose();
      // ReLU derivative, with 0 at the kink.
      delta = back.cwiseProduct((cache.pre[l - 1].array() > 0.0).cast<double>().matrix());
    }
  }
  if (reg.active()) {
    const Weights pg = penalty_subgradient(model.weights, reg);
    for (std::size_t l = 0; l < n_layers; ++l) g.weights[l] += pg[l];
  }
  return g;
}

inline Gradients backward(const MlpModel& model, const Matrix& x, const Labels& y, const RegularizerSpec& reg) {
  return backward(model, forward(model, x), y, reg);
}

inline double accuracy(const Labels& a, const Labels& b) {
  if (a.size() != b.size()) throw ShapeError("accuracy: length mismatch");
  if (a.empty()) throw InputError("accuracy: empty input");
  std::size_t hit = 0;
  for (std::size_t i = 0; i < a.size(); ++i) hit += a[i] == b[i];
  return static_cast<double>(hit) / static_cast<double>(a.size());
}

namespace detail {

struct AdamState {
  Weights m_w, v_w;
  std::vector<RowVector> m_b, v_b;
  long step = 0;

  explicit AdamState(const MlpModel& model) {
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      m_w.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
      v_w.push_back(m_w.back());
      m_b.push_back(RowVector::Zero(model.biases[l].size()));
      v_b.push_back(m_b.back());
    }
  }

  template <typename Param, typename Grad>
  static void update(Param& p, const Grad& g, Param& m, Param& v, double lr, const TrainConfig& cfg, double bc1,
                     double bc2) {
    m = cfg.adam_beta1 * m + (1.0 - cfg.adam_beta1) * g;
    v = cfg.adam_beta2 * v + (1.0 - cfg.adam_beta2) * g.cwiseProduct(g);
    p.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.adam_epsilon);
  }

  void apply(MlpModel& model, const Gradients& g, const TrainConfig& cfg) {
    ++step;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(step));
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      update(model.weights[l], g.weights[l], m_w[l], v_w[l], cfg.learning_rate, cfg, bc1, bc2);
      update(model.biases[l], g.biases[l], m_b[l], v_b[l], cfg.learning_rate, cfg, bc1, bc2);
    }
  }
};

}  // namespace detail

struct TrainResult {
  MlpModel model;
  TrainHistory history;
};

/// Mini-batch Adam starting from `start`. Shuffling draws from a stream
/// derived from cfg.seed; the last partial batch is kept.
inline TrainResult train_from(MlpModel start, const Matrix& x, const Labels& y, const TrainConfig& cfg,
                              const RegularizerSpec& reg) {
  cfg.validate();
  reg.validate();
  start.validate();
  if (x.rows() < 1) throw InputError("train: empty training set");
  if (x.cols() != start.arch.input_dim) throw ShapeError("train: feature count does not match architecture");
  check_labels(y, start.arch.n_classes, x.rows());

  MlpModel model = std::move(start);
  model.train_config = cfg;
  model.regularizer = reg;
  detail::AdamState adam(model);
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
  auto order = iota_indices(static_cast<std::size_t>(x.rows()));
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  TrainHistory history;
  history.reserve(static_cast<std::size_t>(cfg.epochs));

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0, pen_sum = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start_row = 0; start_row < order.size(); start_row += batch) {
      const std::size_t end = std::min(order.size(), start_row + batch);
      std::vector<std::size_t> rows(order.begin() + static_cast<std::ptrdiff_t>(start_row),
                                    order.begin() + static_cast<std::ptrdiff_t>(end));
      const Matrix xb = take_rows(x, rows);
      const Labels yb = take(y, rows);
      const ForwardCache cache = forward(model, xb);
      const double loss = data_loss(cache.probs(), yb);
      const double pen = reg.active() ? penalty(model.weights, reg) : 0.0;
      if (!std::isfinite(loss) || !std::isfinite(pen)) {
        throw DivergenceError(epoch, "non-finite objective (loss " + format_double(loss) + ", penalty " +
                                         format_double(pen) + ")");
      }
      adam.apply(model, backward(model, cache, yb, reg), cfg);
      loss_sum += loss;
      pen_sum += pen;
      ++n_batches;
    }
    for (std::size_t l = 0; l < model.weights.size(); ++l) {
      if (!model.weights[l].allFinite() || !model.biases[l].allFinite()) {
        throw DivergenceError(epoch, "non-finite parameters in layer " + std::to_string(l));
      }
    }
    EpochRecord rec;
    rec.data_loss = loss_sum / static_cast<double>(n_batches);
    rec.penalty = pen_sum / static_cast<double>(n_batches);
    rec.objective = rec.data_loss + rec.penalty;
    rec.train_accuracy = accuracy(predict(model, x), y);
    history.push_back(rec);
  }
  return {std::move(model), std::move(history)};
}

inline TrainResult train(const Matrix& x, const Labels& y, const MlpArchitecture& arch, const TrainConfig& cfg,
                         const RegularizerSpec& reg) {
  return train_from(init_model(arch, cfg.seed), x, y, cfg, reg);
}

// Model documents.

inline void to_json(nlohmann::json& j, const MlpArchitecture& a) {
  j = nlohmann::json{{"input_dim", a.input_dim},
                     {"hidden_sizes", a.hidden_sizes},
                     {"n_classes", a.n_classes},
                     {"hidden_activation", std::string(to_string(a.hidden_activation()))},
                     {"output_activation", std::string(to_string(a.output_activation()))}};
}

inline void from_json(const nlohmann::json& j, MlpArchitecture& a) {
  a.input_dim = j.at("input_dim").get<int>();
  a.hidden_sizes = j.at("hidden_sizes").get<std::vector<int>>();
  a.n_classes = j.at("n_classes").get<int>();
  a.validate();
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"learning_rate", c.learning_rate}, {"batch_size", c.batch_size},
                     {"epochs", c.epochs},               {"seed", c.seed},
                     {"adam_beta1", c.adam_beta1},       {"adam_beta2", c.adam_beta2},
                     {"adam_epsilon", c.adam_epsilon}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  c = TrainConfig{};
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.epochs = j.value("epochs", c.epochs);
  c.seed = j.value("seed", c.seed);
  c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
  c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.validate();
}

inline constexpr int kModelFormatVersion = 1;

inline nlohmann::json model_to_json(const MlpModel& m) {
  nlohmann::json layers = nlohmann::json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    const Matrix& w = m.weights[l];
    std::vector<double> flat;
    flat.reserve(static_cast<std::size_t>(w.size()));
    for (Eigen::Index r = 0; r < w.rows(); ++r) {
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    }
    std::vector<double> bias(m.biases[l].data(), m.biases[l].data() + m.biases[l].size());
    layers.push_back({{"rows", w.rows()}, {"cols", w.cols()}, {"weights", flat}, {"bias", bias}});
  }
  return {{"format", "l1o-mlp"},
          {"version", kModelFormatVersion},
          {"architecture", m.arch},
          {"layers", layers},
          {"train_config", m.train_config},
          {"regularizer", m.regularizer}};
}

inline MlpModel model_from_json(const nlohmann::json& j) {
  if (j.value("format", std::string()) != "l1o-mlp") throw SchemaError("not an l1o-mlp document");
  if (j.value("version", 0) != kModelFormatVersion) throw SchemaError("unsupported model document version");
  MlpModel m;
  m.arch = j.at("architecture").get<MlpArchitecture>();
  for (const auto& layer : j.at("layers")) {
    const auto rows = layer.at("rows").get<Eigen::Index>();
    const auto cols = layer.at("cols").get<Eigen::Index>();
    const auto flat = layer.at("weights").get<std::vector<double>>();
    const auto bias = layer.at("bias").get<std::vector<double>>();
    if (static_cast<Eigen::Index>(flat.size()) != rows * cols || static_cast<Eigen::Index>(bias.size()) != cols) {
      throw SchemaError("layer payload does not match its declared shape");
    }
    Matrix w(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
      for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = flat[static_cast<std::size_t>(r * cols + c)];
    }
    m.weights.push_back(std::move(w));
    m.biases.push_back(Eigen::Map<const RowVector>(bias.data(), cols));
  }
  if (j.contains("train_config")) m.train_config = j.at("train_config").get<TrainConfig>();
  if (j.contains("regularizer")) m.regularizer = j.at("regularizer").get<RegularizerSpec>();
  m.validate();
  return m;
}

}  // namespace l1o
