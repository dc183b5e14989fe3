#pragma once

// Slip-severity regressors: a feed-forward network (in -> 64 -> 32 -> 1 with
// layer normalization, ReLU and dropout) and a 3-layer LSTM over 5-tick
// feature windows. Backpropagation is written out by hand; gradient_check()
// compares it against central differences.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lsds/dataset.hpp"
#include "lsds/error.hpp"
#include "lsds/features.hpp"
#include "lsds/learn/tree.hpp"
#include "lsds/rng.hpp"

namespace lsds {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct TrainConfig {
  double learning_rate = 1e-3;  // Adam step size
  std::size_t epochs = 200;
  std::size_t batch_size = 64;
  double grad_clip = 5.0;  // global gradient-norm clip, 0 disables
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  }

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// Affine input/target scaling fitted on the training set and frozen into the
// model, so inference consumes raw features.
struct Standardizer {
  Vec mean;
  Vec scale;
  double y_mean = 0.0;
  double y_scale = 1.0;

  static Standardizer identity(std::size_t n) { return {Vec::Zero(static_cast<Eigen::Index>(n)), Vec::Ones(static_cast<Eigen::Index>(n)), 0.0, 1.0}; }

  static Standardizer fit(const FeatureMatrix& x, std::span<const double> y) {
    const auto n = static_cast<Eigen::Index>(x.cols);
    Standardizer s = identity(x.cols);
    if (x.rows == 0) return s;
    const double rows = static_cast<double>(x.rows);
    for (Eigen::Index j = 0; j < n; ++j) {
      double m = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) m += x(i, static_cast<std::size_t>(j));
      m /= rows;
      double v = 0.0;
      for (std::size_t i = 0; i < x.rows; ++i) {
        const double d = x(i, static_cast<std::size_t>(j)) - m;
        v += d * d;
      }
      const double sd = std::sqrt(v / rows);
      s.mean(j) = m;
      s.scale(j) = sd > 1e-12 ? sd : 1.0;
    }
    double m = 0.0;
    for (double t : y) m += t;
    m /= static_cast<double>(y.size());
    double v = 0.0;
    for (double t : y) v += (t - m) * (t - m);
    const double sd = std::sqrt(v / static_cast<double>(y.size()));
    s.y_mean = m;
    s.y_scale = sd > 1e-12 ? sd : 1.0;
    return s;
  }

  double apply(double v, std::size_t j) const { return (v - mean(static_cast<Eigen::Index>(j))) / scale(static_cast<Eigen::Index>(j)); }
  double target(double y) const { return (y - y_mean) / y_scale; }
  double untarget(double yn) const { return y_mean + y_scale * yn; }
};

// Per-sample feature rows plus targets; `windows[i]` lists the row indices of
// the 5-tick window ending at sample i (edge-padded at sequence starts).
struct RegressionData {
  FeatureMatrix x;
  std::vector<double> y;
  std::vector<std::array<std::uint32_t, 5>> windows;
};

inline constexpr std::size_t kWindowLength = 5;

// Samples of one sequence must be contiguous and in time order.
inline RegressionData to_regression_data(std::span<const SeveritySample> samples, FeatureSet set) {
  RegressionData d;
  d.x = FeatureMatrix(samples.size(), feature_count(set));
  d.y.resize(samples.size());
  d.windows.resize(samples.size());
  std::size_t seq_start = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto f = select_features(samples[i].features, set);
    std::copy(f.begin(), f.end(), d.x.row(i).begin());
    d.y[i] = samples[i].v_slip;
    if (i == 0 || samples[i].sequence != samples[i - 1].sequence ||
        samples[i].object_id != samples[i - 1].object_id) {
      seq_start = i;
    }
    for (std::size_t k = 0; k < kWindowLength; ++k) {
      const std::size_t back = kWindowLength - 1 - k;
      d.windows[i][k] = static_cast<std::uint32_t>(i >= seq_start + back ? i - back : seq_start);
    }
  }
  return d;
}

// Adam with bias correction over a list of parameter tensors.
class Adam {
 public:
  Adam(const std::vector<Mat>& params, double lr) : lr_(lr) {
    for (const auto& p : params) {
      m_.push_back(Mat::Zero(p.rows(), p.cols()));
      v_.push_back(Mat::Zero(p.rows(), p.cols()));
    }
  }

  void step(std::vector<Mat>& params, const std::vector<Mat>& grads) {
    ++t_;
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
      m_[i] = kBeta1 * m_[i] + (1.0 - kBeta1) * grads[i];
      v_[i] = kBeta2 * v_[i] + (1.0 - kBeta2) * grads[i].cwiseProduct(grads[i]);
      params[i].array() -= lr_ * (m_[i].array() / c1) / ((v_[i].array() / c2).sqrt() + kEps);
    }
  }

 private:
  static constexpr double kBeta1 = 0.9;
  static constexpr double kBeta2 = 0.999;
  static constexpr double kEps = 1e-8;
  double lr_;
  std::size_t t_ = 0;
  std::vector<Mat> m_;
  std::vector<Mat> v_;
};

inline void clip_gradients(std::vector<Mat>& grads, double max_norm) {
  if (max_norm <= 0.0) return;
  double sq = 0.0;
  for (const auto& g : grads) sq += g.squaredNorm();
  const double norm = std::sqrt(sq);
  if (norm > max_norm) {
    for (auto& g : grads) g *= max_norm / norm;
  }
}

namespace detail {

inline Mat uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, Rng& rng) {
  Mat m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(rng, -bound, bound);
  }
  return m;
}

// Inverted-dropout mask: 0 or 1/(1-p).
inline Mat dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Mat m(rows, cols);
  const double keep = 1.0 / (1.0 - p);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform01(rng) < p ? 0.0 : keep;
  }
  return m;
}

// Vectorized logistic and tanh built on exp; saturates cleanly to 0/1 and -1/1.
template <typename Derived>
Mat sigmoid(const Eigen::MatrixBase<Derived>& a) {
  return (1.0 + (-a.array()).exp()).inverse().matrix();
}

template <typename Derived>
Mat tanh(const Eigen::MatrixBase<Derived>& a) {
  return (2.0 * (1.0 + (-2.0 * a.array()).exp()).inverse() - 1.0).matrix();
}

inline Mat normalized_rows(const RegressionData& d, std::span<const std::uint32_t> rows, const Standardizer& norm) {
  Mat x(static_cast<Eigen::Index>(d.x.cols), static_cast<Eigen::Index>(rows.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) {
    for (std::size_t j = 0; j < d.x.cols; ++j) x(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(b)) = norm.apply(d.x(rows[b], j), j);
  }
  return x;
}

inline Mat normalized_targets(const RegressionData& d, std::span<const std::uint32_t> rows, const Standardizer& norm) {
  Mat y(1, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t b = 0; b < rows.size(); ++b) y(0, static_cast<Eigen::Index>(b)) = norm.target(d.y[rows[b]]);
  return y;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Feed-forward regressor

struct MlpModel {
  static constexpr Eigen::Index kHidden1 = 64;
  static constexpr Eigen::Index kHidden2 = 32;
  static constexpr double kLayerNormEps = 1e-5;

  FeatureSet feature_set = FeatureSet::Combined;
  std::size_t n_inputs = 0;
  double dropout = 0.1;
  Standardizer norm;
  // W1, b1, gamma1, beta1, W2, b2, gamma2, beta2, W3, b3
  std::vector<Mat> params;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  TrainConfig config;

  static constexpr std::array<const char*, 10> param_names() {
    return {"W1", "b1", "gamma1", "beta1", "W2", "b2", "gamma2", "beta2", "W3", "b3"};
  }
};

inline MlpModel init_mlp(std::size_t n_inputs, FeatureSet set, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x313));
  MlpModel m;
  m.feature_set = set;
  m.n_inputs = n_inputs;
  m.norm = Standardizer::identity(n_inputs);
  const auto in = static_cast<Eigen::Index>(n_inputs);
  const auto h1 = MlpModel::kHidden1;
  const auto h2 = MlpModel::kHidden2;
  m.params = {detail::uniform_matrix(h1, in, std::sqrt(6.0 / static_cast<double>(in)), rng),
              Mat::Zero(h1, 1),
              Mat::Ones(h1, 1),
              Mat::Zero(h1, 1),
              detail::uniform_matrix(h2, h1, std::sqrt(6.0 / static_cast<double>(h1)), rng),
              Mat::Zero(h2, 1),
              Mat::Ones(h2, 1),
              Mat::Zero(h2, 1),
              detail::uniform_matrix(1, h2, std::sqrt(1.0 / static_cast<double>(h2)), rng),
              Mat::Zero(1, 1)};
  return m;
}

struct MlpMasks {
  Mat hidden1;
  Mat hidden2;
};

namespace detail {

struct LayerNormCache {
  Mat n;        // normalized activations
  Vec inv_std;  // per column
};

inline Mat layer_norm(const Mat& z, const Mat& gamma, const Mat& beta, double eps, LayerNormCache* cache) {
  const double h = static_cast<double>(z.rows());
  Eigen::RowVectorXd mu = z.colwise().mean();
  Mat centered = z.rowwise() - mu;
  Eigen::RowVectorXd var = centered.cwiseProduct(centered).colwise().sum() / h;
  Eigen::RowVectorXd inv = (var.array() + eps).rsqrt();
  Mat n = centered.array().rowwise() * inv.array();
  Mat y = (n.array().colwise() * gamma.col(0).array()).colwise() + beta.col(0).array();
  if (cache) {
    cache->n = std::move(n);
    cache->inv_std = inv.transpose();
  }
  return y;
}

// Returns dz; accumulates dgamma and dbeta.
inline Mat layer_norm_backward(const Mat& dy, const Mat& gamma, const LayerNormCache& c, Mat& dgamma, Mat& dbeta) {
  const double h = static_cast<double>(dy.rows());
  dgamma = dy.cwiseProduct(c.n).rowwise().sum();
  dbeta = dy.rowwise().sum();
  Mat dn = dy.array().colwise() * gamma.col(0).array();
  Eigen::RowVectorXd sum_dn = dn.colwise().sum();
  Eigen::RowVectorXd sum_dn_n = dn.cwiseProduct(c.n).colwise().sum();
  Mat dz = (h * dn).rowwise() - sum_dn;
  dz.array() -= c.n.array().rowwise() * sum_dn_n.array();
  dz = dz.array().rowwise() * (c.inv_std.transpose().array() / h);
  return dz;
}

}  // namespace detail

struct MlpCache {
  Mat x;
  detail::LayerNormCache ln1, ln2;
  Mat y1, y2;  // post-norm, pre-ReLU
  Mat a1, a2;  // post-ReLU and dropout
};

// x: normalized inputs (n_inputs x batch). Returns normalized predictions (1 x batch).
inline Mat mlp_forward(const MlpModel& m, const Mat& x, const MlpMasks* masks, MlpCache* cache) {
  const auto& p = m.params;
  detail::LayerNormCache ln1, ln2;
  Mat z1 = (p[0] * x).colwise() + p[1].col(0);
  Mat y1 = detail::layer_norm(z1, p[2], p[3], MlpModel::kLayerNormEps, cache ? &ln1 : nullptr);
  Mat a1 = y1.cwiseMax(0.0);
  if (masks) a1 = a1.cwiseProduct(masks->hidden1);
  Mat z2 = (p[4] * a1).colwise() + p[5].col(0);
  Mat y2 = detail::layer_norm(z2, p[6], p[7], MlpModel::kLayerNormEps, cache ? &ln2 : nullptr);
  Mat a2 = y2.cwiseMax(0.0);
  if (masks) a2 = a2.cwiseProduct(masks->hidden2);
  Mat out = (p[8] * a2).array() + p[9](0, 0);
  if (cache) {
    cache->x = x;
    cache->ln1 = std::move(ln1);
    cache->ln2 = std::move(ln2);
    cache->y1 = std::move(y1);
    cache->y2 = std::move(y2);
    cache->a1 = std::move(a1);
    cache->a2 = std::move(a2);
  }
  return out;
}

// dout: gradient of the loss w.r.t. the 1 x batch output.
inline std::vector<Mat> mlp_backward(const MlpModel& m, const MlpCache& c, const MlpMasks* masks, const Mat& dout) {
  const auto& p = m.params;
  std::vector<Mat> g(p.size());
  g[8] = dout * c.a2.transpose();
  g[9] = Mat::Constant(1, 1, dout.sum());
  Mat da2 = p[8].transpose() * dout;
  if (masks) da2 = da2.cwiseProduct(masks->hidden2);
  Mat dy2 = da2.cwiseProduct((c.y2.array() > 0.0).cast<double>().matrix());
  Mat dz2 = detail::layer_norm_backward(dy2, p[6], c.ln2, g[6], g[7]);
  g[4] = dz2 * c.a1.transpose();
  g[5] = dz2.rowwise().sum();
  Mat da1 = p[4].transpose() * dz2;
  if (masks) da1 = da1.cwiseProduct(masks->hidden1);
  Mat dy1 = da1.cwiseProduct((c.y1.array() > 0.0).cast<double>().matrix());
  Mat dz1 = detail::layer_norm_backward(dy1, p[2], c.ln1, g[2], g[3]);
  g[0] = dz1 * c.x.transpose();
  g[1] = dz1.rowwise().sum();
  return g;
}

inline MlpMasks mlp_masks(const MlpModel& m, Eigen::Index batch, Rng& rng) {
  return {detail::dropout_mask(MlpModel::kHidden1, batch, m.dropout, rng),
          detail::dropout_mask(MlpModel::kHidden2, batch, m.dropout, rng)};
}

// Mean squared error in normalized target units; fills grads when non-null.
inline double mlp_loss(const MlpModel& m, const Mat& x, const Mat& y, const MlpMasks* masks, std::vector<Mat>* grads) {
  MlpCache cache;
  const Mat out = mlp_forward(m, x, masks, grads ? &cache : nullptr);
  const Mat diff = out - y;
  const double b = static_cast<double>(y.cols());
  if (grads) *grads = mlp_backward(m, cache, masks, (2.0 / b) * diff);
  return diff.squaredNorm() / b;
}

// ---------------------------------------------------------------------------
// Recurrent regressor

struct LstmModel {
  static constexpr std::size_t kLayers = 3;
  static constexpr Eigen::Index kHidden = 30;
  static constexpr std::size_t kSeqLen = kWindowLength;

  FeatureSet feature_set = FeatureSet::Combined;
  std::size_t n_inputs = 0;
  double dropout = 0.2;  // between stacked layers
  Standardizer norm;
  // Per layer: W (4H x (in+H)) with gate blocks [input, forget, cell, output], b (4H x 1);
  // then the head: W_head (1 x H), b_head (1 x 1).
  std::vector<Mat> params;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  TrainConfig config;

  static std::vector<std::string> param_names() {
    std::vector<std::string> names;
    for (std::size_t l = 0; l < kLayers; ++l) {
      names.push_back("W" + std::to_string(l));
      names.push_back("b" + std::to_string(l));
    }
    names.push_back("W_head");
    names.push_back("b_head");
    return names;
  }
};

inline LstmModel init_lstm(std::size_t n_inputs, FeatureSet set, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x1517));
  LstmModel m;
  m.feature_set = set;
  m.n_inputs = n_inputs;
  m.norm = Standardizer::identity(n_inputs);
  const auto h = LstmModel::kHidden;
  const double bound = 1.0 / std::sqrt(static_cast<double>(h));
  for (std::size_t l = 0; l < LstmModel::kLayers; ++l) {
    const auto in = l == 0 ? static_cast<Eigen::Index>(n_inputs) : h;
    m.params.push_back(detail::uniform_matrix(4 * h, in + h, bound, rng));
    Mat b = Mat::Zero(4 * h, 1);
    b.block(h, 0, h, 1).setOnes();  // forget-gate bias
    m.params.push_back(std::move(b));
  }
  m.params.push_back(detail::uniform_matrix(1, h, bound, rng));
  m.params.push_back(Mat::Zero(1, 1));
  return m;
}

// Dropout masks applied to the outputs of every layer but the last, per step.
struct LstmMasks {
  std::vector<std::vector<Mat>> between;  // [layer][t], H x batch
};

inline LstmMasks lstm_masks(const LstmModel& m, Eigen::Index batch, Rng& rng) {
  LstmMasks masks;
  masks.between.resize(LstmModel::kLayers - 1);
  for (auto& layer : masks.between) {
    for (std::size_t t = 0; t < LstmModel::kSeqLen; ++t) {
      layer.push_back(detail::dropout_mask(LstmModel::kHidden, batch, m.dropout, rng));
    }
  }
  return masks;
}

struct LstmStepCache {
  Mat z;  // [x; h_prev]
  Mat i, f, g, o;
  Mat c_prev, c, tanh_c;
};

struct LstmCache {
  std::vector<std::vector<LstmStepCache>> steps;  // [layer][t]
  Mat h_last;
};

// xs: kSeqLen normalized input matrices (n_inputs x batch). Returns 1 x batch.
inline Mat lstm_forward(const LstmModel& m, const std::vector<Mat>& xs, const LstmMasks* masks, LstmCache* cache) {
  const auto h = LstmModel::kHidden;
  const Eigen::Index batch = xs.front().cols();
  std::vector<Mat> seq = xs;
  if (cache) cache->steps.assign(LstmModel::kLayers, {});
  for (std::size_t l = 0; l < LstmModel::kLayers; ++l) {
    const Mat& w = m.params[2 * l];
    const Mat& b = m.params[2 * l + 1];
    const Eigen::Index in = w.cols() - h;
    Mat hp = Mat::Zero(h, batch);
    Mat cp = Mat::Zero(h, batch);
    Mat z(in + h, batch);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      z.topRows(in) = seq[t];
      z.bottomRows(h) = hp;
      Mat a = (w * z).colwise() + b.col(0);
      Mat ig = detail::sigmoid(a.middleRows(0, h));
      Mat fg = detail::sigmoid(a.middleRows(h, h));
      Mat gg = detail::tanh(a.middleRows(2 * h, h));
      Mat og = detail::sigmoid(a.middleRows(3 * h, h));
      Mat c = fg.cwiseProduct(cp) + ig.cwiseProduct(gg);
      Mat tc = detail::tanh(c);
      Mat hn = og.cwiseProduct(tc);
      if (cache) cache->steps[l].push_back({z, ig, fg, gg, og, cp, c, tc});
      cp = std::move(c);
      hp = hn;
      if (l + 1 < LstmModel::kLayers && masks) {
        seq[t] = hn.cwiseProduct(masks->between[l][t]);
      } else {
        seq[t] = std::move(hn);
      }
    }
  }
  const Mat& h_last = seq.back();
  Mat out = (m.params[2 * LstmModel::kLayers] * h_last).array() + m.params[2 * LstmModel::kLayers + 1](0, 0);
  if (cache) cache->h_last = h_last;
  return out;
}

inline std::vector<Mat> lstm_backward(const LstmModel& m, const LstmCache& c, const LstmMasks* masks, const Mat& dout) {
  const auto h = LstmModel::kHidden;
  const std::size_t L = LstmModel::kLayers;
  const std::size_t T = c.steps.front().size();
  std::vector<Mat> g(m.params.size());
  g[2 * L] = dout * c.h_last.transpose();
  g[2 * L + 1] = Mat::Constant(1, 1, dout.sum());

  const Eigen::Index batch = dout.cols();
  // Gradient w.r.t. each layer's output sequence, starting at the top.
  std::vector<Mat> dh_out(T, Mat::Zero(h, batch));
  dh_out[T - 1] = m.params[2 * L].transpose() * dout;

  for (std::size_t li = L; li-- > 0;) {
    const Mat& w = m.params[2 * li];
    const Eigen::Index in = w.cols() - h;
    Mat gw = Mat::Zero(w.rows(), w.cols());
    Mat gb = Mat::Zero(4 * h, 1);
    std::vector<Mat> dx(T);
    Mat dh_next = Mat::Zero(h, batch);
    Mat dc_next = Mat::Zero(h, batch);
    Mat da(4 * h, batch);
    for (std::size_t t = T; t-- > 0;) {
      const LstmStepCache& s = c.steps[li][t];
      Mat dh = dh_out[t] + dh_next;
      Mat dc = dc_next + dh.cwiseProduct(s.o).cwiseProduct((1.0 - s.tanh_c.array().square()).matrix());
      da.middleRows(0, h) = dc.cwiseProduct(s.g).cwiseProduct(s.i.cwiseProduct((1.0 - s.i.array()).matrix()));
      da.middleRows(h, h) = dc.cwiseProduct(s.c_prev).cwiseProduct(s.f.cwiseProduct((1.0 - s.f.array()).matrix()));
      da.middleRows(2 * h, h) = dc.cwiseProduct(s.i).cwiseProduct((1.0 - s.g.array().square()).matrix());
      da.middleRows(3 * h, h) = dh.cwiseProduct(s.tanh_c).cwiseProduct(s.o.cwiseProduct((1.0 - s.o.array()).matrix()));
      gw.noalias() += da * s.z.transpose();
      gb += da.rowwise().sum();
      Mat dz = w.transpose() * da;
      dx[t] = dz.topRows(in);
      dh_next = dz.bottomRows(h);
      dc_next = dc.cwiseProduct(s.f);
    }
    g[2 * li] = std::move(gw);
    g[2 * li + 1] = std::move(gb);
    if (li > 0) {
      for (std::size_t t = 0; t < T; ++t) {
        dh_out[t] = masks ? dx[t].cwiseProduct(masks->between[li - 1][t]) : dx[t];
      }
    }
  }
  return g;
}

inline double lstm_loss(const LstmModel& m, const std::vector<Mat>& xs, const Mat& y, const LstmMasks* masks,
                        std::vector<Mat>* grads) {
  LstmCache cache;
  const Mat out = lstm_forward(m, xs, masks, grads ? &cache : nullptr);
  const Mat diff = out - y;
  const double b = static_cast<double>(y.cols());
  if (grads) *grads = lstm_backward(m, cache, masks, (2.0 / b) * diff);
  return diff.squaredNorm() / b;
}

namespace detail {

inline std::vector<Mat> window_inputs(const RegressionData& d, std::span<const std::uint32_t> rows, const Standardizer& norm) {
  std::vector<Mat> xs;
  std::vector<std::uint32_t> step_rows(rows.size());
  for (std::size_t t = 0; t < kWindowLength; ++t) {
    for (std::size_t b = 0; b < rows.size(); ++b) step_rows[b] = d.windows[rows[b]][t];
    xs.push_back(normalized_rows(d, step_rows, norm));
  }
  return xs;
}

// Shared minibatch loop. `loss_fn(rows, rng, grads)` returns the batch loss.
template <typename Model, typename LossFn>
void fit(Model& m, const RegressionData& d, const TrainConfig& cfg, LossFn&& loss_fn) {
  cfg.validate();
  if (d.y.empty()) throw TrainingError("no training samples");
  Rng rng(derive_seed(cfg.seed, 0x7a1));
  Adam adam(m.params, cfg.learning_rate);
  std::vector<std::uint32_t> order(d.y.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<std::uint32_t>(i);
  std::vector<Mat> grads;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::uint32_t>(order), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t len = std::min(cfg.batch_size, order.size() - start);
      std::span<const std::uint32_t> rows(order.data() + start, len);
      const double loss = loss_fn(rows, rng, grads);
      if (!std::isfinite(loss)) {
        throw TrainingError("training diverged (non-finite loss) in epoch " + std::to_string(epoch + 1));
      }
      total += loss * static_cast<double>(len);
      clip_gradients(grads, cfg.grad_clip);
      adam.step(m.params, grads);
    }
    m.final_loss = total / static_cast<double>(order.size());
  }
  m.config = cfg;
}

}  // namespace detail

inline MlpModel train_mlp(const RegressionData& d, const TrainConfig& cfg, FeatureSet set = FeatureSet::Combined) {
  MlpModel m = init_mlp(d.x.cols, set, cfg.seed);
  m.norm = Standardizer::fit(d.x, d.y);
  detail::fit(m, d, cfg, [&](std::span<const std::uint32_t> rows, Rng& rng, std::vector<Mat>& grads) {
    const Mat x = detail::normalized_rows(d, rows, m.norm);
    const Mat y = detail::normalized_targets(d, rows, m.norm);
    const MlpMasks masks = mlp_masks(m, x.cols(), rng);
    return mlp_loss(m, x, y, &masks, &grads);
  });
  return m;
}

inline MlpModel train_mlp(std::span<const SeveritySample> samples, const TrainConfig& cfg,
                          FeatureSet set = FeatureSet::Combined) {
  return train_mlp(to_regression_data(samples, set), cfg, set);
}

inline LstmModel train_lstm(const RegressionData& d, const TrainConfig& cfg, FeatureSet set = FeatureSet::Combined) {
  if (d.windows.size() != d.y.size()) throw ShapeError("every sample needs a window of length 5");
  LstmModel m = init_lstm(d.x.cols, set, cfg.seed);
  m.norm = Standardizer::fit(d.x, d.y);
  detail::fit(m, d, cfg, [&](std::span<const std::uint32_t> rows, Rng& rng, std::vector<Mat>& grads) {
    const auto xs = detail::window_inputs(d, rows, m.norm);
    const Mat y = detail::normalized_targets(d, rows, m.norm);
    const LstmMasks masks = lstm_masks(m, y.cols(), rng);
    return lstm_loss(m, xs, y, &masks, &grads);
  });
  return m;
}

inline LstmModel train_lstm(std::span<const SeveritySample> samples, const TrainConfig& cfg,
                            FeatureSet set = FeatureSet::Combined) {
  return train_lstm(to_regression_data(samples, set), cfg, set);
}

// ---------------------------------------------------------------------------
// Inference. Outputs are speeds, so negative raw outputs clamp to 0.

inline double predict_severity(const MlpModel& m, std::span<const double> x) {
  if (x.size() != m.n_inputs) {
    throw ShapeError("MLP expects " + std::to_string(m.n_inputs) + " features, got " + std::to_string(x.size()));
  }
  Mat xn(static_cast<Eigen::Index>(m.n_inputs), 1);
  for (std::size_t j = 0; j < m.n_inputs; ++j) xn(static_cast<Eigen::Index>(j), 0) = m.norm.apply(x[j], j);
  const double y = m.norm.untarget(mlp_forward(m, xn, nullptr, nullptr)(0, 0));
  return y > 0.0 ? y : 0.0;
}

// `window` holds kSeqLen feature vectors back to back, oldest first.
inline double predict_severity(const LstmModel& m, std::span<const double> window) {
  if (window.size() != m.n_inputs * LstmModel::kSeqLen) {
    throw ShapeError("LSTM expects a window of " + std::to_string(LstmModel::kSeqLen) + " x " +
                     std::to_string(m.n_inputs) + " values, got " + std::to_string(window.size()));
  }
  std::vector<Mat> xs;
  for (std::size_t t = 0; t < LstmModel::kSeqLen; ++t) {
    Mat x(static_cast<Eigen::Index>(m.n_inputs), 1);
    for (std::size_t j = 0; j < m.n_inputs; ++j) x(static_cast<Eigen::Index>(j), 0) = m.norm.apply(window[t * m.n_inputs + j], j);
    xs.push_back(std::move(x));
  }
  const double y = m.norm.untarget(lstm_forward(m, xs, nullptr, nullptr)(0, 0));
  return y > 0.0 ? y : 0.0;
}

// Batched inference over every sample of a data set (windows for the LSTM).
inline std::vector<double> predict_all(const MlpModel& m, const RegressionData& d) {
  std::vector<double> out(d.y.size());
  constexpr std::size_t kChunk = 512;
  std::vector<std::uint32_t> rows;
  for (std::size_t s = 0; s < d.y.size(); s += kChunk) {
    rows.clear();
    for (std::size_t i = s; i < std::min(d.y.size(), s + kChunk); ++i) rows.push_back(static_cast<std::uint32_t>(i));
    const Mat y = mlp_forward(m, detail::normalized_rows(d, rows, m.norm), nullptr, nullptr);
    for (std::size_t b = 0; b < rows.size(); ++b) out[rows[b]] = std::max(0.0, m.norm.untarget(y(0, static_cast<Eigen::Index>(b))));
  }
  return out;
}

inline std::vector<double> predict_all(const LstmModel& m, const RegressionData& d) {
  std::vector<double> out(d.y.size());
  constexpr std::size_t kChunk = 512;
  std::vector<std::uint32_t> rows;
  for (std::size_t s = 0; s < d.y.size(); s += kChunk) {
    rows.clear();
    for (std::size_t i = s; i < std::min(d.y.size(), s + kChunk); ++i) rows.push_back(static_cast<std::uint32_t>(i));
    const Mat y = lstm_forward(m, detail::window_inputs(d, rows, m.norm), nullptr, nullptr);
    for (std::size_t b = 0; b < rows.size(); ++b) out[rows[b]] = std::max(0.0, m.norm.untarget(y(0, static_cast<Eigen::Index>(b))));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Gradient checking

// Relative error per parameter tensor, ||analytic - numeric|| / max(||analytic||, ||numeric||),
// with numeric gradients from central differences of step h.
template <typename Model, typename LossFn>
std::vector<double> gradient_check(Model m, LossFn&& loss_fn, double h = 1e-6) {
  std::vector<Mat> analytic;
  loss_fn(m, &analytic);
  std::vector<double> errors;
  for (std::size_t k = 0; k < m.params.size(); ++k) {
    Mat numeric(m.params[k].rows(), m.params[k].cols());
    for (Eigen::Index j = 0; j < numeric.cols(); ++j) {
      for (Eigen::Index i = 0; i < numeric.rows(); ++i) {
        const double saved = m.params[k](i, j);
        m.params[k](i, j) = saved + h;
        const double up = loss_fn(m, nullptr);
        m.params[k](i, j) = saved - h;
        const double down = loss_fn(m, nullptr);
        m.params[k](i, j) = saved;
        numeric(i, j) = (up - down) / (2.0 * h);
      }
    }
    const double denom = std::max(analytic[k].norm(), numeric.norm());
    errors.push_back(denom == 0.0 ? 0.0 : (analytic[k] - numeric).norm() / denom);
  }
  return errors;
}

}  // namespace lsds
