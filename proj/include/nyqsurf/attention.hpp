#pragma once

#include "nyqsurf/render.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>

namespace nyqsurf {

using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;

// Single-head cross-attention followed by a two-layer feed-forward block.
struct AttentionWeights {
  MatX w_q;     // C x C
  MatX w_k;     // C x C
  MatX w_v;     // C x C
  MatX ffn_w1;  // H x C
  VecX ffn_b1;  // H
  MatX ffn_w2;  // C x H
  VecX ffn_b2;  // C

  int channels() const { return static_cast<int>(w_q.rows()); }
  int hidden() const { return static_cast<int>(ffn_w1.rows()); }

  static AttentionWeights zeros(int channels, int hidden) {
    AttentionWeights w;
    w.w_q = MatX::Zero(channels, channels);
    w.w_k = MatX::Zero(channels, channels);
    w.w_v = MatX::Zero(channels, channels);
    w.ffn_w1 = MatX::Zero(hidden, channels);
    w.ffn_b1 = VecX::Zero(hidden);
    w.ffn_w2 = MatX::Zero(channels, hidden);
    w.ffn_b2 = VecX::Zero(channels);
    return w;
  }
};

inline void validate(const AttentionWeights& w) {
  const auto c = w.w_q.rows();
  const auto h = w.ffn_w1.rows();
  const bool ok = c > 0 && w.w_q.cols() == c && w.w_k.rows() == c && w.w_k.cols() == c &&
                  w.w_v.rows() == c && w.w_v.cols() == c && w.ffn_w1.cols() == c && h > 0 &&
                  w.ffn_b1.size() == h && w.ffn_w2.rows() == c && w.ffn_w2.cols() == h &&
                  w.ffn_b2.size() == c;
  if (!ok) throw std::invalid_argument("AttentionWeights: inconsistent dimensions");
  const bool finite = w.w_q.allFinite() && w.w_k.allFinite() && w.w_v.allFinite() &&
                      w.ffn_w1.allFinite() && w.ffn_b1.allFinite() && w.ffn_w2.allFinite() &&
                      w.ffn_b2.allFinite();
  if (!finite) throw std::invalid_argument("AttentionWeights: non-finite entries");
}

struct AttentionOutput {
  VecX value;   // attended feature, or the query feature when nothing was attended
  VecX scores;  // softmax weights over the bundle
  bool attended = false;
};

// Q = W_Q f, K_j = W_K g_j, V_j = W_V g_j; out = sum_j softmax_j(Q.K_j / sqrt(C)) V_j.
inline AttentionOutput cross_attention(std::span<const double> query, const FeatureBundle& bundle,
                                       const AttentionWeights& w) {
  const int c = w.channels();
  if (static_cast<int>(query.size()) != c)
    throw std::invalid_argument("cross_attention: query dimension mismatch");
  AttentionOutput out;
  const Eigen::Map<const VecX> f(query.data(), c);
  if (bundle.empty()) {
    out.value = f;
    return out;
  }
  if (bundle.channels != c) throw std::invalid_argument("cross_attention: bundle dimension mismatch");

  const auto n = static_cast<Eigen::Index>(bundle.size());
  const Eigen::Map<const MatX> g(bundle.features.data(), c, n);  // column j = g_j
  const VecX q = w.w_q * f;
  const MatX keys = w.w_k * g;
  const MatX values = w.w_v * g;

  VecX logits = (keys.transpose() * q) / std::sqrt(static_cast<double>(c));
  const double peak = logits.maxCoeff();
  out.scores = (logits.array() - peak).exp().matrix();
  out.scores /= out.scores.sum();
  out.value = values * out.scores;
  out.attended = true;
  return out;
}

inline double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x / std::numbers::sqrt2)); }

// F_refined = W2 gelu(W1 F_hat + b1) + b2 + F.
inline VecX ffn_residual(const VecX& attended, const VecX& residual, const AttentionWeights& w) {
  if (attended.size() != w.channels() || residual.size() != w.channels())
    throw std::invalid_argument("ffn_residual: dimension mismatch");
  const VecX hidden = (w.ffn_w1 * attended + w.ffn_b1).unaryExpr([](double x) { return gelu(x); });
  return w.ffn_w2 * hidden + w.ffn_b2 + residual;
}

}  // namespace nyqsurf
