#include "oracles.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

using namespace nyqsurf;

namespace {

AttentionWeights random_weights(std::mt19937_64& rng, int c, int h, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  const auto fill = [&](MatX m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
    return m;
  };
  AttentionWeights w = AttentionWeights::zeros(c, h);
  w.w_q = fill(w.w_q);
  w.w_k = fill(w.w_k);
  w.w_v = fill(w.w_v);
  w.ffn_w1 = fill(w.ffn_w1);
  w.ffn_b1 = fill(w.ffn_b1);
  w.ffn_w2 = fill(w.ffn_w2);
  w.ffn_b2 = fill(w.ffn_b2);
  return w;
}

FeatureBundle random_bundle(std::mt19937_64& rng, int c, int n, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  FeatureBundle b;
  b.channels = c;
  for (int j = 0; j < n; ++j) {
    b.views.push_back(0);
    b.pixels.push_back({0, j});
    for (int i = 0; i < c; ++i) b.features.push_back(d(rng));
  }
  return b;
}

std::vector<double> random_vec(std::mt19937_64& rng, int c) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(c);
  for (double& x : v) x = d(rng);
  return v;
}

}  // namespace

TEST(Attention, EmptyBundleReturnsQuery) {
  const AttentionWeights w = AttentionWeights::zeros(4, 6);
  const std::vector<double> q{1, 2, 3, 4};
  FeatureBundle empty;
  empty.channels = 4;
  const AttentionOutput out = cross_attention(q, empty, w);
  EXPECT_FALSE(out.attended);
  EXPECT_EQ(out.scores.size(), 0);
  EXPECT_EQ(std::vector<double>(out.value.data(), out.value.data() + 4), q);
}

TEST(Attention, ZeroKeysGiveUniformMean) {
  std::mt19937_64 rng(71);
  AttentionWeights w = random_weights(rng, 3, 4);
  w.w_k.setZero();
  w.w_v = MatX::Identity(3, 3);
  const FeatureBundle b = random_bundle(rng, 3, 5);
  const auto q = random_vec(rng, 3);
  const AttentionOutput out = cross_attention(q, b, w);
  for (int j = 0; j < 5; ++j) EXPECT_NEAR(out.scores[j], 0.2, 1e-15);
  for (int i = 0; i < 3; ++i) {
    double mean = 0.0;
    for (int j = 0; j < 5; ++j) mean += b.features[j * 3 + i] / 5.0;
    EXPECT_NEAR(out.value[i], mean, 1e-14);
  }
}

TEST(Attention, HandComputedTwoEntries) {
  // C = 2, W_Q = W_K = W_V = I, f = (1, 0), g = (2, 0), (0, 2)
  // logits = (2, 0) / sqrt(2); softmax = (e^a, 1)/(e^a + 1) with a = sqrt(2)
  AttentionWeights w = AttentionWeights::zeros(2, 1);
  w.w_q = w.w_k = w.w_v = MatX::Identity(2, 2);
  FeatureBundle b;
  b.channels = 2;
  b.views = {0, 0};
  b.pixels = {{0, 0}, {0, 1}};
  b.features = {2, 0, 0, 2};
  const std::vector<double> q{1, 0};
  const AttentionOutput out = cross_attention(q, b, w);
  const double e = std::exp(std::sqrt(2.0));
  EXPECT_NEAR(out.scores[0], e / (e + 1), 1e-15);
  EXPECT_NEAR(out.value[0], 2 * e / (e + 1), 1e-14);
  EXPECT_NEAR(out.value[1], 2 / (e + 1), 1e-14);
}

TEST(Attention, SoftmaxSumsToOne) {
  std::mt19937_64 rng(73);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 1 + trial % 9;
    const int n = 1 + static_cast<int>(rng() % 300);
    const double scale = trial % 4 == 0 ? 30.0 : 1.0;  // large logits exercise the max shift
    const AttentionWeights w = random_weights(rng, c, 5, scale);
    const FeatureBundle b = random_bundle(rng, c, n, scale);
    const AttentionOutput out = cross_attention(random_vec(rng, c), b, w);
    ASSERT_TRUE(out.scores.allFinite());
    ASSERT_NEAR(out.scores.sum(), 1.0, 1e-9);
    ASSERT_GE(out.scores.minCoeff(), 0.0);
  }
}

TEST(Attention, PermutationInvariant) {
  std::mt19937_64 rng(75);
  for (int trial = 0; trial < 50; ++trial) {
    const int c = 8, n = 40;
    const AttentionWeights w = random_weights(rng, c, 12);
    const FeatureBundle b = random_bundle(rng, c, n);
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    FeatureBundle shuffled = b;
    for (int j = 0; j < n; ++j)
      std::copy_n(b.features.begin() + perm[j] * c, c, shuffled.features.begin() + j * c);
    const auto q = random_vec(rng, c);
    const VecX a = cross_attention(q, b, w).value;
    const VecX s = cross_attention(q, shuffled, w).value;
    ASSERT_LE((a - s).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Attention, DimensionErrors) {
  std::mt19937_64 rng(77);
  const AttentionWeights w = random_weights(rng, 4, 3);
  EXPECT_THROW(cross_attention(random_vec(rng, 3), random_bundle(rng, 4, 2), w), std::invalid_argument);
  EXPECT_THROW(cross_attention(random_vec(rng, 4), random_bundle(rng, 5, 2), w), std::invalid_argument);
  AttentionWeights bad = w;
  bad.ffn_b1 = VecX::Zero(7);
  EXPECT_THROW(validate(bad), std::invalid_argument);
  bad = w;
  bad.w_k(0, 0) = std::nan("");
  EXPECT_THROW(validate(bad), std::invalid_argument);
  EXPECT_THROW(ffn_residual(VecX::Zero(3), VecX::Zero(4), w), std::invalid_argument);
}

TEST(FeedForward, ZeroWeightsAreIdentityOnResidual) {
  std::mt19937_64 rng(79);
  const AttentionWeights w = AttentionWeights::zeros(8, 16);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_vec(rng, 8), r = random_vec(rng, 8);
    const VecX out = ffn_residual(Eigen::Map<const VecX>(a.data(), 8), Eigen::Map<const VecX>(r.data(), 8), w);
    for (int i = 0; i < 8; ++i) ASSERT_EQ(out[i], r[i]);
  }
}

TEST(FeedForward, MatchesLoopOracle) {
  std::mt19937_64 rng(81);
  for (int trial = 0; trial < 50; ++trial) {
    const AttentionWeights w = random_weights(rng, 6, 10);
    const auto a = random_vec(rng, 6), r = random_vec(rng, 6);
    const VecX out = ffn_residual(Eigen::Map<const VecX>(a.data(), 6), Eigen::Map<const VecX>(r.data(), 6), w);
    const auto ref = oracle::ffn_residual(a, r, w);
    for (int i = 0; i < 6; ++i) ASSERT_NEAR(out[i], ref[i], 1e-12 * (1.0 + std::abs(ref[i])));
  }
}

TEST(FeedForward, GeluValues) {
  EXPECT_EQ(gelu(0.0), 0.0);
  EXPECT_NEAR(gelu(1.0), 0.8413447460685429, 1e-15);
  EXPECT_NEAR(gelu(-1.0), -0.15865525393145707, 1e-15);
  EXPECT_NEAR(gelu(10.0), 10.0, 1e-15);
}
