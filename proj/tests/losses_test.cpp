#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gfs/losses.hpp"
#include "oracles.hpp"

using gfs::ErrorCode;
using gfs::FeatureMap;
using gfs::MaskStack;
using gfs::Matrix;
using gfs::PrototypeBank;
using gfs::Sample;

namespace {

Matrix rows(std::initializer_list<std::vector<double>> r) {
  Matrix m(r.size(), r.begin()->size());
  std::size_t i = 0;
  for (const auto& v : r) {
    for (std::size_t k = 0; k < v.size(); ++k) m(i, k) = v[k];
    ++i;
  }
  return m;
}

PrototypeBank bank_of(const Matrix& cur, const Matrix& prev, std::size_t base) {
  return PrototypeBank::from_state(base, 0, std::vector<std::string>(cur.rows(), "c"), cur, prev);
}

gfs::LogitGrid grid(std::size_t h, std::size_t w, std::size_t n, std::vector<double> v) {
  return {h, w, n, std::move(v)};
}

}  // namespace

TEST(Distances, WithinClassExamples) {
  const Matrix p = rows({{1, 0}, {0, 1}, {5, 5}});
  EXPECT_EQ(gfs::within_class_distance(bank_of(p, p, 2)), 0.0);
  EXPECT_EQ(gfs::within_class_distance(bank_of(rows({{1, 0}}), rows({{0, 0}}), 1)), 1.0);
  // Only base classes count: class 2 moves but is novel.
  EXPECT_EQ(gfs::within_class_distance(
                bank_of(rows({{1, 0}, {0, 2}, {9, 9}}), rows({{0, 0}, {0, 0}, {0, 0}}), 2)),
            5.0);
}

TEST(Distances, BetweenClassExamples) {
  EXPECT_EQ(gfs::between_class_distance(rows({{1, 2}, {1, 2}, {1, 2}})), 0.0);
  EXPECT_EQ(gfs::between_class_distance(rows({{1, 0}, {0, 1}})), 4.0);
  std::mt19937_64 rng(1);
  const Matrix p = oracle::random_matrix(rng, 5, 3);
  const Matrix q = rows({{p(3, 0), p(3, 1), p(3, 2)},
                         {p(0, 0), p(0, 1), p(0, 2)},
                         {p(4, 0), p(4, 1), p(4, 2)},
                         {p(1, 0), p(1, 1), p(1, 2)},
                         {p(2, 0), p(2, 1), p(2, 2)}});
  EXPECT_NEAR(gfs::between_class_distance(p), gfs::between_class_distance(q), 1e-12);
  EXPECT_NEAR(gfs::between_class_distance(p), oracle::d_between(p), 1e-12);
}

TEST(ContrastiveLoss, Examples) {
  const Matrix cur = rows({{1, 0}, {0, 1}});
  EXPECT_EQ(gfs::class_contrastive_loss(bank_of(cur, cur, 2)), 0.0);
  const PrototypeBank moved = bank_of(cur, rows({{1, 0}, {0, 0}}), 2);
  EXPECT_EQ(gfs::within_class_distance(moved), 1.0);
  EXPECT_EQ(gfs::between_class_distance(moved), 4.0);
  EXPECT_EQ(gfs::class_contrastive_loss(moved), 0.25);
}

TEST(ContrastiveLoss, CollapsedPrototypesAreSurfaced) {
  const Matrix same = rows({{1, 1}, {1, 1}});
  EXPECT_GFS_ERROR(gfs::class_contrastive_loss(bank_of(same, rows({{0, 1}, {1, 1}}), 1)),
                   ErrorCode::DegenerateDenominator);
}

TEST(ContrastiveLoss, GlobalScaleInvariance) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> scale(0.01, 100.0);
  for (int t = 0; t < 100; ++t) {
    Matrix cur = oracle::random_matrix(rng, 4, 3);
    Matrix prev = oracle::random_matrix(rng, 4, 3);
    const double before = gfs::class_contrastive_loss(bank_of(cur, prev, 3));
    const double c = scale(rng);
    for (double& v : cur.data()) v *= c;
    for (double& v : prev.data()) v *= c;
    EXPECT_NEAR(gfs::class_contrastive_loss(bank_of(cur, prev, 3)), before, 1e-12 * std::max(1.0, before));
  }
}

TEST(ContrastiveLoss, SpreadingPrototypesDecreasesLoss) {
  // Translating the novel class away moves d^B up and leaves d^W alone.
  Matrix cur = rows({{1, 0}, {0, 1}, {1, 1}});
  const Matrix prev = rows({{0.5, 0}, {0, 0.5}, {1, 1}});
  double last = gfs::class_contrastive_loss(bank_of(cur, prev, 2));
  for (int k = 1; k <= 5; ++k) {
    cur(2, 0) += 1.0;
    cur(2, 1) += 1.0;
    const double now = gfs::class_contrastive_loss(bank_of(cur, prev, 2));
    EXPECT_LT(now, last);
    last = now;
  }
}

TEST(Classifier, PerfectMatchAndErrors) {
  const Matrix protos = rows({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}});
  const FeatureMap f(1, 3, 3, std::vector<double>{0, 2, 0, 0, 0, 5, 3, 0, 0});
  const gfs::LogitGrid g = gfs::classifier_logits(f, protos, 10.0);
  EXPECT_EQ(gfs::predict(g), (std::vector<std::int32_t>{1, 2, 0}));
  EXPECT_NEAR(g.pixel(0)[1], 10.0, 1e-14);
  EXPECT_NEAR(g.pixel(0)[0], 0.0, 1e-14);
  const gfs::Vector s = gfs::softmax(std::vector<double>{10.0, 0.0});
  EXPECT_NEAR(s[0], 0.99995460213129761, 1e-15);
  EXPECT_NEAR(s[1], 4.5397868702434395e-05, 1e-15);

  EXPECT_GFS_ERROR(gfs::classifier_logits(f, protos, 0.0), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::classifier_logits(f, rows({{1, 0, 0}, {0, 0, 0}}), 10.0),
                   ErrorCode::ZeroNormVector);
  EXPECT_GFS_ERROR(gfs::classifier_logits(FeatureMap(1, 1, 3, 0.0), protos, 10.0),
                   ErrorCode::ZeroNormVector);
  EXPECT_GFS_ERROR(gfs::classifier_logits(FeatureMap(1, 1, 2, 1.0), protos, 10.0),
                   ErrorCode::DimensionMismatch);
}

TEST(Classifier, TiesResolveToLowestIndex) {
  EXPECT_EQ(gfs::predict(grid(1, 2, 3, {1, 1, 0, 0, 2, 2})), (std::vector<std::int32_t>{0, 1}));
}

TEST(Classifier, PerPrototypeScalingLeavesLogitsUnchanged) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> scale(0.001, 1000.0);
  for (int t = 0; t < 50; ++t) {
    const Sample s = oracle::random_sample(rng, 4, 5, 3, 4);
    Matrix p = oracle::random_matrix(rng, 4, 3);
    const gfs::LogitGrid a = gfs::classifier_logits(s.features, p, 10.0);
    for (std::size_t c = 0; c < 4; ++c) {
      const double k = scale(rng);
      for (double& v : p.row(c)) v *= k;
    }
    const gfs::LogitGrid b = gfs::classifier_logits(s.features, p, 10.0);
    for (std::size_t k = 0; k < a.values.size(); ++k) EXPECT_NEAR(a.values[k], b.values[k], 1e-12);
    EXPECT_EQ(gfs::predict(a), gfs::predict(b));
  }
}

TEST(CrossEntropy, Examples) {
  EXPECT_LT(gfs::cross_entropy_map(grid(1, 2, 2, {20, 0, 0, 20}),
                                   MaskStack(1, 2, std::vector<std::int32_t>{0, 1})),
            1e-4);
  EXPECT_NEAR(gfs::cross_entropy_map(grid(1, 2, 5, std::vector<double>(10, 0.7)),
                                     MaskStack(1, 2, std::vector<std::int32_t>{4, 2})),
              std::log(5.0), 1e-12);
  EXPECT_NEAR(gfs::cross_entropy_map(grid(1, 1, 2, {std::log(2.0), 0}), MaskStack(1, 1, 0)),
              -std::log(2.0 / 3.0), 1e-15);
}

TEST(CrossEntropy, IgnoredPixelsExcluded) {
  const auto g = grid(1, 3, 2, {std::log(2.0), 0, -50, 50, 0, 0});
  const MaskStack m(1, 3, std::vector<std::int32_t>{0, gfs::kIgnoreLabel, 1});
  EXPECT_NEAR(gfs::cross_entropy_map(g, m), (-std::log(2.0 / 3.0) + std::log(2.0)) / 2, 1e-15);
  EXPECT_GFS_ERROR(gfs::cross_entropy_map(g, MaskStack(1, 3)), ErrorCode::NoLabeledPixels);
  EXPECT_GFS_ERROR(gfs::cross_entropy_map(g, MaskStack(3, 1, 0)), ErrorCode::ShapeMismatch);
}

TEST(CrossEntropy, BatchPoolsPixelsAndMatchesOracle) {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 50; ++t) {
    std::vector<Sample> batch{oracle::random_sample(rng, 2, 3, 3, 4),
                              oracle::random_sample(rng, 5, 4, 3, 4)};
    const Matrix p = oracle::random_matrix(rng, 4, 3);
    const double ce = gfs::batch_cross_entropy(batch, p, 10.0);
    EXPECT_NEAR(ce, oracle::cross_entropy(batch, p, 10.0), 1e-10);
    EXPECT_GE(ce, 0.0);
  }
}

TEST(CrossClassLoss, TwoNodeGraphClassifiesThroughSwap) {
  // Pixels of class 0 carry prototype 1's direction; p' swaps the prototypes,
  // so the enhanced classifier labels them correctly.
  const Matrix protos = rows({{1, 0}, {0, 1}});
  const PrototypeBank bank = bank_of(protos, protos, 1);
  const std::vector<Sample> q{{FeatureMap(1, 2, 2, std::vector<double>{0, 1, 1, 0}),
                               MaskStack(1, 2, std::vector<std::int32_t>{0, 1})}};
  const double l_b = gfs::cross_class_similarity_loss(q, bank, gfs::make_learnable_edges(2), 30.0);
  EXPECT_LT(l_b, 1e-12);
  EXPECT_GT(gfs::segmentation_loss(q, bank, 30.0), 10.0);
}

TEST(CrossClassLoss, FixedEqualsLearnableAtInitAndRelabelingInvariant) {
  std::mt19937_64 rng(5);
  const std::vector<Sample> q{oracle::random_sample(rng, 4, 4, 3, 4)};
  const Matrix cur = oracle::random_matrix(rng, 4, 3);
  const PrototypeBank bank = bank_of(cur, cur, 3);
  const double learn = gfs::cross_class_similarity_loss(q, bank, gfs::make_learnable_edges(4), 10.0);
  EXPECT_EQ(learn, gfs::cross_class_similarity_loss(q, bank, gfs::make_fixed_edges(4), 10.0));

  const std::int32_t perm[] = {2, 3, 1, 0};  // new slot of old class c
  Matrix pc(4, 3);
  for (std::size_t c = 0; c < 4; ++c) {
    for (std::size_t k = 0; k < 3; ++k) pc(static_cast<std::size_t>(perm[c]), k) = cur(c, k);
  }
  std::vector<Sample> qp = q;
  for (std::size_t i = 0; i < qp[0].labels.pixels(); ++i) {
    auto& l = qp[0].labels.label(i);
    if (l >= 0) l = perm[l];
  }
  EXPECT_NEAR(gfs::cross_class_similarity_loss(qp, bank_of(pc, pc, 3), gfs::make_learnable_edges(4), 10.0),
              learn, 1e-12);
}

TEST(CrossClassLoss, MatchesOracleComposition) {
  std::mt19937_64 rng(6);
  for (int t = 0; t < 30; ++t) {
    const std::vector<Sample> q{oracle::random_sample(rng, 3, 3, 2, 3)};
    const Matrix cur = oracle::random_matrix(rng, 3, 2);
    gfs::EdgeWeightMatrix w = gfs::make_learnable_edges(3);
    for (double& v : w.weights.data()) v = 0.5 + std::abs(std::normal_distribution<double>()(rng));
    const double got = gfs::cross_class_similarity_loss(q, bank_of(cur, cur, 2), w, 10.0);
    const double expect =
        oracle::cross_entropy(q, oracle::neighbor_messages(cur, w.weights), 10.0);
    EXPECT_NEAR(got, expect, 1e-10);
  }
}

TEST(SelfSimilarityLoss, NoDriftEqualsSegmentationLoss) {
  std::mt19937_64 rng(7);
  const std::vector<Sample> q{oracle::random_sample(rng, 4, 4, 3, 5)};
  const Matrix cur = oracle::random_matrix(rng, 5, 3);
  const PrototypeBank bank = bank_of(cur, cur, 3);
  EXPECT_NEAR(gfs::self_similarity_loss(q, bank, 10.0), gfs::segmentation_loss(q, bank, 10.0), 1e-12);
}

TEST(SelfSimilarityLoss, SaturatedSingleClass) {
  const Matrix p = rows({{1, 0}, {0, 1}});
  const std::vector<Sample> q{{FeatureMap(2, 2, 2, std::vector<double>{1, 0, 1, 0, 1, 0, 1, 0}),
                               MaskStack(2, 2, 0)}};
  EXPECT_LT(gfs::self_similarity_loss(q, bank_of(p, rows({{1, 0.1}, {0.2, 1}}), 1), 30.0), 1e-12);
}

TEST(SelfSimilarityLoss, DriftCaseMatchesTwoStageOracle) {
  const Matrix cur = rows({{0, 1}, {1, 0.5}});
  const Matrix prev = rows({{1, 0}, {1, 0}});
  const std::vector<Sample> q{{FeatureMap(1, 2, 2, std::vector<double>{0.6, 0.8, 1, 0}),
                               MaskStack(1, 2, std::vector<std::int32_t>{0, 1})}};
  const std::vector<double> sw = oracle::within_norm(cur, prev);
  Matrix pp = cur;
  for (std::size_t i = 0; i < 2; ++i) {
    for (double& v : pp.row(i)) v *= 2 * sw[i];
  }
  EXPECT_NEAR(gfs::self_similarity_loss(q, bank_of(cur, prev, 1), 10.0),
              oracle::cross_entropy(q, pp, 10.0), 1e-12);
}

TEST(TotalLoss, AblationIdentityAndDefaults) {
  std::mt19937_64 rng(8);
  const std::vector<Sample> q{oracle::random_sample(rng, 3, 4, 3, 4)};
  const PrototypeBank bank =
      bank_of(oracle::random_matrix(rng, 4, 3), oracle::random_matrix(rng, 4, 3), 3);
  const auto w = gfs::make_learnable_edges(4);
  gfs::LossConfig off;
  off.lambda1 = off.lambda2 = 0.0;
  const gfs::LossReport r0 = gfs::total_loss(q, bank, w, off);
  EXPECT_EQ(r0.total, r0.L_s);
  const gfs::LossReport r = gfs::total_loss(q, bank, w, {});
  EXPECT_EQ(r.lambda1, 1.0);
  EXPECT_EQ(r.lambda2, 1.0);
  EXPECT_EQ(r.alpha, 10.0);
  EXPECT_NEAR(r.total, r.L_s + r.L_C + r.L_B + r.L_W, 1e-12);
}

TEST(TotalLoss, ReportIdentitiesOnRandomInstances) {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> n_dist(2, 5), d_dist(2, 4), side(2, 6);
  std::uniform_real_distribution<double> lam(0.0, 3.0);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = n_dist(rng), d = d_dist(rng), h = side(rng);
    const std::vector<Sample> q{oracle::random_sample(rng, h, h, d, n)};
    const PrototypeBank bank =
        bank_of(oracle::random_matrix(rng, n, d), oracle::random_matrix(rng, n, d), 1);
    gfs::LossConfig cfg;
    cfg.lambda1 = lam(rng);
    cfg.lambda2 = lam(rng);
    const gfs::LossReport r = gfs::total_loss(q, bank, gfs::make_learnable_edges(n), cfg);
    EXPECT_NEAR(r.L_R, r.L_B + r.L_W, 1e-12);
    EXPECT_NEAR(r.total, r.L_s + cfg.lambda1 * r.L_C + cfg.lambda2 * r.L_R, 1e-12);
    EXPECT_GE(r.d_W, 0.0);
    EXPECT_GE(r.d_B, 0.0);
    EXPECT_GE(r.L_s, 0.0);
    EXPECT_GE(r.L_B, 0.0);
    EXPECT_GE(r.L_W, 0.0);
  }
}

TEST(TotalLoss, CsvRow) {
  EXPECT_EQ(gfs::loss_csv_header(), "step,L_s,L_C,L_B,L_W,L_R,total,d_W,d_B");
  gfs::LossReport r;
  r.L_s = 0.5;
  r.L_C = 0.1;
  r.total = 0.6;
  EXPECT_EQ(gfs::loss_csv_row(3, r), "3,0.5,0.10000000000000001,0,0,0,0.59999999999999998,0,0");
}
