#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gfs/eval.hpp"
#include "gfs/pipeline.hpp"

using gfs::ConfusionMatrix;
using gfs::ErrorCode;
using gfs::FoldSplit;
using gfs::MaskStack;

namespace {

FoldSplit split_of(std::vector<std::size_t> base, std::vector<std::size_t> novel) {
  FoldSplit s;
  s.base_class_ids = std::move(base);
  s.novel_class_ids = std::move(novel);
  return s;
}

}  // namespace

TEST(Confusion, AccumulateSkipsIgnored) {
  ConfusionMatrix cm(3);
  cm.accumulate(std::vector<std::int32_t>{0, 1, 2, 2},
                MaskStack(2, 2, std::vector<std::int32_t>{0, 2, gfs::kIgnoreLabel, 2}));
  EXPECT_EQ(cm(0, 0), 1u);
  EXPECT_EQ(cm(2, 1), 1u);
  EXPECT_EQ(cm(2, 2), 1u);
  EXPECT_EQ(cm.total(), 3u);
  EXPECT_GFS_ERROR(cm.accumulate(std::vector<std::int32_t>{0}, MaskStack(2, 2, 0)),
                   ErrorCode::ShapeMismatch);
  EXPECT_GFS_ERROR(cm.accumulate(std::vector<std::int32_t>{0}, MaskStack(1, 1, 3)),
                   ErrorCode::ShapeMismatch);
  EXPECT_GFS_ERROR(cm.accumulate(std::vector<std::int32_t>{5}, MaskStack(1, 1, 0)),
                   ErrorCode::ShapeMismatch);
}

TEST(Confusion, MergeIsAssociativeAndCommutative) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> cls(-1, 3);
  std::vector<ConfusionMatrix> parts;
  for (int k = 0; k < 3; ++k) {
    ConfusionMatrix cm(4);
    std::vector<std::int32_t> pred(12), truth(12);
    for (auto& p : pred) p = std::max(0, cls(rng));
    for (auto& t : truth) t = cls(rng);
    cm.accumulate(pred, MaskStack(3, 4, truth));
    parts.push_back(cm);
  }
  ConfusionMatrix left = parts[0];
  left.merge(parts[1]);
  left.merge(parts[2]);
  ConfusionMatrix right = parts[1];
  right.merge(parts[2]);
  ConfusionMatrix c0 = parts[0];
  c0.merge(right);
  ConfusionMatrix swapped = parts[2];
  swapped.merge(parts[0]);
  swapped.merge(parts[1]);
  EXPECT_EQ(left, c0);
  EXPECT_EQ(left, swapped);
}

TEST(MIoU, PerClassAndGroups) {
  // truth 0: 3 px (2 right, 1 predicted 1); truth 1: 1 px correct; class 2
  // absent everywhere; class 3 only predicted.
  ConfusionMatrix cm(4);
  cm.accumulate(std::vector<std::int32_t>{0, 0, 1, 1, 3},
                MaskStack(1, 5, std::vector<std::int32_t>{0, 0, 0, 1, 1}));
  const gfs::MIoUReport r = gfs::miou(cm, split_of({0, 1}, {2, 3}));
  EXPECT_DOUBLE_EQ(*r.per_class_iou[0], 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(*r.per_class_iou[1], 1.0 / 3.0);
  EXPECT_FALSE(r.per_class_iou[2].has_value());
  EXPECT_EQ(*r.per_class_iou[3], 0.0);
  EXPECT_DOUBLE_EQ(r.base_miou, 0.5);
  EXPECT_DOUBLE_EQ(r.novel_miou, 0.0);
  EXPECT_DOUBLE_EQ(r.average_miou, 1.0 / 3.0);
}

TEST(MIoU, PerfectPredictionIsOne) {
  ConfusionMatrix cm(2);
  cm.accumulate(std::vector<std::int32_t>{0, 1, 1}, MaskStack(1, 3, std::vector<std::int32_t>{0, 1, 1}));
  const gfs::MIoUReport r = gfs::miou(cm, split_of({0}, {1}));
  EXPECT_EQ(r.novel_miou, 1.0);
  EXPECT_EQ(r.base_miou, 1.0);
  EXPECT_EQ(r.average_miou, 1.0);
}

TEST(MIoU, EmptyGroupAndNoPixels) {
  ConfusionMatrix cm(2);
  cm.accumulate(std::vector<std::int32_t>{0}, MaskStack(1, 1, 0));
  const gfs::MIoUReport r = gfs::miou(cm, split_of({0}, {1}));
  EXPECT_TRUE(std::isnan(r.novel_miou));
  EXPECT_EQ(r.average_miou, 1.0);
  EXPECT_GFS_ERROR(gfs::miou(ConfusionMatrix(2), split_of({0}, {1})), ErrorCode::NoScoredPixels);
}

TEST(MIoU, CsvFormatting) {
  ConfusionMatrix cm(3);
  cm.accumulate(std::vector<std::int32_t>{0, 0, 1}, MaskStack(1, 3, std::vector<std::int32_t>{0, 1, 1}));
  gfs::MIoUReport r = gfs::miou(cm, split_of({0, 1}, {2}));
  r.fold_id = 2;
  const std::vector<std::string> names{"class_0", "class_1", "class_2"};
  EXPECT_EQ(gfs::miou_csv_header(names),
            "fold,novel_miou,base_miou,average_miou,iou_class_0,iou_class_1,iou_class_2");
  EXPECT_EQ(gfs::miou_csv_row(r), "2,NA,50.00,50.00,50.00,50.00,NA");
}

TEST(Evaluate, OrderIndependent) {
  gfs::RunConfig cfg;
  cfg.height = cfg.width = 8;
  cfg.queries = 6;
  gfs::Episode ep = gfs::make_test_episode(cfg);
  const gfs::PrototypeBank bank = gfs::make_initial_bank(cfg);
  const auto w = gfs::make_learnable_edges(cfg.classes);
  for (gfs::Head head : {gfs::Head::Plain, gfs::Head::Graph}) {
    gfs::EvalOptions opts;
    opts.head = head;
    const ConfusionMatrix a = gfs::evaluate(ep.query, bank, w, opts);
    std::vector<gfs::Sample> reversed(ep.query.rbegin(), ep.query.rend());
    EXPECT_EQ(gfs::evaluate(reversed, bank, w, opts), a);
  }
}

TEST(Evaluate, OracleCenters) {
  gfs::RunConfig cfg;
  cfg.sigma = 0.0;
  const gfs::Episode ep = gfs::make_test_episode(cfg);
  gfs::EvalOptions opts;
  opts.head = gfs::Head::Plain;
  const ConfusionMatrix cm =
      gfs::evaluate(ep.query, gfs::make_oracle_bank(cfg), gfs::make_learnable_edges(8), opts);
  const gfs::MIoUReport r = gfs::miou(cm, gfs::fold_split(cfg).in_slot_space());
  for (const auto& iou : r.per_class_iou) {
    ASSERT_TRUE(iou.has_value());
    EXPECT_EQ(*iou, 1.0);
  }
  // Literal aggregation rescales each prototype, so the graph head keeps the ceiling too.
  opts.head = gfs::Head::Graph;
  opts.eq10_mode = gfs::Eq10Mode::Literal;
  const gfs::MIoUReport lit = gfs::miou(gfs::evaluate(ep.query, gfs::make_oracle_bank(cfg),
                                                      gfs::make_learnable_edges(8), opts),
                                        gfs::fold_split(cfg).in_slot_space());
  EXPECT_EQ(lit.average_miou, 1.0);
}

TEST(Evaluate, EnrichmentWorksOnACopy) {
  gfs::RunConfig cfg;
  cfg.height = cfg.width = 8;
  const gfs::Episode ep = gfs::make_test_episode(cfg);
  const gfs::PrototypeBank bank = gfs::make_initial_bank(cfg);
  const gfs::PrototypeBank before = bank;
  gfs::EvalOptions opts;
  opts.enrich = true;
  gfs::evaluate(ep.query, bank, gfs::make_learnable_edges(8), opts);
  EXPECT_EQ(bank, before);
}
