#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "expect_error.hpp"
#include "gfs/config.hpp"

using gfs::ErrorCode;
using gfs::RunConfig;

TEST(Config, Defaults) {
  const RunConfig cfg;
  EXPECT_EQ(cfg.train.alpha, 10.0);
  EXPECT_EQ(cfg.train.lambda1, 1.0);
  EXPECT_EQ(cfg.train.lambda2, 1.0);
  EXPECT_EQ(cfg.train.gamma, 0.9);
  EXPECT_EQ(cfg.train.edge_mode, gfs::EdgeMode::Learnable);
  EXPECT_EQ(cfg.train.eq10_mode, gfs::Eq10Mode::Neighbor);
  EXPECT_EQ(cfg.fd_step, 1e-5);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, EveryKeyIsAccepted) {
  const std::pair<const char*, const char*> samples[] = {
      {"steps", "3"},         {"lr", "0.5"},          {"alpha", "4"},
      {"lambda1", "0"},       {"lambda2", "2"},       {"gamma", "0.25"},
      {"seed", "18446744073709551615"},               {"edge-mode", "fixed"},
      {"eq10-mode", "literal"},                       {"train-prototypes", "false"},
      {"classes", "12"},      {"dim", "3"},           {"height", "5"},
      {"width", "6"},         {"shots", "2"},         {"queries", "7"},
      {"sigma", "0"},         {"border-void", "true"}, {"fold", "3"},
      {"enrich", "1"},        {"head", "plain"},      {"out", "o"},
      {"checkpoint", "c.gfsp"}, {"episode", "e.gfse"}, {"report", "r.csv"},
      {"instances", "4"},     {"fd-step", "1e-6"},    {"tolerance", "1e-4"},
      {"inject-fault", "flip-contrastive-sign"}};
  EXPECT_EQ(std::size(samples), gfs::config_keys().size());
  RunConfig cfg;
  for (const auto& [k, v] : samples) {
    EXPECT_NO_THROW(gfs::apply_setting(cfg, k, v)) << k;
  }
  EXPECT_EQ(cfg.train.steps, 3);
  EXPECT_EQ(cfg.train.seed, 18446744073709551615ull);
  EXPECT_EQ(cfg.train.edge_mode, gfs::EdgeMode::Fixed);
  EXPECT_FALSE(cfg.train.train_prototypes);
  EXPECT_TRUE(cfg.border_void);
  EXPECT_TRUE(cfg.enrich);
  EXPECT_EQ(cfg.head, gfs::Head::Plain);
  EXPECT_EQ(cfg.checkpoint, "c.gfsp");
  EXPECT_EQ(cfg.fault, gfs::GradientFault::FlipContrastiveSign);
  EXPECT_NO_THROW(cfg.validate());
}

TEST(Config, RejectsBadInput) {
  RunConfig cfg;
  EXPECT_GFS_ERROR(gfs::apply_setting(cfg, "stepz", "1"), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::apply_setting(cfg, "steps", "1.5"), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::apply_setting(cfg, "lr", "fast"), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::apply_setting(cfg, "edge-mode", "sometimes"), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::apply_setting(cfg, "enrich", "maybe"), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::apply_setting(cfg, "seed", "-1"), ErrorCode::InvalidConfig);

  RunConfig bad;
  bad.classes = 10;
  EXPECT_GFS_ERROR(bad.validate(), ErrorCode::InvalidConfig);
  bad = {};
  bad.fold = 4;
  EXPECT_GFS_ERROR(bad.validate(), ErrorCode::InvalidConfig);
  bad = {};
  bad.train.gamma = 2;
  EXPECT_GFS_ERROR(bad.validate(), ErrorCode::GammaOutOfRange);
}

TEST(Config, TextFormat) {
  RunConfig cfg;
  gfs::apply_config_text(cfg, "# run\nsteps = 12\n\n  lambda2=0.5   # half\nhead=plain\n");
  EXPECT_EQ(cfg.train.steps, 12);
  EXPECT_EQ(cfg.train.lambda2, 0.5);
  EXPECT_EQ(cfg.head, gfs::Head::Plain);
  EXPECT_GFS_ERROR(gfs::apply_config_text(cfg, "steps\n"), ErrorCode::InvalidConfig);
  EXPECT_GFS_ERROR(gfs::apply_config_text(cfg, "colour = red\n"), ErrorCode::InvalidConfig);
}

TEST(Config, File) {
  const auto path = std::filesystem::temp_directory_path() / "gfs_config_test.cfg";
  std::ofstream(path) << "seed = 99\nfold = 2\n";
  RunConfig cfg;
  gfs::apply_config_file(cfg, path);
  EXPECT_EQ(cfg.train.seed, 99u);
  EXPECT_EQ(cfg.fold, 2u);
  std::filesystem::remove(path);
  EXPECT_GFS_ERROR(gfs::apply_config_file(cfg, path), ErrorCode::IoError);
}
