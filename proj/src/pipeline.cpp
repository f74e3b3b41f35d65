#include "gfs/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "gfs/checkpoint.hpp"
#include "gfs/error.hpp"

namespace gfs {

SeedPlan plan_seeds(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  SeedPlan plan;
  plan.centers = rng();
  plan.train_episode = rng();
  plan.test_episode = rng();
  plan.bank = rng();
  return plan;
}

EpisodeSpec episode_spec(const RunConfig& cfg) {
  const SeedPlan seeds = plan_seeds(cfg.train.seed);
  EpisodeSpec spec = make_episode_spec(cfg.classes, cfg.dim, cfg.shots, cfg.height, cfg.width,
                                       cfg.sigma, seeds.centers);
  spec.num_query = cfg.queries;
  spec.border_void = cfg.border_void;
  return spec;
}

FoldSplit fold_split(const RunConfig& cfg) { return make_fold_split(cfg.classes, cfg.fold); }

Episode make_train_episode(const RunConfig& cfg) {
  EpisodeSpec spec = episode_spec(cfg);
  spec.seed = plan_seeds(cfg.train.seed).train_episode;
  return sample_episode(spec, fold_split(cfg));
}

Episode make_test_episode(const RunConfig& cfg) {
  EpisodeSpec spec = episode_spec(cfg);
  spec.seed = plan_seeds(cfg.train.seed).test_episode;
  return sample_episode(spec, fold_split(cfg));
}

namespace {

std::vector<std::string> slot_names(const FoldSplit& split) {
  std::vector<std::string> names;
  for (std::size_t id : split.slot_classes()) names.push_back("class_" + std::to_string(id));
  return names;
}

}  // namespace

PrototypeBank make_initial_bank(const RunConfig& cfg) {
  const FoldSplit split = fold_split(cfg);
  const PrototypeBank random =
      init_bank(cfg.classes, cfg.dim, split.base_class_ids.size(), plan_seeds(cfg.train.seed).bank);
  return PrototypeBank::from_state(random.base_count(), 0, slot_names(split), random.current(),
                                   random.previous());
}

PrototypeBank make_oracle_bank(const RunConfig& cfg) {
  const FoldSplit split = fold_split(cfg);
  const EpisodeSpec spec = episode_spec(cfg);
  const auto slots = split.slot_classes();
  Matrix centers(cfg.classes, cfg.dim);
  for (std::size_t s = 0; s < slots.size(); ++s) {
    const auto row = spec.cluster_centers.row(slots[s]);
    std::copy(row.begin(), row.end(), centers.row(s).begin());
  }
  return PrototypeBank::from_state(split.base_class_ids.size(), 0, slot_names(split), centers,
                                   centers);
}

EdgeWeightMatrix make_edges(const RunConfig& cfg) {
  return cfg.train.edge_mode == EdgeMode::Fixed ? make_fixed_edges(cfg.classes)
                                                : make_learnable_edges(cfg.classes);
}

TrainResult train_on_episode(const Episode& episode, PrototypeBank bank,
                             EdgeWeightMatrix weights, const TrainConfig& cfg, bool enrich) {
  cfg.validate();
  if (cfg.edge_mode == EdgeMode::Fixed) weights.frozen = true;
  TrainResult result{std::move(bank), std::move(weights), {}};
  result.history.reserve(static_cast<std::size_t>(cfg.steps));
  for (std::int64_t step = 0; step < cfg.steps; ++step) {
    update_from_support(result.bank, episode.support, cfg.gamma);
    if (enrich) enrich_from_query(result.bank, episode.query, cfg.gamma);
    result.history.push_back(train_step(episode.query, result.bank, result.weights, cfg));
  }
  return result;
}

std::vector<std::int32_t> classify(const FeatureMap& features, const PrototypeBank& bank,
                                   const EdgeWeightMatrix& weights, const EvalOptions& opts) {
  if (opts.head == Head::Plain) return predict(classifier_logits(features, bank.current(), opts.alpha));
  const Matrix norm = normalize_between(between_class_similarities(bank));
  const Matrix enhanced = message_passing(bank, norm, weights, opts.eq10_mode);
  return predict(classifier_logits(features, enhanced, opts.alpha));
}

ConfusionMatrix evaluate(std::span<const Sample> query, const PrototypeBank& bank,
                         const EdgeWeightMatrix& weights, const EvalOptions& opts) {
  PrototypeBank working = bank;
  if (opts.enrich) enrich_from_query(working, query, opts.gamma);
  ConfusionMatrix cm(bank.num_classes());
  for (const Sample& s : query) {
    cm.accumulate(classify(s.features, working, weights, opts), s.labels);
  }
  return cm;
}

GradcheckInstance random_gradcheck_instance(std::mt19937_64& rng) {
  auto uniform_int = [&rng](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const std::size_t n = uniform_int(2, 5);
  const std::size_t dim = uniform_int(2, 4);
  const std::size_t side = uniform_int(2, 6);
  const std::size_t base = uniform_int(1, n);

  Matrix current(n, dim), previous(n, dim);
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t k = 0; k < dim; ++k) {
      current(c, k) = normal(rng);
      previous(c, k) = current(c, k) + 0.3 * normal(rng);
    }
  }
  EdgeWeightMatrix weights = make_learnable_edges(n);
  for (double& w : weights.weights.data()) w = 0.5 + unit(rng);

  std::vector<double> values(side * side * dim);
  for (double& v : values) v = normal(rng);
  std::vector<std::int32_t> labels(side * side);
  for (auto& l : labels) {
    l = unit(rng) < 0.1 ? kIgnoreLabel : static_cast<std::int32_t>(uniform_int(0, n - 1));
  }
  labels[0] = static_cast<std::int32_t>(uniform_int(0, n - 1));

  GradcheckInstance inst{{}, PrototypeBank::from_state(base, 1, std::vector<std::string>(n, "c"),
                                                       std::move(current), std::move(previous)),
                         std::move(weights)};
  inst.samples.push_back({FeatureMap(side, side, dim, std::move(values)),
                          MaskStack(side, side, std::move(labels))});
  return inst;
}

GradcheckSummary run_gradcheck(const RunConfig& cfg) {
  cfg.validate();
  constexpr LossTerm kTerms[] = {LossTerm::Segmentation, LossTerm::Contrastive,
                                 LossTerm::CrossClass, LossTerm::SelfSimilarity,
                                 LossTerm::Total};
  GradcheckSummary summary;
  for (LossTerm term : kTerms) summary.terms.push_back({term, 0.0, 0, {}});

  std::mt19937_64 rng(cfg.train.seed);
  TrainConfig tc = cfg.train;
  tc.edge_mode = EdgeMode::Learnable;
  for (std::size_t idx = 0; idx < cfg.instances; ++idx) {
    const GradcheckInstance inst = random_gradcheck_instance(rng);
    for (auto& tr : summary.terms) {
      const GradientBundle a =
          analytic_gradient(inst.samples, inst.bank, inst.weights, tc, tr.term, cfg.fault);
      const GradientBundle f =
          finite_difference_gradient(inst.samples, inst.bank, inst.weights, tc, cfg.fd_step, tr.term);
      const GradientDiscrepancy d = compare_gradients(a, f);
      if (idx == 0 || d.max_relative_error > tr.max_relative_error) {
        tr.max_relative_error = d.max_relative_error;
        tr.instance = idx;
        tr.worst = d;
      }
    }
  }
  summary.passed = true;
  for (const auto& tr : summary.terms) {
    summary.passed = summary.passed && tr.max_relative_error < cfg.tolerance;
  }
  return summary;
}

namespace {

void prepare_out_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir.string() + ": " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot create " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

void print_pixel_counts(std::ostream& log, const char* name, const std::vector<Sample>& samples,
                        const std::vector<std::string>& class_names) {
  log << name << " (" << samples.size() << " samples):";
  for (std::size_t c = 0; c < class_names.size(); ++c) {
    std::size_t count = 0;
    for (const Sample& s : samples) count += s.labels.count(c);
    log << ' ' << class_names[c] << '=' << count;
  }
  log << '\n';
}

Episode episode_or_synthetic(const RunConfig& cfg, bool test) {
  if (!cfg.episode.empty()) return load_feature_episode(cfg.episode);
  return test ? make_test_episode(cfg) : make_train_episode(cfg);
}

}  // namespace

int cmd_synth(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Episode train = make_train_episode(cfg);
  const Episode test = make_test_episode(cfg);
  const PrototypeBank oracle = make_oracle_bank(cfg);
  prepare_out_dir(cfg.out);
  save_episode(cfg.out / "train.gfse", train);
  save_episode(cfg.out / "test.gfse", test);
  save_checkpoint(cfg.out / "oracle.gfsp", oracle, make_learnable_edges(cfg.classes));
  print_pixel_counts(log, "train support", train.support, oracle.class_names());
  print_pixel_counts(log, "train query", train.query, oracle.class_names());
  print_pixel_counts(log, "test query", test.query, oracle.class_names());
  return 0;
}

int cmd_train(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  const Episode episode = episode_or_synthetic(cfg, false);
  for (const Sample& s : episode.query) s.labels.validate(cfg.classes);
  for (const Sample& s : episode.support) s.labels.validate(cfg.classes);
  const TrainResult result =
      train_on_episode(episode, make_initial_bank(cfg), make_edges(cfg), cfg.train, cfg.enrich);

  prepare_out_dir(cfg.out);
  const auto checkpoint = cfg.checkpoint.empty() ? cfg.out / "checkpoint.gfsp" : cfg.checkpoint;
  const auto report = cfg.report.empty() ? cfg.out / "loss.csv" : cfg.report;
  save_checkpoint(checkpoint, result.bank, result.weights);
  std::string csv = loss_csv_header() + "\n";
  for (std::size_t step = 0; step < result.history.size(); ++step) {
    csv += loss_csv_row(step, result.history[step]) + "\n";
  }
  write_text(report, csv);
  if (!result.history.empty()) {
    log << "step 0 total " << result.history.front().total << ", step "
        << result.history.size() - 1 << " total " << result.history.back().total << '\n';
  }
  log << "wrote " << checkpoint.string() << " and " << report.string() << '\n';
  return 0;
}

int cmd_eval(const RunConfig& cfg, std::ostream& log) {
  cfg.validate();
  if (cfg.checkpoint.empty()) {
    throw Error(ErrorCode::InvalidConfig, "eval needs --checkpoint");
  }
  const Checkpoint ckpt = load_checkpoint(cfg.checkpoint);
  const Episode episode = episode_or_synthetic(cfg, true);
  const EvalOptions opts{cfg.head, cfg.train.eq10_mode, cfg.train.alpha, cfg.enrich,
                         cfg.train.gamma};
  const FoldSplit split = make_fold_split(cfg.classes, cfg.fold);
  if (ckpt.bank.num_classes() != split.num_classes() ||
      ckpt.bank.base_count() != split.base_class_ids.size()) {
    throw Error(ErrorCode::ShapeMismatch, "checkpoint partition does not match the fold split");
  }
  const ConfusionMatrix cm = evaluate(episode.query, ckpt.bank, ckpt.weights, opts);
  const MIoUReport report = miou(cm, split.in_slot_space());
  const std::string text =
      miou_csv_header(ckpt.bank.class_names()) + "\n" + miou_csv_row(report) + "\n";
  prepare_out_dir(cfg.out);
  const auto path = cfg.report.empty() ? cfg.out / "report.csv" : cfg.report;
  write_text(path, text);
  log << text;
  return 0;
}

int cmd_gradcheck(const RunConfig& cfg, std::ostream& log) {
  const GradcheckSummary summary = run_gradcheck(cfg);
  char line[256];
  for (const auto& tr : summary.terms) {
    const bool ok = tr.max_relative_error < cfg.tolerance;
    std::snprintf(line, sizeof line, "%-6s max_rel_err=%.3e %s", std::string(to_string(tr.term)).c_str(),
                  tr.max_relative_error, ok ? "PASS" : "FAIL");
    log << line;
    if (!ok) {
      log << " (instance " << tr.instance << ", "
          << (tr.worst.in_weights ? "edge weight " : "prototype ") << tr.worst.row << ','
          << tr.worst.col << ')';
    }
    log << '\n';
  }
  log << (summary.passed ? "gradcheck passed" : "gradcheck FAILED") << '\n';
  return summary.passed ? 0 : 1;
}

}  // namespace gfs
