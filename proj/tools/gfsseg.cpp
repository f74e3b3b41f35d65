// gfsseg: synthetic episodes, training, evaluation and gradient checking for
// the prototype-graph segmentation head.

#include <iostream>
#include <map>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "gfs/config.hpp"
#include "gfs/error.hpp"
#include "gfs/pipeline.hpp"

namespace {

constexpr int kExitValidation = 1;
constexpr int kExitIo = 2;

struct Flag {
  const char* key;
  const char* help;
};

// Shared flags plus every config key, so anything in a config file can be overridden.
constexpr Flag kFlags[] = {
    {"seed", "Run seed (U64)"},
    {"out", "Output directory"},
    {"steps", "Training steps"},
    {"lr", "Gradient-descent learning rate"},
    {"alpha", "Cosine classifier scale (default 10)"},
    {"lambda1", "Class contrastive loss weight (default 1)"},
    {"lambda2", "Class relationship loss weight (default 1)"},
    {"gamma", "EMA mixing coefficient (default 0.9)"},
    {"edge-mode", "learnable | fixed"},
    {"eq10-mode", "default | literal"},
    {"train-prototypes", "Apply loss gradients to prototypes (true | false)"},
    {"fold", "Fold id 0..3"},
    {"shots", "Support samples per novel class"},
    {"classes", "Number of classes (multiple of 4)"},
    {"dim", "Feature dimension"},
    {"height", "Grid height"},
    {"width", "Grid width"},
    {"queries", "Query samples per episode"},
    {"sigma", "Feature noise standard deviation"},
    {"border-void", "Ignore a one-pixel border frame (true | false)"},
    {"enrich", "Query enrichment from ground-truth masks (true | false)"},
    {"head", "Evaluation head: graph | plain"},
    {"checkpoint", "GFSP checkpoint path"},
    {"episode", "GFSE episode path (synthesized when omitted)"},
    {"report", "Report CSV path"},
    {"instances", "Gradcheck instance count"},
    {"fd-step", "Finite-difference step"},
    {"tolerance", "Gradcheck relative-error tolerance"},
    {"inject-fault", "none | flip-contrastive-sign (checker self-test)"},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prototype-graph few-shot segmentation head"};
  app.require_subcommand(1);

  std::optional<std::string> config_path;
  std::map<std::string, std::optional<std::string>> flags;
  auto add_shared = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "Flat key=value config file");
    for (const Flag& f : kFlags) {
      cmd->add_option(std::string("--") + f.key, flags[f.key], f.help);
    }
  };

  CLI::App* synth = app.add_subcommand("synth", "Write synthetic GFSE episodes and the oracle checkpoint");
  CLI::App* train = app.add_subcommand("train", "Train prototypes and edge weights on an episode");
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint and write the mIoU report");
  CLI::App* gradcheck = app.add_subcommand("gradcheck", "Compare analytic and finite-difference gradients");
  for (CLI::App* cmd : {synth, train, eval, gradcheck}) add_shared(cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitValidation;
  }

  try {
    gfs::RunConfig cfg;
    if (config_path) gfs::apply_config_file(cfg, *config_path);
    for (const auto& [key, value] : flags) {
      if (value) gfs::apply_setting(cfg, key, *value);
    }
    if (synth->parsed()) return gfs::cmd_synth(cfg, std::cout);
    if (train->parsed()) return gfs::cmd_train(cfg, std::cout);
    if (eval->parsed()) return gfs::cmd_eval(cfg, std::cout);
    return gfs::cmd_gradcheck(cfg, std::cout);
  } catch (const gfs::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return e.code() == gfs::ErrorCode::IoError ? kExitIo : kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  }
}
