#include "gfs/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "gfs/error.hpp"

namespace gfs {

std::string_view to_string(Head head) { return head == Head::Plain ? "plain" : "graph"; }

Head parse_head(std::string_view text) {
  if (text == "plain") return Head::Plain;
  if (text == "graph") return Head::Graph;
  throw Error(ErrorCode::InvalidConfig, "head '" + std::string(text) + "'");
}

namespace {

[[noreturn]] void bad_value(std::string_view key, std::string_view value) {
  throw Error(ErrorCode::InvalidConfig,
              "invalid value '" + std::string(value) + "' for key '" + std::string(key) + "'");
}

template <typename T>
T parse_integer(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end) bad_value(key, value);
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  // std::from_chars for double is unavailable in older libstdc++; strtod on a copy.
  const std::string copy(value);
  char* end = nullptr;
  const double v = std::strtod(copy.c_str(), &end);
  if (copy.empty() || end != copy.c_str() + copy.size() || !std::isfinite(v)) {
    bad_value(key, value);
  }
  return v;
}

bool parse_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "steps",   "lr",       "alpha",     "lambda1",   "lambda2",     "gamma",
      "seed",    "edge-mode", "eq10-mode", "train-prototypes", "classes", "dim",
      "height",  "width",    "shots",     "queries",   "sigma",       "border-void",
      "fold",    "enrich",   "head",      "out",       "checkpoint",  "episode",
      "report",  "instances", "fd-step",  "tolerance", "inject-fault"};
  return keys;
}

void apply_setting(RunConfig& cfg, std::string_view key, std::string_view value) {
  auto& t = cfg.train;
  if (key == "steps") t.steps = parse_integer<std::int64_t>(key, value);
  else if (key == "lr") t.learning_rate = parse_real(key, value);
  else if (key == "alpha") t.alpha = parse_real(key, value);
  else if (key == "lambda1") t.lambda1 = parse_real(key, value);
  else if (key == "lambda2") t.lambda2 = parse_real(key, value);
  else if (key == "gamma") t.gamma = parse_real(key, value);
  else if (key == "seed") t.seed = parse_integer<std::uint64_t>(key, value);
  else if (key == "edge-mode") t.edge_mode = parse_edge_mode(value);
  else if (key == "eq10-mode") t.eq10_mode = parse_eq10_mode(value);
  else if (key == "train-prototypes") t.train_prototypes = parse_bool(key, value);
  else if (key == "classes") cfg.classes = parse_integer<std::size_t>(key, value);
  else if (key == "dim") cfg.dim = parse_integer<std::size_t>(key, value);
  else if (key == "height") cfg.height = parse_integer<std::size_t>(key, value);
  else if (key == "width") cfg.width = parse_integer<std::size_t>(key, value);
  else if (key == "shots") cfg.shots = parse_integer<std::size_t>(key, value);
  else if (key == "queries") cfg.queries = parse_integer<std::size_t>(key, value);
  else if (key == "sigma") cfg.sigma = parse_real(key, value);
  else if (key == "border-void") cfg.border_void = parse_bool(key, value);
  else if (key == "fold") cfg.fold = parse_integer<std::size_t>(key, value);
  else if (key == "enrich") cfg.enrich = parse_bool(key, value);
  else if (key == "head") cfg.head = parse_head(value);
  else if (key == "out") cfg.out = std::string(value);
  else if (key == "checkpoint") cfg.checkpoint = std::string(value);
  else if (key == "episode") cfg.episode = std::string(value);
  else if (key == "report") cfg.report = std::string(value);
  else if (key == "instances") cfg.instances = parse_integer<std::size_t>(key, value);
  else if (key == "fd-step") cfg.fd_step = parse_real(key, value);
  else if (key == "tolerance") cfg.tolerance = parse_real(key, value);
  else if (key == "inject-fault") {
    if (value == "none") cfg.fault = GradientFault::None;
    else if (value == "flip-contrastive-sign") cfg.fault = GradientFault::FlipContrastiveSign;
    else bad_value(key, value);
  } else {
    throw Error(ErrorCode::InvalidConfig, "unknown config key '" + std::string(key) + "'");
  }
}

void apply_config_text(RunConfig& cfg, std::string_view text) {
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::InvalidConfig, "line " + std::to_string(line_no) + ": expected key=value");
    }
    apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

void apply_config_file(RunConfig& cfg, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  apply_config_text(cfg, ss.str());
}

void RunConfig::validate() const {
  train.validate();
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error(ErrorCode::InvalidConfig, what);
  };
  require(classes >= 4 && classes % 4 == 0, "classes must be a positive multiple of 4");
  require(dim >= 1 && dim <= 4096, "dim must be in [1, 4096]");
  require(height >= 1 && width >= 1 && height * width <= (1u << 20), "grid must be 1..2^20 pixels");
  require(shots >= 1 && shots <= 1000, "shots must be in [1, 1000]");
  require(queries >= 1 && queries <= 1000, "queries must be in [1, 1000]");
  require(sigma >= 0.0 && sigma <= 10.0, "sigma must be in [0, 10]");
  require(fold < 4, "fold must be in 0..3");
  require(instances >= 1, "instances must be >= 1");
  require(fd_step > 0.0, "fd-step must be > 0");
  require(tolerance > 0.0, "tolerance must be > 0");
}

}  // namespace gfs
