#include "imclab/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "imclab/estimator.hpp"

namespace imclab {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not a number: '" + v + "'");
  }
}

std::int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const std::int64_t x = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError(key + ": not an integer: '" + v + "'");
  }
}

std::vector<std::string> split_csv(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

void apply(ExperimentConfig& c, const std::string& key,
           const std::string& value) {
  if (key == "kernel.kind") c.kernel_kind = value;
  else if (key == "kernel.J") c.kernel_J = static_cast<int>(parse_int(key, value));
  else if (key == "kernel.g0") c.kernel_g0 = parse_double(key, value);
  else if (key == "grid.d") c.dim = static_cast<int>(parse_int(key, value));
  else if (key == "grid.n") c.n = static_cast<int>(parse_int(key, value));
  else if (key == "grid.L") c.L = parse_double(key, value);
  else if (key == "reg.mode") c.reg_mode = value;
  else if (key == "reg.J") c.reg_J = static_cast<int>(parse_int(key, value));
  else if (key == "reg.delta") c.reg_delta = parse_double(key, value);
  else if (key == "chaos.beta") c.beta = parse_double(key, value);
  else if (key == "tf.center") {
    const auto parts = split_csv(value);
    if (parts.empty() || parts.size() > 3)
      throw ConfigError("tf.center: expect 1-3 comma-separated coordinates");
    c.tf_center = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i < parts.size(); ++i)
      c.tf_center[i] = parse_double(key, parts[i]);
  } else if (key == "tf.radius") c.tf_radius = parse_double(key, value);
  else if (key == "tf.amplitude") c.tf_amplitude = parse_double(key, value);
  else if (key == "est.k") c.k = static_cast<int>(parse_int(key, value));
  else if (key == "est.scale_rule") c.scale_rule = value;
  else if (key == "est.scales") {
    c.scales.clear();
    for (const auto& p : split_csv(value))
      c.scales.push_back(parse_double(key, p));
  } else if (key == "est.rule_eta0") c.rule_eta0 = parse_double(key, value);
  else if (key == "est.rule_rho") c.rule_rho = parse_double(key, value);
  else if (key == "est.rule_K") c.rule_K = parse_double(key, value);
  else if (key == "est.rule_count")
    c.rule_count = static_cast<int>(parse_int(key, value));
  else if (key == "est.weight") c.weight = value;
  else if (key == "est.path") c.path = value;
  else if (key == "est.u_strides") {
    c.u_strides.clear();
    for (const auto& p : split_csv(value))
      c.u_strides.push_back(static_cast<int>(parse_int(key, p)));
  } else if (key == "sampler.kind") c.sampler_kind = value;
  else if (key == "mc.replicas") c.replicas = parse_int(key, value);
  else if (key == "mc.seed")
    c.seed = static_cast<std::uint64_t>(parse_int(key, value));
  else if (key == "mc.workers") c.workers = static_cast<int>(parse_int(key, value));
  else if (key == "out.dir") c.out_dir = value;
  else if (key == "debug.corrupt_g_offset")
    c.corrupt_g_offset = parse_double(key, value);
  else
    throw ConfigError("unknown config key: '" + key + "'");
}

template <typename T>
void in_set(const std::string& key, const T& v, std::initializer_list<T> set) {
  for (const auto& s : set)
    if (v == s) return;
  throw ConfigError(key + ": invalid value");
}

}  // namespace

ExperimentConfig parse_config_text(const std::string& text) {
  ExperimentConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    apply(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }

  in_set<std::string>("kernel.kind", cfg.kernel_kind,
                      {"gff", "purelog", "logconst"});
  in_set<std::string>("reg.mode", cfg.reg_mode, {"spectral", "mollify"});
  in_set<std::string>("est.scale_rule", cfg.scale_rule,
                      {"explicit", "geometric", "doubleexp"});
  in_set<std::string>("est.weight", cfg.weight,
                      {"exact", "regularized", "frozeng"});
  in_set<std::string>("est.path", cfg.path, {"direct", "fast"});
  in_set<std::string>("sampler.kind", cfg.sampler_kind,
                      {"auto", "gff", "cholesky"});
  if (cfg.replicas < 1) throw ConfigError("mc.replicas must be >= 1");
  if (cfg.workers < 1) throw ConfigError("mc.workers must be >= 1");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> warnings;
  const Grid grid = build_grid(cfg.dim, cfg.n, cfg.L);
  const double h = grid.spacing;

  if (cfg.kernel_kind == "gff" && cfg.dim != 2)
    throw ConfigError("the spectral square kernel is two-dimensional");
  if (std::abs(cfg.beta) >= std::sqrt(static_cast<double>(cfg.dim)))
    warnings.push_back("chaos.beta outside (0, sqrt(d)): out of the L2 phase");

  std::vector<double> scales = cfg.scales;
  if (cfg.scale_rule == "geometric")
    scales = geometric_scales(cfg.rule_eta0, cfg.rule_rho, cfg.rule_count);
  else if (cfg.scale_rule == "doubleexp")
    scales = paper_double_exp_scales(cfg.rule_K, cfg.rule_count);
  if (scales.empty()) throw ConfigError("no estimator scales");

  const double delta =
      cfg.reg_mode == "spectral" ? 1.0 / cfg.reg_J : cfg.reg_delta;
  for (double eta : scales) {
    if (eta < 3.0 * h)
      throw ConfigError("scale " + std::to_string(eta) +
                        " below the hard resolution floor 3h");
    if (eta < 8.0 * h)
      warnings.push_back("scale " + std::to_string(eta) +
                         " below the recommended 8h margin");
    if (eta < 2.0 * delta)
      throw ConfigError("scale " + std::to_string(eta) +
                        " not separated from the regularization scale");
    if (eta < 20.0 * delta)
      warnings.push_back("scale " + std::to_string(eta) +
                         " below the recommended 20*delta margin");
  }
  if (delta < 2.0 * h && cfg.reg_mode == "mollify")
    warnings.push_back("reg.delta below 2h: mollification unresolved");

  const TestFunction tf(cfg.dim, cfg.tf_center, cfg.tf_radius,
                        cfg.tf_amplitude);
  tf.require_clearance(grid, scales.front());
  const double clearance_target = 2.0 * scales.front();
  for (int a = 0; a < cfg.dim; ++a) {
    const double lo = cfg.tf_center[a] - cfg.tf_radius;
    const double hi = cfg.L - (cfg.tf_center[a] + cfg.tf_radius);
    if (std::min(lo, hi) <= clearance_target) {
      warnings.push_back("support clearance below twice the largest scale");
      break;
    }
  }
  return warnings;
}

namespace {

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string canonical_text(const ExperimentConfig& c) {
  std::ostringstream o;
  o << "kernel.kind = " << c.kernel_kind << "\n";
  o << "kernel.J = " << c.kernel_J << "\n";
  o << "kernel.g0 = " << fmt(c.kernel_g0) << "\n";
  o << "grid.d = " << c.dim << "\n";
  o << "grid.n = " << c.n << "\n";
  o << "grid.L = " << fmt(c.L) << "\n";
  o << "reg.mode = " << c.reg_mode << "\n";
  o << "reg.J = " << c.reg_J << "\n";
  o << "reg.delta = " << fmt(c.reg_delta) << "\n";
  o << "chaos.beta = " << fmt(c.beta) << "\n";
  o << "tf.center = " << fmt(c.tf_center[0]) << "," << fmt(c.tf_center[1])
    << "," << fmt(c.tf_center[2]) << "\n";
  o << "tf.radius = " << fmt(c.tf_radius) << "\n";
  o << "tf.amplitude = " << fmt(c.tf_amplitude) << "\n";
  o << "est.k = " << c.k << "\n";
  o << "est.scale_rule = " << c.scale_rule << "\n";
  o << "est.scales = ";
  for (std::size_t i = 0; i < c.scales.size(); ++i)
    o << (i ? "," : "") << fmt(c.scales[i]);
  o << "\n";
  o << "est.rule_eta0 = " << fmt(c.rule_eta0) << "\n";
  o << "est.rule_rho = " << fmt(c.rule_rho) << "\n";
  o << "est.rule_K = " << fmt(c.rule_K) << "\n";
  o << "est.rule_count = " << c.rule_count << "\n";
  o << "est.weight = " << c.weight << "\n";
  o << "est.path = " << c.path << "\n";
  o << "est.u_strides = ";
  for (std::size_t i = 0; i < c.u_strides.size(); ++i)
    o << (i ? "," : "") << c.u_strides[i];
  o << "\n";
  o << "sampler.kind = " << c.sampler_kind << "\n";
  o << "mc.replicas = " << c.replicas << "\n";
  o << "mc.seed = " << c.seed << "\n";
  o << "debug.corrupt_g_offset = " << fmt(c.corrupt_g_offset) << "\n";
  // mc.workers and out.dir deliberately excluded: they must not affect
  // results, and the hash asserts exactly that.
  return o.str();
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string text = canonical_text(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace imclab
