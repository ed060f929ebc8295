#include "qmcmc/config.hpp"

#include "qmcmc/planner.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace qmcmc {

namespace {

using VT = ValueType;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  if (trim(s).empty()) return out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

bool parse_int(const std::string& s, std::int64_t* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') return false;
  if (out) *out = v;
  return true;
}

bool parse_u64(const std::string& s, std::uint64_t* out) {
  if (s.empty() || s[0] == '-') return false;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (errno != 0 || *end != '\0') return false;
  if (out) *out = v;
  return true;
}

bool parse_real(const std::string& s, double* out) {
  if (s.empty()) return false;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (*end != '\0') return false;
  if (out) *out = v;
  return true;
}

const char* type_name(VT t) {
  switch (t) {
    case VT::Int: return "integer";
    case VT::Real: return "real";
    case VT::Bool: return "bool";
    case VT::String: return "string";
    case VT::IntList: return "integer list";
    case VT::RealList: return "real list";
    case VT::StringList: return "string list";
  }
  return "?";
}

bool scalar_ok(VT t, const std::string& v) {
  switch (t) {
    case VT::Int:
    case VT::IntList: return parse_int(v, nullptr) || parse_u64(v, nullptr);
    case VT::Real:
    case VT::RealList: return parse_real(v, nullptr);
    case VT::Bool: return v == "true" || v == "false";
    case VT::String:
    case VT::StringList: return !v.empty();
  }
  return false;
}

bool is_list(VT t) { return t == VT::IntList || t == VT::RealList || t == VT::StringList; }

// Normalizes a raw value for its type, or throws naming the key.
std::string normalize(const std::string& key, VT type, const std::string& raw) {
  if (!is_list(type)) {
    if (!scalar_ok(type, raw))
      throw std::invalid_argument(key + ": expected " + type_name(type) + ", got '" + raw + "'");
    return raw;
  }
  std::string out;
  for (const auto& item : split_list(raw)) {
    if (!scalar_ok(type, item))
      throw std::invalid_argument(key + ": expected " + type_name(type) + ", bad element '" +
                                  item + "'");
    if (!out.empty()) out += ", ";
    out += item;
  }
  return out;
}

const std::set<std::string> kMultipliers = {"eta", "S", "T", "K", "b", "m", "sigma_hat"};

}  // namespace

const std::map<std::string, SchemaEntry>& config_schema() {
  static const std::map<std::string, SchemaEntry> schema = {
      {"experiment", {VT::String, "", "sampler | gradest | jordan | optimize | scaling_sweep | table1"}},
      {"schedule", {VT::String, "qsvrg_hmc", "sampler schedule name"}},
      {"eps", {VT::Real, "0.1", "accuracy target"}},
      {"seeds", {VT::IntList, "1", "one run per seed"}},
      {"chains", {VT::Int, "100", "independent chains per run"}},
      {"workers", {VT::Int, "1", "worker threads"}},
      {"output", {VT::String, "", "output directory (overridden by --out)"}},
      {"init", {VT::String, "star", "chain start: star | zero | gaussian (N(x*, I/L))"}},
      {"model.kind", {VT::String, "quadratic", "quadratic | mixture | perturbed"}},
      {"model.d", {VT::Int, "2", "dimension"}},
      {"model.n", {VT::Int, "64", "number of components (quadratic)"}},
      {"model.center_radius", {VT::Real, "1", "radius of the center sphere (quadratic)"}},
      {"model.curvature_spread", {VT::Real, "0", "curvature range [1-s, 1+s] (quadratic)"}},
      {"model.noise_amplitude", {VT::Real, "0.5", "multiplicative noise amplitude"}},
      {"model.domain_scale", {VT::Real, "10", "domain radius in units of sqrt(d/mu) (quadratic)"}},
      {"model.seed", {VT::Int, "1", "seed for drawing centers (quadratic)"}},
      {"model.separation", {VT::Real, "1.5", "mode offset m (mixture)"}},
      {"model.scale", {VT::Real, "1", "mode width s (mixture)"}},
      {"model.domain_radius", {VT::Real, "0", "domain radius; 0 picks the model default"}},
      {"model.mu", {VT::Real, "1", "strong convexity of the convex part (perturbed)"}},
      {"model.amplitude", {VT::Real, "0.05", "perturbation amplitude (perturbed)"}},
      {"model.frequency", {VT::Real, "50", "perturbation frequency (perturbed)"}},
      {"plan.kl0", {VT::Real, "0", "initial KL; 0 picks the default"}},
      {"qme.c_q", {VT::Real, "1", "quantum cost constant"}},
      {"qme.log_factor", {VT::Real, "0", "log factor; 0 picks ln d * ln 1000"}},
      {"pipeline.mode", {VT::String, "contract", "auto | statevector | contract"}},
      {"pipeline.qubit_budget", {VT::Int, "24", "statevector qubit budget"}},
      {"pipeline.jordan_constant", {VT::Real, "1500", "Jordan error constant"}},
      {"zeroth.regime", {VT::String, "full_smoothness", "full_smoothness | smoothness"}},
      {"run.record_every", {VT::Int, "0", "record every k proposals; 0 keeps the end only"}},
      {"metrics.bootstrap", {VT::Int, "50", "bootstrap resamples for empirical W2"}},
      {"metrics.w2_max_points", {VT::Int, "300", "chains used for empirical W2"}},
      {"metrics.tv_bins", {VT::Int, "30", "histogram bins for TV (d = 1)"}},
      {"sweep.param", {VT::String, "eps", "eps | n | d"}},
      {"sweep.values", {VT::RealList, "", "sweep grid"}},
      {"sweep.phase", {VT::String, "all", "ledger phases counted: all | estimate"}},
      {"gradest.method", {VT::String, "smoothing", "smoothing | pipeline | robust"}},
      {"gradest.trials", {VT::Int, "1000", "estimator calls"}},
      {"gradest.nu", {VT::Real, "0.01", "smoothing radius"}},
      {"gradest.b", {VT::Int, "100", "smoothing directions"}},
      {"gradest.sigma_hat", {VT::Real, "0.5", "target standard deviation (pipeline)"}},
      {"gradest.eps", {VT::Real, "0.5", "accuracy (robust)"}},
      {"gradest.offset", {VT::Real, "0", "x = x* + offset * (1, ..., 1)"}},
      {"jordan.trials", {VT::Int, "100", "Jordan runs"}},
      {"jordan.eps", {VT::Real, "1e-6", "evaluation error"}},
      {"jordan.L", {VT::Real, "0", "gradient bound; 0 picks 2 |grad f(x0)| + 1"}},
      {"jordan.offset", {VT::Real, "0.3", "x0 = x* + offset * (1, ..., 1)"}},
      {"jordan.qubit_budget", {VT::Int, "24", "qubit budget"}},
      {"optimize.eps", {VT::Real, "0.2", "optimality gap target"}},
      {"optimize.beta_constant", {VT::Real, "2", "beta = c d / eps"}},
      {"optimize.repeat_count", {VT::Int, "10", "chains"}},
      {"optimize.eta", {VT::Real, "0", "step size; 0 uses the planned value"}},
      {"optimize.steps", {VT::Int, "0", "steps; 0 uses the planned value"}},
      {"optimize.sigma_hat_sq", {VT::Real, "0", "gradient variance target; 0 uses the planned value"}},
      {"optimize.v_scale", {VT::Real, "1", "smoothing radius as a multiple of eps / (M d)"}},
      {"optimize.allow_v_violation", {VT::Bool, "false", "allow v above eps / (M d)"}},
      {"optimize.init_radius", {VT::Real, "2", "start ball radius"}},
      {"optimize.tv_target", {VT::Real, "0.1", "sampler TV target"}},
      {"table.schedules", {VT::StringList, "qsvrg_hmc, svrg_hmc, qcv_hmc, cv_hmc", "schedules"}},
      {"table.n_values", {VT::IntList, "64, 256, 1024", "n sweep at fixed eps"}},
      {"table.eps_values", {VT::RealList, "0.2, 0.1, 0.05, 0.025", "eps sweep at fixed n"}},
      {"table.eps", {VT::Real, "0.1", "eps for the n sweep"}},
      {"table.n", {VT::Int, "64", "n for the eps sweep"}},
      {"table.chains", {VT::Int, "4", "chains per point"}},
      {"table.d", {VT::Int, "1", "dimension of the table models"}},
  };
  return schema;
}

namespace {

const SchemaEntry* lookup(const std::string& key) {
  const auto& s = config_schema();
  auto it = s.find(key);
  if (it != s.end()) return &it->second;
  static const SchemaEntry multiplier{VT::Real, "1", "constant multiplier"};
  if (key.rfind("constants.", 0) == 0 && kMultipliers.count(key.substr(10))) return &multiplier;
  return nullptr;
}

}  // namespace

ExperimentConfig ExperimentConfig::parse(const std::string& text, const std::string& source) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (cfg.values_.count(key)) throw std::invalid_argument(where + key + ": duplicate key");
    try {
      cfg.set(key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + e.what());
    }
  }
  return cfg;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse(ss.str(), path);
}

void ExperimentConfig::set(const std::string& key, const std::string& value) {
  const SchemaEntry* e = lookup(key);
  if (!e) throw std::invalid_argument(key + ": unknown key");
  values_[key] = normalize(key, e->type, trim(value));
}

std::string ExperimentConfig::serialize() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

std::string ExperimentConfig::hash() const { return fnv1a_hex(serialize()); }

std::string ExperimentConfig::raw(const std::string& key) const {
  const SchemaEntry* e = lookup(key);
  if (!e) throw std::invalid_argument(key + ": unknown key");
  auto it = values_.find(key);
  return it != values_.end() ? it->second : e->default_value;
}

std::int64_t ExperimentConfig::get_int(const std::string& key) const {
  std::int64_t v = 0;
  if (!parse_int(raw(key), &v)) throw std::invalid_argument(key + ": not an integer");
  return v;
}

double ExperimentConfig::get_real(const std::string& key) const {
  double v = 0.0;
  if (!parse_real(raw(key), &v)) throw std::invalid_argument(key + ": not a real");
  return v;
}

bool ExperimentConfig::get_bool(const std::string& key) const { return raw(key) == "true"; }

std::string ExperimentConfig::get_string(const std::string& key) const { return raw(key); }

std::vector<std::int64_t> ExperimentConfig::get_int_list(const std::string& key) const {
  std::vector<std::int64_t> out;
  for (const auto& s : split_list(raw(key))) {
    std::int64_t v = 0;
    if (!parse_int(s, &v)) throw std::invalid_argument(key + ": bad integer '" + s + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<double> ExperimentConfig::get_real_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& s : split_list(raw(key))) {
    double v = 0.0;
    if (!parse_real(s, &v)) throw std::invalid_argument(key + ": bad real '" + s + "'");
    out.push_back(v);
  }
  return out;
}

std::vector<std::string> ExperimentConfig::get_string_list(const std::string& key) const {
  return split_list(raw(key));
}

std::vector<std::uint64_t> ExperimentConfig::get_seed_list(const std::string& key) const {
  std::vector<std::uint64_t> out;
  for (const auto& s : split_list(raw(key))) {
    std::uint64_t v = 0;
    if (!parse_u64(s, &v)) throw std::invalid_argument(key + ": bad seed '" + s + "'");
    out.push_back(v);
  }
  return out;
}

std::map<std::string, double> ExperimentConfig::constants() const {
  std::map<std::string, double> out;
  for (const auto& [k, v] : values_) {
    if (k.rfind("constants.", 0) == 0) out[k.substr(10)] = get_real(k);
  }
  return out;
}

void ExperimentConfig::validate() const {
  auto one_of = [&](const std::string& key, std::initializer_list<const char*> allowed) {
    const std::string v = get_string(key);
    for (const char* a : allowed)
      if (v == a) return;
    throw std::invalid_argument(key + ": unsupported value '" + v + "'");
  };
  if (!has("experiment")) throw std::invalid_argument("experiment: missing required key");
  one_of("experiment", {"sampler", "gradest", "jordan", "optimize", "scaling_sweep", "table1"});
  one_of("model.kind", {"quadratic", "mixture", "perturbed"});
  one_of("init", {"star", "zero", "gaussian"});
  one_of("pipeline.mode", {"auto", "statevector", "contract"});
  one_of("zeroth.regime", {"full_smoothness", "smoothness"});
  one_of("sweep.param", {"eps", "n", "d"});
  one_of("sweep.phase", {"all", "estimate"});
  one_of("gradest.method", {"smoothing", "pipeline", "robust"});
  (void)parse_schedule(get_string("schedule"));
  if (get_seed_list("seeds").empty()) throw std::invalid_argument("seeds: empty seed list");
  if (get_int("chains") < 1) throw std::invalid_argument("chains: must be at least 1");
  if (get_int("workers") < 1) throw std::invalid_argument("workers: must be at least 1");
  if (get_int("model.d") < 1) throw std::invalid_argument("model.d: must be at least 1");
  if (get_int("model.n") < 1) throw std::invalid_argument("model.n: must be at least 1");
  if (get_real("eps") <= 0.0) throw std::invalid_argument("eps: must be positive");
  const std::string exp = get_string("experiment");
  if (exp == "scaling_sweep") {
    const auto vals = get_real_list("sweep.values");
    if (vals.empty()) throw std::invalid_argument("sweep.values: empty sweep grid");
    if (vals.size() < 3) throw std::invalid_argument("sweep.values: need at least 3 points");
    for (double v : vals)
      if (v <= 0.0) throw std::invalid_argument("sweep.values: values must be positive");
  }
  if (exp == "table1") {
    for (const auto& s : get_string_list("table.schedules")) (void)parse_schedule(s);
    if (get_string_list("table.schedules").empty())
      throw std::invalid_argument("table.schedules: empty list");
    if (get_int_list("table.n_values").size() < 3)
      throw std::invalid_argument("table.n_values: need at least 3 points");
    if (get_real_list("table.eps_values").size() < 3)
      throw std::invalid_argument("table.eps_values: need at least 3 points");
  }
}

std::string fnv1a_hex(const std::string& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qmcmc
