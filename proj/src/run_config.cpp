#include "dgr/run_config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "dgr/types.hpp"

namespace dgr {

std::string format_double(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string precision_name(Precision p) {
  return p == Precision::kFloat32 ? "float32" : "float64";
}

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value) {
  throw UsageError("invalid value '" + value + "' for key '" + key + "'");
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double d = std::stod(value, &used);
    if (used != value.size()) bad_value(key, value);
    return d;
  } catch (const std::logic_error&) {
    bad_value(key, value);
  }
}

template <typename Int>
Int to_int(const std::string& key, const std::string& value) {
  Int out{};
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size()) bad_value(key, value);
  return out;
}

bool to_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  bad_value(key, value);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> parts;
  std::string part;
  std::istringstream in(value);
  while (std::getline(in, part, ',')) {
    part = trim(part);
    if (!part.empty()) parts.push_back(part);
  }
  return parts;
}

template <typename T, typename Fmt>
std::string join(const std::vector<T>& values, Fmt fmt) {
  std::string out;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) out += ',';
    out += fmt(values[k]);
  }
  return out;
}

std::string bool_text(bool b) { return b ? "true" : "false"; }

}  // namespace

void TrainConfig::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw UsageError(what);
  };
  require(layers >= 1, "layers must be >= 1");
  require(dim >= 1, "dim must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), "lr must be positive");
  require(batch_size >= 1, "batch_size must be >= 1");
  require(epochs >= 0, "epochs must be >= 0");
  require(lambda >= 0.0, "lambda must be >= 0");
  require(static_cast<int>(alpha.size()) == layers, "alpha must have one entry per layer");
  for (double a : alpha) require(std::isfinite(a) && a >= 0.0, "alpha entries must be >= 0");
  if (residual_rule) {
    for (double a : alpha) require(a <= 1.0, "residual alpha entries must be <= 1");
  }
  require(lec_k1 >= 0 && lec_k2 >= 0 && lec_theta >= 0, "LEC parameters must be >= 0");
  require(lec_candidate_cap >= 0, "lec_candidate_cap must be >= 0");
  require(l2 >= 0.0, "l2 must be >= 0");
  require(eval_every >= 1, "eval_every must be >= 1");
  require(!eval_ks.empty(), "eval_ks must not be empty");
  for (Index k : eval_ks) require(k >= 1, "eval_ks entries must be >= 1");
  require(init_std > 0.0, "init_std must be positive");
  require(patience >= 1, "patience must be >= 1");
  require(threads >= 1, "threads must be >= 1");
}

std::vector<double> TrainConfig::effective_alpha() const {
  if (!gmp_enabled && !residual_rule) return std::vector<double>(alpha.size(), 0.0);
  return alpha;
}

std::vector<std::pair<std::string, std::string>> to_key_values(const TrainConfig& c) {
  return {
      {"layers", std::to_string(c.layers)},
      {"dim", std::to_string(c.dim)},
      {"lr", format_double(c.lr)},
      {"batch_size", std::to_string(c.batch_size)},
      {"epochs", std::to_string(c.epochs)},
      {"lambda", format_double(c.lambda)},
      {"alpha", join(c.alpha, format_double)},
      {"lec_k1", std::to_string(c.lec_k1)},
      {"lec_k2", std::to_string(c.lec_k2)},
      {"lec_theta", std::to_string(c.lec_theta)},
      {"lec_candidate_cap", std::to_string(c.lec_candidate_cap)},
      {"lec_normalize_pairs", bool_text(c.lec_normalize_pairs)},
      {"l2", format_double(c.l2)},
      {"seed", std::to_string(c.seed)},
      {"eval_every", std::to_string(c.eval_every)},
      {"eval_ks", join(c.eval_ks, [](Index k) { return std::to_string(k); })},
      {"gmp_enabled", bool_text(c.gmp_enabled)},
      {"lec_enabled", bool_text(c.lec_enabled)},
      {"residual_rule", bool_text(c.residual_rule)},
      {"differentiate_steady_state", bool_text(c.differentiate_steady_state)},
      {"steady_refresh", c.steady_refresh == SteadyRefresh::kEveryStep ? "step" : "epoch"},
      {"precision", precision_name(c.precision)},
      {"init_std", format_double(c.init_std)},
      {"patience", std::to_string(c.patience)},
      {"track_row_diff", bool_text(c.track_row_diff)},
      {"threads", std::to_string(c.threads)},
      {"deterministic", bool_text(c.deterministic)},
  };
}

bool apply_key_value(TrainConfig& c, const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  const std::pair<const char*, Setter> setters[] = {
      {"layers", [&](const std::string& v) { c.layers = to_int<int>(key, v); }},
      {"dim", [&](const std::string& v) { c.dim = to_int<int>(key, v); }},
      {"lr", [&](const std::string& v) { c.lr = to_double(key, v); }},
      {"batch_size", [&](const std::string& v) { c.batch_size = to_int<int>(key, v); }},
      {"epochs", [&](const std::string& v) { c.epochs = to_int<int>(key, v); }},
      {"lambda", [&](const std::string& v) { c.lambda = to_double(key, v); }},
      {"alpha",
       [&](const std::string& v) {
         c.alpha.clear();
         for (const auto& part : split_list(v)) c.alpha.push_back(to_double(key, part));
       }},
      {"lec_k1", [&](const std::string& v) { c.lec_k1 = to_int<Index>(key, v); }},
      {"lec_k2", [&](const std::string& v) { c.lec_k2 = to_int<Index>(key, v); }},
      {"lec_theta", [&](const std::string& v) { c.lec_theta = to_int<Index>(key, v); }},
      {"lec_candidate_cap",
       [&](const std::string& v) { c.lec_candidate_cap = to_int<Index>(key, v); }},
      {"lec_normalize_pairs", [&](const std::string& v) { c.lec_normalize_pairs = to_bool(key, v); }},
      {"l2", [&](const std::string& v) { c.l2 = to_double(key, v); }},
      {"seed", [&](const std::string& v) { c.seed = to_int<std::uint64_t>(key, v); }},
      {"eval_every", [&](const std::string& v) { c.eval_every = to_int<int>(key, v); }},
      {"eval_ks",
       [&](const std::string& v) {
         c.eval_ks.clear();
         for (const auto& part : split_list(v)) c.eval_ks.push_back(to_int<Index>(key, part));
       }},
      {"gmp_enabled", [&](const std::string& v) { c.gmp_enabled = to_bool(key, v); }},
      {"lec_enabled", [&](const std::string& v) { c.lec_enabled = to_bool(key, v); }},
      {"residual_rule", [&](const std::string& v) { c.residual_rule = to_bool(key, v); }},
      {"differentiate_steady_state",
       [&](const std::string& v) { c.differentiate_steady_state = to_bool(key, v); }},
      {"steady_refresh",
       [&](const std::string& v) {
         if (v == "step") {
           c.steady_refresh = SteadyRefresh::kEveryStep;
         } else if (v == "epoch") {
           c.steady_refresh = SteadyRefresh::kEveryEpoch;
         } else {
           bad_value(key, v);
         }
       }},
      {"precision",
       [&](const std::string& v) {
         if (v == "float32" || v == "float") {
           c.precision = Precision::kFloat32;
         } else if (v == "float64" || v == "double") {
           c.precision = Precision::kFloat64;
         } else {
           bad_value(key, v);
         }
       }},
      {"init_std", [&](const std::string& v) { c.init_std = to_double(key, v); }},
      {"patience", [&](const std::string& v) { c.patience = to_int<int>(key, v); }},
      {"track_row_diff", [&](const std::string& v) { c.track_row_diff = to_bool(key, v); }},
      {"threads", [&](const std::string& v) { c.threads = to_int<int>(key, v); }},
      {"deterministic", [&](const std::string& v) { c.deterministic = to_bool(key, v); }},
  };
  for (const auto& [name, set] : setters) {
    if (key == name) {
      set(value);
      return true;
    }
  }
  return false;
}

namespace {

void apply_run_key(RunConfig& config, const std::string& key, const std::string& value) {
  if (apply_key_value(config.train, key, value)) return;
  if (key == "data_file") {
    config.data_file = value;
  } else if (key == "train_file") {
    config.train_file = value;
  } else if (key == "test_file") {
    config.test_file = value;
  } else if (key == "format") {
    config.format = value;
  } else if (key == "split_ratio") {
    config.split_ratio = to_double(key, value);
  } else if (key == "split_seed") {
    config.split_seed = to_int<std::uint64_t>(key, value);
  } else if (key == "out_dir") {
    config.out_dir = value;
  } else if (key == "binary_index") {
    config.binary_index = to_bool(key, value);
  } else {
    throw UsageError("unknown config key '" + key + "'");
  }
}

}  // namespace

RunConfig parse_run_config(std::istream& in) {
  RunConfig config;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_run_key(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path.string() + "'");
  return parse_run_config(in);
}

std::string serialize_run_config(const RunConfig& config) {
  std::ostringstream os;
  os << "data_file = " << config.data_file << '\n'
     << "train_file = " << config.train_file << '\n'
     << "test_file = " << config.test_file << '\n'
     << "format = " << config.format << '\n'
     << "split_ratio = " << format_double(config.split_ratio) << '\n'
     << "split_seed = " << config.split_seed << '\n'
     << "out_dir = " << config.out_dir << '\n'
     << "binary_index = " << bool_text(config.binary_index) << '\n';
  for (const auto& [key, value] : to_key_values(config.train)) {
    os << key << " = " << value << '\n';
  }
  return os.str();
}

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw UsageError("override '" + assignment + "' is not key=value");
  }
  apply_run_key(config, trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

}  // namespace dgr
