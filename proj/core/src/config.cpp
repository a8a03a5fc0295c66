#include "driftlearn/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "driftlearn/baselines.hpp"

namespace driftlearn {

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const long long v = std::stoll(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects an integer, got '" + value +
                      "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' expects a real number, got '" +
                      value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: key '" + key + "' expects true or false, got '" + value +
                    "'");
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const long long v = parse_int(key, value);
  if (v < 0) throw ConfigError("config: key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

std::string format_real(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  bool test_count_given = false;

  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters{
          {"dataset.name", [&](const std::string&, const std::string& v) { cfg.dataset_name = v; }},
          {"dataset.kind", [&](const std::string& k, const std::string& v) {
             if (v != "synthetic" && v != "csv") {
               throw ConfigError("config: key '" + k + "' must be synthetic or csv");
             }
             cfg.dataset_kind = v;
           }},
          {"dataset.csv", [&](const std::string&, const std::string& v) { cfg.csv_path = v; }},
          {"dataset.csv_header", [&](const std::string& k, const std::string& v) { cfg.csv_header = parse_bool(k, v); }},
          {"stream.per_step", [&](const std::string& k, const std::string& v) { cfg.per_step = parse_count(k, v); }},
          {"stream.test_count", [&](const std::string& k, const std::string& v) {
             cfg.test_count = parse_count(k, v);
             test_count_given = true;
           }},
          {"stream.steps", [&](const std::string& k, const std::string& v) { cfg.steps = parse_count(k, v); }},
          {"drift.dims", [&](const std::string& k, const std::string& v) { cfg.dims = parse_count(k, v); }},
          {"drift.classes", [&](const std::string& k, const std::string& v) { cfg.classes = parse_count(k, v); }},
          {"drift.modes_per_class", [&](const std::string& k, const std::string& v) { cfg.modes_per_class = parse_count(k, v); }},
          {"drift.separation", [&](const std::string& k, const std::string& v) { cfg.separation = parse_real(k, v); }},
          {"drift.velocity", [&](const std::string& k, const std::string& v) { cfg.velocity = parse_real(k, v); }},
          {"drift.std", [&](const std::string& k, const std::string& v) { cfg.stddev = parse_real(k, v); }},
          {"train.hidden_dim", [&](const std::string& k, const std::string& v) { cfg.hidden_dim = parse_count(k, v); }},
          {"train.embed_dim", [&](const std::string& k, const std::string& v) { cfg.embed_dim = parse_count(k, v); }},
          {"train.lr", [&](const std::string& k, const std::string& v) { cfg.learning_rate = parse_real(k, v); }},
          {"train.pretrain_epochs", [&](const std::string& k, const std::string& v) { cfg.pretrain_epochs = static_cast<int>(parse_count(k, v)); }},
          {"train.epochs", [&](const std::string& k, const std::string& v) { cfg.epochs = static_cast<int>(parse_count(k, v)); }},
          {"train.gen_epochs", [&](const std::string& k, const std::string& v) { cfg.gen_epochs = static_cast<int>(parse_count(k, v)); }},
          {"train.batch", [&](const std::string& k, const std::string& v) { cfg.batch = parse_count(k, v); }},
          {"train.lookback", [&](const std::string& k, const std::string& v) {
             const long long raw = parse_int(k, v);
             if (raw < 0) throw ConfigError("config: key 'train.lookback' must be >= 0");
             cfg.lookback = static_cast<std::size_t>(raw);
           }},
          {"train.cluster_iters", [&](const std::string& k, const std::string& v) { cfg.cluster_iters = static_cast<int>(parse_count(k, v)); }},
          {"train.ils_weight", [&](const std::string& k, const std::string& v) { cfg.ils_weight = parse_real(k, v); }},
          {"train.label_energy", [&](const std::string& k, const std::string& v) { cfg.label_energy = parse_real(k, v); }},
          {"train.eta1", [&](const std::string& k, const std::string& v) { cfg.eta1 = parse_real(k, v); }},
          {"train.eta2", [&](const std::string& k, const std::string& v) { cfg.eta2 = parse_real(k, v); }},
          {"train.subspace_energy", [&](const std::string& k, const std::string& v) { cfg.subspace_energy = parse_real(k, v); }},
          {"train.mt_weight", [&](const std::string& k, const std::string& v) { cfg.mt_weight = parse_real(k, v); }},
          {"train.mt_momentum", [&](const std::string& k, const std::string& v) { cfg.mt_momentum = parse_real(k, v); }},
          {"run.methods", [&](const std::string&, const std::string& v) { cfg.methods = split_list(v); }},
          {"run.seeds", [&](const std::string& k, const std::string& v) {
             cfg.seeds.clear();
             for (const auto& item : split_list(v)) {
               const long long s = parse_int(k, item);
               if (s < 0) throw ConfigError("config: key 'run.seeds' entries must be >= 0");
               cfg.seeds.push_back(static_cast<std::uint64_t>(s));
             }
           }},
          {"run.probe", [&](const std::string& k, const std::string& v) { cfg.probe = parse_bool(k, v); }},
          {"run.probe_bounds", [&](const std::string& k, const std::string& v) {
             cfg.probe_bounds.clear();
             for (const auto& item : split_list(v)) {
               cfg.probe_bounds.push_back(parse_real(k, item));
             }
           }},
          {"run.probe_draws", [&](const std::string& k, const std::string& v) { cfg.probe_draws = parse_count(k, v); }},
          {"run.out_dir", [&](const std::string&, const std::string& v) { cfg.out_dir = v; }},
          {"run.threads", [&](const std::string& k, const std::string& v) { cfg.threads = parse_count(k, v); }},
      };

  std::stringstream ss(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: expected 'key = value' at " + origin + ":" +
                        std::to_string(line_no));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) {
      throw ConfigError("config: unknown key '" + key + "' at " + origin + ":" +
                        std::to_string(line_no));
    }
    it->second(key, value);
  }

  if (!test_count_given) {
    cfg.test_count = static_cast<std::size_t>(
        std::lround(0.3 * static_cast<double>(cfg.per_step)));
  }
  validate(cfg);
  return cfg;
}

RunConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open " + path);
  std::stringstream body;
  body << in.rdbuf();
  return parse_config_text(body.str(), path);
}

void validate(const RunConfig& cfg) {
  if (cfg.dataset_kind == "csv" && cfg.csv_path.empty()) {
    throw ConfigError("config: key 'dataset.csv' is required when dataset.kind = csv");
  }
  if (cfg.per_step == 0) throw ConfigError("config: key 'stream.per_step' must be > 0");
  if (cfg.test_count == 0 || cfg.test_count >= cfg.per_step) {
    throw ConfigError(
        "config: key 'stream.test_count' must satisfy 0 < test_count < per_step");
  }
  if (cfg.dataset_kind == "synthetic") {
    if (cfg.steps == 0) throw ConfigError("config: key 'stream.steps' must be >= 1");
    if (cfg.dims == 0) throw ConfigError("config: key 'drift.dims' must be > 0");
    if (cfg.classes < 2) throw ConfigError("config: key 'drift.classes' must be >= 2");
    if (cfg.modes_per_class == 0) {
      throw ConfigError("config: key 'drift.modes_per_class' must be > 0");
    }
    if (cfg.stddev <= 0.0) throw ConfigError("config: key 'drift.std' must be > 0");
  }
  if (cfg.hidden_dim == 0) throw ConfigError("config: key 'train.hidden_dim' must be > 0");
  if (cfg.embed_dim == 0) throw ConfigError("config: key 'train.embed_dim' must be > 0");
  if (cfg.learning_rate <= 0.0) throw ConfigError("config: key 'train.lr' must be > 0");
  if (cfg.batch == 0) throw ConfigError("config: key 'train.batch' must be > 0");
  if (cfg.eta1 <= 0.0) throw ConfigError("config: key 'train.eta1' must be > 0");
  if (cfg.eta2 <= 0.0) throw ConfigError("config: key 'train.eta2' must be > 0");
  if (cfg.ils_weight < 0.0) throw ConfigError("config: key 'train.ils_weight' must be >= 0");
  if (cfg.label_energy <= 0.0 || cfg.label_energy > 1.0) {
    throw ConfigError("config: key 'train.label_energy' must lie in (0, 1]");
  }
  if (cfg.subspace_energy <= 0.0 || cfg.subspace_energy > 1.0) {
    throw ConfigError("config: key 'train.subspace_energy' must lie in (0, 1]");
  }
  if (cfg.mt_weight < 0.0) throw ConfigError("config: key 'train.mt_weight' must be >= 0");
  if (cfg.mt_momentum < 0.0 || cfg.mt_momentum > 1.0) {
    throw ConfigError("config: key 'train.mt_momentum' must lie in [0, 1]");
  }
  if (cfg.methods.empty()) throw ConfigError("config: key 'run.methods' must not be empty");
  for (const auto& m : cfg.methods) {
    if (!is_known_method(m)) {
      throw ConfigError("config: key 'run.methods' names unknown method '" + m + "'");
    }
  }
  if (cfg.seeds.empty()) throw ConfigError("config: key 'run.seeds' must not be empty");
  if (cfg.probe_bounds.empty()) {
    throw ConfigError("config: key 'run.probe_bounds' must not be empty");
  }
  for (const double b : cfg.probe_bounds) {
    if (b < 0.0) throw ConfigError("config: key 'run.probe_bounds' entries must be >= 0");
  }
  if (cfg.probe_draws == 0) throw ConfigError("config: key 'run.probe_draws' must be >= 1");
  if (cfg.out_dir.empty()) throw ConfigError("config: key 'run.out_dir' must not be empty");
}

std::string config_to_text(const RunConfig& cfg) {
  std::stringstream out;
  out << "dataset.name = " << cfg.dataset_name << "\n";
  out << "dataset.kind = " << cfg.dataset_kind << "\n";
  if (!cfg.csv_path.empty()) out << "dataset.csv = " << cfg.csv_path << "\n";
  out << "dataset.csv_header = " << (cfg.csv_header ? "true" : "false") << "\n";
  out << "stream.per_step = " << cfg.per_step << "\n";
  out << "stream.test_count = " << cfg.test_count << "\n";
  out << "stream.steps = " << cfg.steps << "\n";
  out << "drift.dims = " << cfg.dims << "\n";
  out << "drift.classes = " << cfg.classes << "\n";
  out << "drift.modes_per_class = " << cfg.modes_per_class << "\n";
  out << "drift.separation = " << format_real(cfg.separation) << "\n";
  out << "drift.velocity = " << format_real(cfg.velocity) << "\n";
  out << "drift.std = " << format_real(cfg.stddev) << "\n";
  out << "train.hidden_dim = " << cfg.hidden_dim << "\n";
  out << "train.embed_dim = " << cfg.embed_dim << "\n";
  out << "train.lr = " << format_real(cfg.learning_rate) << "\n";
  out << "train.pretrain_epochs = " << cfg.pretrain_epochs << "\n";
  out << "train.epochs = " << cfg.epochs << "\n";
  out << "train.gen_epochs = " << cfg.gen_epochs << "\n";
  out << "train.batch = " << cfg.batch << "\n";
  out << "train.lookback = " << cfg.lookback << "\n";
  out << "train.cluster_iters = " << cfg.cluster_iters << "\n";
  out << "train.ils_weight = " << format_real(cfg.ils_weight) << "\n";
  out << "train.label_energy = " << format_real(cfg.label_energy) << "\n";
  out << "train.eta1 = " << format_real(cfg.eta1) << "\n";
  out << "train.eta2 = " << format_real(cfg.eta2) << "\n";
  out << "train.subspace_energy = " << format_real(cfg.subspace_energy) << "\n";
  out << "train.mt_weight = " << format_real(cfg.mt_weight) << "\n";
  out << "train.mt_momentum = " << format_real(cfg.mt_momentum) << "\n";
  out << "run.methods = ";
  for (std::size_t i = 0; i < cfg.methods.size(); ++i) {
    out << (i ? "," : "") << cfg.methods[i];
  }
  out << "\n";
  out << "run.seeds = ";
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    out << (i ? "," : "") << cfg.seeds[i];
  }
  out << "\n";
  out << "run.probe = " << (cfg.probe ? "true" : "false") << "\n";
  out << "run.probe_bounds = ";
  for (std::size_t i = 0; i < cfg.probe_bounds.size(); ++i) {
    out << (i ? "," : "") << format_real(cfg.probe_bounds[i]);
  }
  out << "\n";
  out << "run.probe_draws = " << cfg.probe_draws << "\n";
  out << "run.out_dir = " << cfg.out_dir << "\n";
  out << "run.threads = " << cfg.threads << "\n";
  return out.str();
}

}  // namespace driftlearn
