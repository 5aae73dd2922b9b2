#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "xtalk/errors.hpp"
#include "xtalk/observables.hpp"
#include "xtalk/runner.hpp"

namespace xtalk {

namespace {

using nlohmann::json;

const std::set<std::string> kConfigKeys = {
    "unit",     "config",   "composition",    "n_units",       "j0",
    "sigma",    "e_z",      "noise",          "alpha_noise",   "initial_state",
    "n_realizations",       "seed",           "t_max",         "dt",
    "adaptive_t_max",       "dt_step",        "partition",     "outputs",
    "use_sector",
};

const std::set<std::string> kSweepKeys = {"template", "L", "sigma", "alpha_noise", "side"};

// Line (1-based) of the first occurrence of "key" in text, or 0.
std::size_t line_of_key(std::string_view text, std::string_view key) {
  const std::string quoted = "\"" + std::string(key) + "\"";
  const auto pos = text.find(quoted);
  if (pos == std::string_view::npos) return 0;
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + pos, '\n'));
}

// Remembers which key is being read so that errors can name it.
class KeyReader {
 public:
  explicit KeyReader(const json& obj) : obj_(obj) {}

  template <typename T>
  void read(const char* key, T& out) {
    if (!obj_.contains(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(std::string("key '") + key + "' has the wrong type");
    }
  }

  std::string text(const char* key, const std::string& fallback) {
    std::string out = fallback;
    read(key, out);
    return out;
  }

 private:
  const json& obj_;
};

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const char* what) {
  if (!obj.is_object()) throw ConfigError(std::string(what) + " must be a JSON object");
  for (const auto& [key, value] : obj.items()) {
    if (!allowed.contains(key)) {
      throw ConfigError(std::string("unknown key '") + key + "' in " + what);
    }
  }
}

NoiseKind parse_noise(const std::string& s) {
  if (s == "quasi_static") return NoiseKind::kQuasiStatic;
  if (s == "dynamic") return NoiseKind::kDynamic;
  throw ConfigError("unknown noise kind '" + s + "' (expected quasi_static|dynamic)");
}

InitialState parse_initial(const std::string& s) {
  if (s == "neel") return InitialState::kNeel;
  if (s == "ghz") return InitialState::kGhz;
  throw ConfigError("unknown initial_state '" + s + "' (expected neel|ghz)");
}

// Attach a line number to a ConfigError raised while reading `text`.
[[noreturn]] void rethrow_with_line(const ConfigError& e, std::string_view text) {
  const std::string msg = e.what();
  const auto open = msg.find('\'');
  std::size_t line = 0;
  if (open != std::string::npos) {
    const auto close = msg.find('\'', open + 1);
    if (close != std::string::npos) line = line_of_key(text, msg.substr(open + 1, close - open - 1));
  }
  if (line > 0) throw ConfigError("line " + std::to_string(line) + ": " + msg);
  throw ConfigError(msg);
}

json parse_json_text(std::string_view text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in its message.
    throw ConfigError(std::string("malformed JSON: ") + e.what());
  }
}

}  // namespace

std::string_view to_string(NoiseKind kind) {
  return kind == NoiseKind::kQuasiStatic ? "quasi_static" : "dynamic";
}

std::string_view to_string(InitialState state) {
  return state == InitialState::kNeel ? "neel" : "ghz";
}

NoiseSpec ExperimentConfig::noise_spec() const {
  NoiseSpec spec;
  spec.kind = noise;
  spec.j0 = j0;
  spec.sigma = sigma;
  spec.alpha = alpha_noise;
  spec.dt_noise = dt_step;
  return spec;
}

QubitGraph ExperimentConfig::graph() const {
  return build_graph(unit, config, n_units, composition);
}

void ExperimentConfig::validate() const {
  for (double x : {j0, sigma, e_z, alpha_noise, t_max, dt, dt_step}) {
    if (!std::isfinite(x)) throw ConfigError("all physical parameters must be finite");
  }
  if (n_realizations < 1) throw ConfigError("n_realizations must be >= 1");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_max > 0.0)) throw ConfigError("t_max must be positive");
  if (!want_p && !want_s) throw ConfigError("outputs must request at least one of P, S");
  noise_spec().validate();
  const QubitGraph g = graph();
  if (g.num_qubits() > kMaxDenseQubits) {
    throw ConfigError("L = " + std::to_string(g.num_qubits()) + " exceeds the dense limit of " +
                      std::to_string(kMaxDenseQubits));
  }
  if (partition) {
    Partition check(*partition, g.num_qubits());
    (void)check;
  } else if (want_s && g.num_qubits() < 2) {
    throw ConfigError("entropy needs at least 2 qubits");
  }
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j, kConfigKeys, "experiment config");
  ExperimentConfig cfg;
  KeyReader r(j);
  cfg.unit = parse_unit(r.text("unit", "node"));
  cfg.config = parse_config(r.text("config", "chain"));
  cfg.composition = parse_composition(r.text("composition", "linked"));
  r.read("n_units", cfg.n_units);
  r.read("j0", cfg.j0);
  r.read("sigma", cfg.sigma);
  r.read("e_z", cfg.e_z);
  cfg.noise = parse_noise(r.text("noise", "quasi_static"));
  r.read("alpha_noise", cfg.alpha_noise);
  cfg.initial_state = parse_initial(r.text("initial_state", "neel"));
  r.read("n_realizations", cfg.n_realizations);
  r.read("seed", cfg.seed);
  r.read("t_max", cfg.t_max);
  r.read("dt", cfg.dt);
  r.read("adaptive_t_max", cfg.adaptive_t_max);
  r.read("dt_step", cfg.dt_step);
  r.read("use_sector", cfg.use_sector);
  if (j.contains("partition") && !j.at("partition").is_null()) {
    std::vector<int> part;
    r.read("partition", part);
    cfg.partition = std::move(part);
  }
  if (j.contains("outputs")) {
    std::vector<std::string> outs;
    r.read("outputs", outs);
    cfg.want_p = false;
    cfg.want_s = false;
    for (const auto& o : outs) {
      if (o == "P") {
        cfg.want_p = true;
      } else if (o == "S") {
        cfg.want_s = true;
      } else {
        throw ConfigError("unknown entry '" + o + "' in outputs (expected P or S)");
      }
    }
  }
  cfg.validate();
  return cfg;
}

json config_to_json(const ExperimentConfig& cfg) {
  json outs = json::array();
  if (cfg.want_p) outs.push_back("P");
  if (cfg.want_s) outs.push_back("S");
  json j = {
      {"unit", std::string(to_string(cfg.unit))},
      {"config", std::string(to_string(cfg.config))},
      {"composition", std::string(to_string(cfg.composition))},
      {"n_units", cfg.n_units},
      {"j0", cfg.j0},
      {"sigma", cfg.sigma},
      {"e_z", cfg.e_z},
      {"noise", std::string(to_string(cfg.noise))},
      {"alpha_noise", cfg.alpha_noise},
      {"initial_state", std::string(to_string(cfg.initial_state))},
      {"n_realizations", cfg.n_realizations},
      {"seed", cfg.seed},
      {"t_max", cfg.t_max},
      {"dt", cfg.dt},
      {"adaptive_t_max", cfg.adaptive_t_max},
      {"dt_step", cfg.dt_step},
      {"use_sector", cfg.use_sector},
      {"outputs", outs},
  };
  j["partition"] = cfg.partition ? json(*cfg.partition) : json(nullptr);
  return j;
}

ExperimentConfig parse_config_text(std::string_view text) {
  const json j = parse_json_text(text);
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    rethrow_with_line(e, text);
  }
}

SweepSpec sweep_from_json(const json& j) {
  reject_unknown(j, kSweepKeys, "sweep config");
  if (!j.contains("template")) throw ConfigError("sweep config needs a 'template' object");
  SweepSpec spec;
  spec.base = config_from_json(j.at("template"));
  KeyReader r(j);
  r.read("L", spec.sizes);
  r.read("sigma", spec.sigmas);
  r.read("alpha_noise", spec.alphas);
  const std::string side = r.text("side", "upper");
  if (side == "upper") {
    spec.side = EnvelopeSide::kUpper;
  } else if (side == "lower") {
    spec.side = EnvelopeSide::kLower;
  } else {
    throw ConfigError("unknown 'side' value '" + side + "' (expected upper|lower)");
  }
  return spec;
}

SweepSpec parse_sweep_text(std::string_view text) {
  const json j = parse_json_text(text);
  try {
    return sweep_from_json(j);
  } catch (const ConfigError& e) {
    rethrow_with_line(e, text);
  }
}

}  // namespace xtalk
