#include "mcbsde/app/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace mcbsde::app {

using nlohmann::json;

namespace {

std::string child(const std::string& parent, const std::string& key) {
  return parent.empty() ? key : parent + "." + key;
}

std::string item(const std::string& parent, std::size_t index) {
  return parent + "[" + std::to_string(index) + "]";
}

void reject_unknown(const json& object, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& [key, value] : object.items()) {
    if (!keys.count(key)) throw ConfigError(child(where, key), "unknown field");
  }
}

const json& require(const json& object, const std::string& where, const char* key) {
  if (!object.contains(key)) throw ConfigError(child(where, key), "missing required field");
  return object.at(key);
}

const json& require_object(const json& value, const std::string& where) {
  if (!value.is_object()) throw ConfigError(where, "expected an object");
  return value;
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) throw ConfigError(where, "expected a number");
  const double x = value.get<double>();
  if (!std::isfinite(x)) throw ConfigError(where, "must be finite");
  return x;
}

long long integer(const json& value, const std::string& where) {
  if (!value.is_number_integer()) throw ConfigError(where, "expected an integer");
  return value.get<long long>();
}

std::uint64_t seed(const json& value, const std::string& where) {
  if (value.is_number_unsigned()) return value.get<std::uint64_t>();
  if (value.is_number_integer()) {
    if (value.get<long long>() < 0) throw ConfigError(where, "seed must be nonnegative");
    return static_cast<std::uint64_t>(value.get<long long>());
  }
  throw ConfigError(where, "expected a nonnegative integer");
}

Vector vector_of(const json& value, const std::string& where, int size) {
  if (!value.is_array()) throw ConfigError(where, "expected an array");
  if (static_cast<int>(value.size()) != size) {
    throw ConfigError(where, "expected " + std::to_string(size) + " entries, got " +
                                 std::to_string(value.size()));
  }
  Vector v(size);
  for (int i = 0; i < size; ++i) v(i) = number(value[i], item(where, i));
  return v;
}

// Array of `rows` rows, each of `cols` numbers.
Matrix matrix_of(const json& value, const std::string& where, int rows, int cols) {
  if (!value.is_array()) throw ConfigError(where, "expected an array of rows");
  if (static_cast<int>(value.size()) != rows) {
    throw ConfigError(where, "expected " + std::to_string(rows) + " rows, got " +
                                 std::to_string(value.size()));
  }
  Matrix m(rows, cols);
  for (int r = 0; r < rows; ++r) m.row(r) = vector_of(value[r], item(where, r), cols).transpose();
  return m;
}

int positive(long long value, const std::string& where, long long minimum) {
  if (value < minimum) throw ConfigError(where, "must be at least " + std::to_string(minimum));
  if (value > 100000000) throw ConfigError(where, "is unreasonably large");
  return static_cast<int>(value);
}

void parse_schedule(const json& node, ProblemConfig& cfg) {
  const std::string where = "rate_schedule";
  require_object(node, where);
  reject_unknown(node, where, {"breakpoints", "matrices"});
  const json& mats = require(node, where, "matrices");
  if (!mats.is_array() || mats.empty()) {
    throw ConfigError(child(where, "matrices"), "expected a nonempty array of matrices");
  }
  for (std::size_t k = 0; k < mats.size(); ++k) {
    cfg.generators.push_back(
        matrix_of(mats[k], item(child(where, "matrices"), k), cfg.num_states, cfg.num_states));
  }
  if (node.contains("breakpoints")) {
    const std::string bw = child(where, "breakpoints");
    const Vector b = vector_of(node.at("breakpoints"), bw, static_cast<int>(mats.size()));
    cfg.piece_starts.assign(b.data(), b.data() + b.size());
  } else if (mats.size() == 1) {
    cfg.piece_starts = {0.0};
  } else {
    throw ConfigError(child(where, "breakpoints"), "required when there are several matrices");
  }
  std::vector<double> bps = cfg.piece_starts;
  bps.push_back(cfg.horizon);
  try {
    validate_schedule(bps, cfg.generators);
  } catch (const ScheduleError& e) {
    throw ConfigError(where, e.what());
  }
}

void parse_driver(const json& node, ProblemConfig& cfg) {
  const std::string where = "driver";
  require_object(node, where);
  reject_unknown(node, where, {"family", "params", "lipschitz_c"});
  const json& family = require(node, where, "family");
  if (!family.is_string()) throw ConfigError(child(where, "family"), "expected a string");
  cfg.family = family.get<std::string>();
  if (!is_known_family(cfg.family)) {
    throw ConfigError(child(where, "family"),
                      "unknown family '" + cfg.family +
                          "' (zero, constant, linear_z, linear_y, linear_full, soft_nonlinear)");
  }
  if (node.contains("lipschitz_c")) {
    const double c = number(node.at("lipschitz_c"), child(where, "lipschitz_c"));
    if (c < 0.0) throw ConfigError(child(where, "lipschitz_c"), "must be nonnegative");
    cfg.params.lipschitz_c = c;
  }
  if (!node.contains("params")) return;
  const std::string pw = child(where, "params");
  const json& p = require_object(node.at("params"), pw);
  reject_unknown(p, pw, {"alpha", "beta", "f0", "epsilon", "g_hat", "g0"});
  const int k = cfg.dimension;
  const int n = cfg.num_states;
  if (p.contains("alpha")) cfg.params.alpha = matrix_of(p.at("alpha"), child(pw, "alpha"), k, k);
  if (p.contains("beta")) cfg.params.beta = vector_of(p.at("beta"), child(pw, "beta"), n);
  if (p.contains("f0")) cfg.params.f0 = vector_of(p.at("f0"), child(pw, "f0"), k);
  if (p.contains("epsilon")) cfg.params.epsilon = number(p.at("epsilon"), child(pw, "epsilon"));
  if (p.contains("g_hat")) cfg.params.g_hat = vector_of(p.at("g_hat"), child(pw, "g_hat"), n);
  if (p.contains("g0")) cfg.params.g0 = matrix_of(p.at("g0"), child(pw, "g0"), k, n);
}

}  // namespace

RateSchedule ProblemConfig::schedule() const {
  std::vector<double> bps = piece_starts;
  bps.push_back(horizon);
  return RateSchedule(std::move(bps), generators);
}

Driver ProblemConfig::driver() const {
  return make_family_driver(family, params, dimension, num_states);
}

TerminalCondition ProblemConfig::terminal_condition() const { return TerminalCondition(terminal); }

ProblemConfig parse_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column),
                      "invalid JSON");
  }
  require_object(doc, "document");
  reject_unknown(doc, "", {"num_states", "dimension", "horizon", "rate_schedule",
                           "initial_distribution", "driver", "terminal", "grid", "picard", "seeds",
                           "monte_carlo"});

  ProblemConfig cfg;
  cfg.num_states = positive(integer(require(doc, "", "num_states"), "num_states"), "num_states", 2);
  cfg.dimension = positive(integer(require(doc, "", "dimension"), "dimension"), "dimension", 1);
  cfg.horizon = number(require(doc, "", "horizon"), "horizon");
  if (!(cfg.horizon > 0.0)) throw ConfigError("horizon", "must be positive");

  parse_schedule(require(doc, "", "rate_schedule"), cfg);

  const int n = cfg.num_states;
  if (doc.contains("initial_distribution")) {
    cfg.initial_distribution = vector_of(doc.at("initial_distribution"), "initial_distribution", n);
    for (int i = 0; i < n; ++i) {
      if (cfg.initial_distribution(i) < 0.0) {
        throw ConfigError(item("initial_distribution", i), "probabilities must be nonnegative");
      }
    }
    if (std::abs(cfg.initial_distribution.sum() - 1.0) > 1e-12) {
      throw ConfigError("initial_distribution", "must sum to 1 within 1e-12");
    }
  } else {
    cfg.initial_distribution = Vector::Constant(n, 1.0 / n);
  }

  parse_driver(require(doc, "", "driver"), cfg);

  const json& terminal = require(doc, "", "terminal");
  if (!terminal.is_array() || static_cast<int>(terminal.size()) != n) {
    throw ConfigError("terminal", "expected one " + std::to_string(cfg.dimension) +
                                      "-vector per state (" + std::to_string(n) + " entries)");
  }
  cfg.terminal.resize(cfg.dimension, n);
  for (int i = 0; i < n; ++i) {
    cfg.terminal.col(i) = vector_of(terminal[i], item("terminal", i), cfg.dimension);
  }

  if (doc.contains("grid")) {
    const json& g = require_object(doc.at("grid"), "grid");
    reject_unknown(g, "grid", {"steps"});
    if (g.contains("steps")) {
      cfg.grid_steps = positive(integer(g.at("steps"), "grid.steps"), "grid.steps", 2);
    }
  }
  if (doc.contains("picard")) {
    const json& p = require_object(doc.at("picard"), "picard");
    reject_unknown(p, "picard", {"tol", "max_iter"});
    if (p.contains("tol")) {
      cfg.tol = number(p.at("tol"), "picard.tol");
      if (!(cfg.tol > 0.0)) throw ConfigError("picard.tol", "must be positive");
    }
    if (p.contains("max_iter")) {
      cfg.max_iter = positive(integer(p.at("max_iter"), "picard.max_iter"), "picard.max_iter", 1);
    }
  }
  if (doc.contains("seeds")) {
    const json& s = require_object(doc.at("seeds"), "seeds");
    reject_unknown(s, "seeds", {"simulation", "lipschitz"});
    if (s.contains("simulation")) cfg.simulation_seed = seed(s.at("simulation"), "seeds.simulation");
    if (s.contains("lipschitz")) cfg.lipschitz_seed = seed(s.at("lipschitz"), "seeds.lipschitz");
  }
  if (doc.contains("monte_carlo")) {
    const json& m = require_object(doc.at("monte_carlo"), "monte_carlo");
    reject_unknown(m, "monte_carlo", {"paths"});
    if (m.contains("paths")) {
      cfg.paths = positive(integer(m.at("paths"), "monte_carlo.paths"), "monte_carlo.paths", 1);
    }
  }
  return cfg;
}

ProblemConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace mcbsde::app
