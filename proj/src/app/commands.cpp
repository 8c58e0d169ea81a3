#include "mcbsde/app/commands.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "mcbsde/app/config.hpp"
#include "mcbsde/diagnostics.hpp"

namespace mcbsde::app {

using Json = nlohmann::ordered_json;

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr);
  std::ostringstream hex;
  for (unsigned int i = 0; i < length; ++i) {
    hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(digest[i]);
  }
  return hex.str();
}

namespace {

std::string num(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

Json finite_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

template <class Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  threads = std::clamp(threads, 1, std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  const double n = static_cast<double>(xs.size());
  for (double x : xs) out.mean += x;
  out.mean /= n;
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (n - 1.0) / n);
  return out;
}

bool within_3se(const MeanSe& m, double target) {
  return std::abs(m.mean - target) <= 3.0 * m.se + 1e-12;
}

struct Batch {
  std::vector<int> initial;
  std::vector<ChainPath> paths;
};

// Initial states come sequentially from one generator; path k then uses
// path_seed(seed, k), so the batch is the same for any thread count.
Batch simulate_batch(const RateSchedule& schedule, const Vector& x0, std::uint64_t seed, int count,
                     int threads) {
  Batch batch;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = static_cast<int>(x0.size());
  int last_live = 0;
  for (int i = 0; i < n; ++i)
    if (x0(i) > 0.0) last_live = i;
  for (int k = 0; k < count; ++k) {
    const double u = unit(rng);
    double cumulative = 0.0;
    int state = last_live;
    for (int i = 0; i < n; ++i) {
      cumulative += x0(i);
      if (x0(i) > 0.0 && u < cumulative) {
        state = i;
        break;
      }
    }
    batch.initial.push_back(state);
  }
  std::vector<std::optional<ChainPath>> paths(count);
  parallel_for(count, threads, [&](int k) {
    paths[k] = simulate_path(schedule, batch.initial[k], path_seed(seed, static_cast<std::uint64_t>(k)));
  });
  for (auto& p : paths) batch.paths.push_back(std::move(*p));
  return batch;
}

class Run {
 public:
  Run(std::string_view command, const RunOptions& options, std::string config_digest)
      : command_(command), options_(options), digest_(std::move(config_digest)),
        start_(std::chrono::steady_clock::now()) {
    std::filesystem::create_directories(options_.out);
  }

  void write(const std::string& name, const std::string& content) {
    std::ofstream out(options_.out / name, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + (options_.out / name).string());
    out << content;
    files_.push_back(Json{{"name", name}, {"sha256", sha256_hex(content)}});
  }

  void check(const std::string& name, bool passed, Json measured, Json threshold) {
    all_passed_ = all_passed_ && passed;
    checks_.push_back(Json{{"name", name}, {"passed", passed}, {"measured", std::move(measured)},
                           {"threshold", std::move(threshold)}});
  }

  Json& extra() { return extra_; }
  bool all_passed() const { return all_passed_; }

  void finish(int exit_code) {
    Json report;
    report["tool"] = "mcbsde";
    report["version"] = std::string(kToolVersion);
    report["command"] = command_;
    report["config_sha256"] = digest_;
    report["csv_layout_version"] = kCsvLayoutVersion;
    report["exit_code"] = exit_code;
    report["all_checks_passed"] = all_passed_;
    for (auto& [key, value] : extra_.items()) report[key] = value;
    report["checks"] = checks_.is_null() ? Json::array() : checks_;
    report["files"] = files_.is_null() ? Json::array() : files_;
    if (options_.record_time) {
      report["wall_time_seconds"] =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    std::ofstream out(options_.out / "report.json", std::ios::binary | std::ios::trunc);
    out << report.dump(2) << "\n";
  }

 private:
  std::string command_;
  RunOptions options_;
  std::string digest_;
  std::chrono::steady_clock::time_point start_;
  Json checks_ = Json::array();
  Json files_ = Json::array();
  Json extra_ = Json::object();
  bool all_passed_ = true;
};

Json picard_json(const PicardReport& r) {
  Json j;
  j["stage"] = std::string(stage_name(r.stage));
  j["lipschitz_c"] = r.lipschitz_c;
  j["c_estimated"] = r.c_estimated;
  j["x"] = finite_or_null(r.x);
  j["ratio_bound"] = r.ratio_bound ? Json(*r.ratio_bound) : Json(nullptr);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  auto list = [](const std::vector<double>& xs) {
    Json a = Json::array();
    for (double x : xs) a.push_back(finite_or_null(x));
    return a;
  };
  j["y_increments"] = list(r.y_increments);
  j["z_sup_increments"] = list(r.z_sup_increments);
  j["z_l2_increments"] = list(r.z_l2_increments);
  j["observed_ratios"] = list(r.observed_ratios);
  j["log_factorial_bound"] = list(r.log_factorial_bound);
  j["gronwall_constant"] = r.gronwall_constant;
  j["three_a"] = r.three_a;
  j["inner_iterations"] = r.inner_iterations;
  return j;
}

std::string header(const char* lead, const char* prefix, int k) {
  std::string h = lead;
  for (int r = 0; r < k; ++r) h += "," + std::string(prefix) + std::to_string(r);
  return h + "\n";
}

// t,state,v0.. for a node-sampled surface
std::string state_csv(const std::vector<double>& grid, const std::vector<Matrix>& values,
                      const char* prefix) {
  std::string out = header("t,state", prefix, static_cast<int>(values.front().rows()));
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (int i = 0; i < values[g].cols(); ++i) {
      out += num(grid[g]) + "," + std::to_string(i);
      for (int r = 0; r < values[g].rows(); ++r) out += "," + num(values[g](r, i));
      out += "\n";
    }
  }
  return out;
}

// t,state,target,v0.. for an integrand field at its nodes
std::string integrand_csv(const IntegrandField& y, const char* prefix) {
  std::string out = header("t,state,target", prefix, y.dimension());
  const auto& grid = y.grid();
  for (int g = 0; g < y.num_nodes(); ++g) {
    for (int i = 0; i < y.num_states(); ++i) {
      const Matrix& v = y.node(g, i);
      for (int j = 0; j < y.num_states(); ++j) {
        out += num(grid[g]) + "," + std::to_string(i) + "," + std::to_string(j);
        for (int r = 0; r < v.rows(); ++r) out += "," + num(v(r, j));
        out += "\n";
      }
    }
  }
  return out;
}

std::vector<Matrix> node_values(const StateFunction& f) {
  std::vector<Matrix> out;
  for (int g = 0; g < f.num_nodes(); ++g) out.push_back(f.node(g));
  return out;
}

void write_solution(Run& run, const Solution& s, const PicardReport& report) {
  run.write("z.csv", state_csv(s.grid, node_values(s.z), "z"));
  run.write("y.csv", integrand_csv(s.y, "y"));
  run.write("picard.json", picard_json(report).dump(2) + "\n");
}

bool terminal_exact(const Solution& s, const TerminalCondition& q) {
  return s.z.node(s.z.num_nodes() - 1) == q.values();
}

SolverOptions solver_options(const ProblemConfig& cfg) {
  SolverOptions o;
  o.grid_steps = cfg.grid_steps;
  o.tol = cfg.tol;
  o.max_iter = cfg.max_iter;
  o.initial_distribution = cfg.initial_distribution;
  o.lipschitz_seed = cfg.lipschitz_seed;
  return o;
}

void check_terminal_distribution(Run& run, const Batch& batch, const RateSchedule& schedule,
                                 const Vector& x0) {
  const Vector expected = transition_matrix(schedule, 0.0, schedule.horizon()) * x0;
  const int n = schedule.num_states();
  const double count = static_cast<double>(batch.paths.size());
  Json measured = Json::array();
  bool ok = true;
  for (int i = 0; i < n; ++i) {
    double hits = 0.0;
    for (const auto& p : batch.paths) hits += p.terminal_state() == i ? 1.0 : 0.0;
    const double freq = hits / count;
    const double se = std::sqrt(expected(i) * (1.0 - expected(i)) / count);
    const bool pass = std::abs(freq - expected(i)) <= 3.0 * se + 1e-12;
    ok = ok && pass;
    measured.push_back(Json{{"state", i}, {"empirical", freq}, {"expected", expected(i)},
                            {"standard_error", se}});
  }
  run.check("terminal_distribution", ok, measured, "3 standard errors");
}

int cmd_solve(Run& run, const ProblemConfig& cfg, std::ostream& log) {
  const RateSchedule schedule = cfg.schedule();
  const Driver driver = cfg.driver();
  const TerminalCondition q = cfg.terminal_condition();
  run.extra()["family"] = cfg.family;
  run.extra()["stage"] = std::string(stage_name(required_stage(driver)));
  try {
    auto [solution, report] = solve(driver, q, schedule, solver_options(cfg));
    write_solution(run, solution, report);
    run.check("terminal_exact", terminal_exact(solution, q), true, true);
    run.extra()["iterations"] = report.iterations;
    run.finish(kExitOk);
    return kExitOk;
  } catch (const NoConvergence& e) {
    log << "no convergence: " << e.what() << "\n";
    write_solution(run, e.last_iterate(), e.report());
    run.check("converged", false, e.report().iterations, cfg.max_iter);
    run.finish(kExitNoConvergence);
    return kExitNoConvergence;
  }
}

int cmd_simulate(Run& run, const ProblemConfig& cfg, int threads) {
  const RateSchedule schedule = cfg.schedule();
  const Batch batch =
      simulate_batch(schedule, cfg.initial_distribution, cfg.simulation_seed, cfg.paths, threads);
  std::string initial = "path_id,initial_state\n";
  std::string paths = "path_id,jump_time,new_state\n";
  for (std::size_t k = 0; k < batch.paths.size(); ++k) {
    initial += std::to_string(k) + "," + std::to_string(batch.initial[k]) + "\n";
    for (const Jump& j : batch.paths[k].jumps()) {
      paths += std::to_string(k) + "," + num(j.time) + "," + std::to_string(j.state) + "\n";
    }
  }
  run.write("paths.csv", paths);
  run.write("initial_states.csv", initial);
  check_terminal_distribution(run, batch, schedule, cfg.initial_distribution);
  run.extra()["paths"] = cfg.paths;
  run.finish(kExitOk);
  return kExitOk;
}

int cmd_represent(Run& run, const ProblemConfig& cfg, int threads) {
  const RateSchedule schedule = cfg.schedule();
  const TerminalCondition q = cfg.terminal_condition();
  const StateFunction l = conditional_expectation(q, schedule, cfg.grid_steps);
  const IntegrandField gamma = representation_integrand(l, schedule);
  run.write("l.csv", state_csv(l.grid(), node_values(l), "l"));
  run.write("gamma.csv", integrand_csv(gamma, "gamma"));

  const Batch batch =
      simulate_batch(schedule, cfg.initial_distribution, cfg.simulation_seed, cfg.paths, threads);
  std::vector<double> residuals(batch.paths.size());
  parallel_for(cfg.paths, threads, [&](int k) {
    residuals[k] = reconstruct(l, gamma, batch.paths[k], schedule).max_residual;
  });
  const double worst = *std::max_element(residuals.begin(), residuals.end());
  run.check("harmonicity_residual", true, harmonicity_residual(l, schedule), kHarmonicityTolerance);
  run.check("reconstruction_residual", worst <= 1e-6, worst, 1e-6);
  run.extra()["integrability_diagnostic"] =
      integrability_diagnostic(gamma, schedule, cfg.initial_distribution);
  run.finish(kExitOk);
  return kExitOk;
}

Matrix random_matrix(std::mt19937_64& rng, int rows, int cols, double scale) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Matrix m(rows, cols);
  for (int c = 0; c < cols; ++c)
    for (int r = 0; r < rows; ++r) m(r, c) = scale * unit(rng);
  return m;
}

int cmd_verify(Run& run, const ProblemConfig& cfg, int threads) {
  const RateSchedule schedule = cfg.schedule();
  const TerminalCondition q = cfg.terminal_condition();
  const int n = schedule.num_states();
  const int k = cfg.dimension;
  const double horizon = schedule.horizon();
  const Vector& x0 = cfg.initial_distribution;
  const Batch batch = simulate_batch(schedule, x0, cfg.simulation_seed, cfg.paths, threads);
  const int count = cfg.paths;

  // [M,M]_T - <M,M>_T and M_T, entrywise
  std::vector<Matrix> qv_gap(count);
  std::vector<Vector> m_t(count);
  parallel_for(count, threads, [&](int p) {
    qv_gap[p] = optional_qv(batch.paths[p], horizon) - predictable_qv(batch.paths[p], schedule, horizon);
    m_t[p] = martingale_at(batch.paths[p], schedule, horizon);
  });
  {
    bool ok = true;
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
      for (int b = 0; b < n; ++b) {
        std::vector<double> xs(count);
        for (int p = 0; p < count; ++p) xs[p] = qv_gap[p](a, b);
        const MeanSe m = mean_se(xs);
        ok = ok && within_3se(m, 0.0);
        if (m.se > 0.0) worst = std::max(worst, std::abs(m.mean) / m.se);
      }
    }
    run.check("compensator_identity", ok, Json{{"max_standard_errors", worst}}, 3.0);
  }
  {
    bool ok = true;
    double worst = 0.0;
    for (int a = 0; a < n; ++a) {
      std::vector<double> xs(count);
      for (int p = 0; p < count; ++p) xs[p] = m_t[p](a);
      const MeanSe m = mean_se(xs);
      ok = ok && within_3se(m, 0.0);
      if (m.se > 0.0) worst = std::max(worst, std::abs(m.mean) / m.se);
    }
    run.check("martingale_mean", ok, Json{{"max_standard_errors", worst}}, 3.0);
  }

  std::mt19937_64 rng(cfg.simulation_seed ^ 0x9e3779b97f4a7c15ULL);
  {
    // random piecewise-constant C on a uniform grid of 8 cells
    double worst = 0.0;
    const int draws = 100;
    for (int d = 0; d < draws; ++d) {
      std::vector<double> grid;
      for (int c = 0; c <= 8; ++c) grid.push_back(horizon * c / 8.0);
      std::vector<std::vector<Matrix>> values(8);
      for (auto& cell : values)
        for (int i = 0; i < n; ++i) cell.push_back(random_matrix(rng, k, n, 1.0));
      const PiecewiseConstantIntegrand c(grid, values);
      const ChainPath& path = batch.paths[d % count];
      const double lhs = seminorm_path_integral(c, path, schedule, horizon);
      const double rhs = qv_trace_integral(c, path, schedule, horizon);
      worst = std::max(worst, std::abs(lhs - rhs) / std::max(1.0, std::abs(lhs)));
    }
    run.check("seminorm_qv_identity", worst <= 1e-12, worst, 1e-12);
  }
  {
    const double a = schedule.max_abs_rate();
    int violations = 0;
    std::uniform_int_distribution<int> pick_piece(0, schedule.num_pieces() - 1);
    std::uniform_int_distribution<int> pick_state(0, n - 1);
    for (int d = 0; d < 1000; ++d) {
      const Matrix c = random_matrix(rng, k, n, 1.0);
      const Matrix& gen = schedule.generator(pick_piece(rng));
      const double semi = seminorm_sq_v(c, SeminormContext(gen, pick_state(rng)));
      if (semi > 3.0 * a * norm_sq(c) * (1.0 + 1e-12)) ++violations;
    }
    run.check("three_a_bound", violations == 0, violations, 0);
  }
  {
    double worst = 0.0;
    const double scale = std::max(1.0, schedule.max_abs_rate());
    for (int piece = 0; piece < schedule.num_pieces(); ++piece) {
      for (int i = 0; i < n; ++i) {
        worst = std::min(worst, min_eigenvalue(qv_density(schedule.generator(piece), i)));
      }
      const Vector p = transition_matrix(schedule, 0.0, horizon) * x0;
      worst = std::min(worst, min_eigenvalue(qv_density(schedule.generator(piece), p)));
    }
    run.check("qv_density_psd", worst >= -1e-12 * scale, worst, -1e-12 * scale);
  }
  {
    const StateFunction l = conditional_expectation(q, schedule, cfg.grid_steps);
    const IntegrandField gamma = representation_integrand(l, schedule);
    const double diagnostic = integrability_diagnostic(gamma, schedule, x0);
    const Matrix p0t = transition_matrix(schedule, 0.0, horizon);
    const Matrix l0 = l.node(0);
    double exact = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) exact += x0(i) * p0t(j, i) * (q(j) - l0.col(i)).squaredNorm();
    const double gap = std::abs(diagnostic - exact);
    run.check("isometry_exact", gap <= 1e-8 * std::max(1.0, exact),
              Json{{"integrability_diagnostic", diagnostic}, {"expected_square", exact}, {"gap", gap}},
              1e-8);
    std::vector<double> xs(count);
    for (int p = 0; p < count; ++p) {
      const ChainPath& path = batch.paths[p];
      xs[p] = (q(path.terminal_state()) - l0.col(path.initial_state())).squaredNorm();
    }
    const MeanSe m = mean_se(xs);
    run.check("isometry_monte_carlo", within_3se(m, exact),
              Json{{"mean", m.mean}, {"standard_error", m.se}, {"exact", exact}}, "3 standard errors");
  }
  check_terminal_distribution(run, batch, schedule, x0);

  const int code = run.all_passed() ? kExitOk : kExitVerification;
  run.finish(code);
  return code;
}

// Smooth bounded seed fields for the uniqueness check.
struct SeedFields {
  std::function<Matrix(double, int)> y;
  std::function<Vector(double, int)> z;
};

SeedFields random_seeds(std::uint64_t seed, int k, int n, double scale) {
  std::mt19937_64 rng(seed);
  std::vector<Matrix> ya, yw;
  std::vector<Vector> za, zw;
  for (int i = 0; i < n; ++i) {
    ya.push_back(random_matrix(rng, k, n, scale));
    yw.push_back(random_matrix(rng, k, n, 3.0));
    za.push_back(random_matrix(rng, k, 1, scale));
    zw.push_back(random_matrix(rng, k, 1, 3.0));
  }
  SeedFields s;
  s.y = [ya, yw](double t, int i) -> Matrix {
    return ya[i].cwiseProduct((yw[i] * t).array().cos().matrix());
  };
  s.z = [za, zw](double t, int i) -> Vector {
    return za[i].cwiseProduct((zw[i] * t).array().cos().matrix());
  };
  return s;
}

int cmd_diagnose(Run& run, const ProblemConfig& cfg, std::ostream& log) {
  const RateSchedule schedule = cfg.schedule();
  const Driver driver = cfg.driver();
  const TerminalCondition q = cfg.terminal_condition();
  const Stage stage = required_stage(driver);
  run.extra()["family"] = cfg.family;
  run.extra()["stage"] = std::string(stage_name(stage));

  const double bound = std::max(1.0, 2.0 * q.values().cwiseAbs().maxCoeff());
  const LipschitzEstimate est =
      estimate_lipschitz(driver, schedule, {bound, bound}, 20000, cfg.lipschitz_seed);
  const double c = driver.lipschitz_c.value_or(est.c);
  Json constants;
  constants["lipschitz_estimate"] = est.c;
  constants["lipschitz_estimate_is_lower_bound"] = est.lower_estimate;
  constants["f_ratio_sq"] = est.f_ratio_sq;
  constants["g_ratio_sq"] = est.g_ratio_sq;
  constants["estimate_box"] = bound;
  constants["declared_c"] = driver.lipschitz_c ? Json(*driver.lipschitz_c) : Json(nullptr);
  constants["c"] = c;
  constants["x"] = c > 0.0 ? Json(1.0 / (std::sqrt(2.0) * c)) : Json(nullptr);
  constants["three_a"] = 3.0 * schedule.max_abs_rate();
  constants["gronwall_constant"] = 7.0 * c * c + 0.25;
  const double growth = schedule.horizon() * (4.0 * c * c + 1.0);
  constants["factorial_base"] = finite_or_null(growth * std::exp(growth));
  constants["log_factorial_base"] = std::log(growth) + growth;

  SolverOptions options = solver_options(cfg);
  options.lipschitz_c = c;
  std::optional<std::pair<Solution, PicardReport>> first;
  try {
    first = solve(driver, q, schedule, options);
  } catch (const NoConvergence& e) {
    log << "no convergence: " << e.what() << "\n";
    run.extra()["constants"] = constants;
    run.write("picard.json", picard_json(e.report()).dump(2) + "\n");
    run.check("converged", false, e.report().iterations, cfg.max_iter);
    run.finish(kExitNoConvergence);
    return kExitNoConvergence;
  }
  const auto& [solution, report] = *first;
  run.write("picard.json", picard_json(report).dump(2) + "\n");
  run.check("terminal_exact", terminal_exact(solution, q), true, true);

  SolverOptions reseeded = options;
  const SeedFields seeds = random_seeds(cfg.lipschitz_seed ^ 0x5151ULL, cfg.dimension,
                                        cfg.num_states, bound);
  reseeded.y_seed = seeds.y;
  reseeded.z_seed = seeds.z;
  try {
    const auto second = solve(driver, q, schedule, reseeded);
    const double gap = sup_difference(solution, second.first);
    run.check("uniqueness_two_seeds", gap <= 10.0 * cfg.tol, gap, 10.0 * cfg.tol);
  } catch (const NoConvergence& e) {
    log << "no convergence from the second seed: " << e.what() << "\n";
    run.check("uniqueness_two_seeds", false, nullptr, 10.0 * cfg.tol);
  }

  const ContractionSummary contraction = contraction_diagnostics(report);
  run.check("contraction", contraction.passed,
            Json{{"worst", contraction.worst_ratio}, {"assessed", contraction.assessed},
                 {"vacuous", contraction.vacuous}, {"detail", contraction.detail}},
            contraction.bound);

  const Solution oracle = solve_ode_oracle(driver, q, schedule, cfg.grid_steps);
  const double oracle_gap = sup_difference(solution, oracle);
  run.check("oracle_equivalence", oracle_gap <= 1e-6, oracle_gap, 1e-6);

  constants["iterations"] = report.iterations;
  constants["observed_ratios"] = picard_json(report)["observed_ratios"];
  constants["log_factorial_bound"] = picard_json(report)["log_factorial_bound"];
  run.extra()["constants"] = constants;
  const int code = run.all_passed() ? kExitOk : kExitVerification;
  run.finish(code);
  return code;
}

}  // namespace

int run_command(std::string_view command, const RunOptions& options, std::ostream& log) {
  std::string text;
  ProblemConfig cfg;
  try {
    std::ifstream in(options.config, std::ios::binary);
    if (!in) throw ConfigError(options.config.string(), "cannot open config file");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    text = buffer.str();
    cfg = parse_config(text);
    // surface anything the library rejects as a configuration problem
    (void)cfg.driver();
    (void)cfg.terminal_condition();
  } catch (const ConfigError& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    log << "config error: " << e.what() << "\n";
    return kExitConfig;
  }

  constexpr std::string_view kCommands[] = {"solve", "simulate", "represent", "verify",
                                             "diagnose"};
  if (std::find(std::begin(kCommands), std::end(kCommands), command) == std::end(kCommands)) {
    log << "unknown command '" << command << "'\n";
    return kExitConfig;
  }
  const int threads = std::max(1, options.parallel);
  try {
    Run run(command, options, sha256_hex(text));
    if (command == "solve") return cmd_solve(run, cfg, log);
    if (command == "simulate") return cmd_simulate(run, cfg, threads);
    if (command == "represent") return cmd_represent(run, cfg, threads);
    if (command == "verify") return cmd_verify(run, cfg, threads);
    if (command == "diagnose") return cmd_diagnose(run, cfg, log);
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
  }
  return 1;
}

}  // namespace mcbsde::app
