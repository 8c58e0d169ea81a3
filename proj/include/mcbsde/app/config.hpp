#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "mcbsde/driver.hpp"
#include "mcbsde/representation.hpp"

namespace mcbsde::app {

// Validation failure. `field` is a dotted path into the document, or
// "line L, column C" for syntax errors.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& message)
      : std::runtime_error(field + ": " + message), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ProblemConfig {
  int num_states = 0;
  int dimension = 0;
  double horizon = 0.0;
  // Start time of each piece (first is 0) and its generator; matrices[k](j, i)
  // is the jump rate from state i to state j.
  std::vector<double> piece_starts;
  std::vector<Matrix> generators;
  Vector initial_distribution;

  std::string family;
  FamilyParams params;

  Matrix terminal;  // K x N, column i is q(e_i)
  int grid_steps = 1000;
  double tol = 1e-10;
  int max_iter = 200;
  std::uint64_t simulation_seed = 1;
  std::uint64_t lipschitz_seed = 2;
  int paths = 1000;

  RateSchedule schedule() const;
  Driver driver() const;
  TerminalCondition terminal_condition() const;
};

ProblemConfig parse_config(const std::string& text);
ProblemConfig load_config(const std::filesystem::path& path);

}  // namespace mcbsde::app
