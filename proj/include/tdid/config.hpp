#pragma once

#include <optional>
#include <string>

#include "tdid/identifier.hpp"
#include "tdid/lmi.hpp"
#include "tdid/model.hpp"
#include "tdid/signals.hpp"

namespace tdid {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PeSettings {
  double window = 1000.0;   // s
  double quad_step = 0.01;  // regressor sampling step, s
  double stride = 0.0;      // window start spacing; 0 = window/10
};

struct OutputSettings {
  std::string dir = "out";
  bool plots = false;
};

struct LmiSettings {
  PsiMode mode = PsiMode::Derived;
  SearchOptions search;
};

/// One experiment document: plant, optional fictitious delay grid, matching
/// decomposition, identifier gains, input, simulation and analysis settings.
struct ExperimentConfig {
  int version = 1;
  PlantModel plant;  // as given (pre grid extension)
  std::optional<DelayGrid> grid;
  IdentifierConfig identifier;  // known parts/T0 refer to the effective plant
  InputSpec input;
  SimConfig sim;
  LmiSettings lmi;
  PeSettings pe;
  OutputSettings output;

  /// The plant the experiment actually runs: grid-extended when a grid is
  /// present, the original otherwise.
  PlantModel effective_plant() const;

  /// LMI problem for the effective plant and configured injection.
  PsiProblem psi_problem() const;
};

/// Parse a config document; throws ConfigError with line/column on malformed
/// JSON and on unknown or missing keys.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace tdid
