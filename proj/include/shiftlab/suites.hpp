#pragma once

#include <string>
#include <vector>

#include "shiftlab/config.hpp"
#include "shiftlab/report.hpp"

namespace shiftlab {

std::vector<std::string> suite_names();
bool is_suite_name(const std::string& name);

/// Builds the configured models, shifts and test-function batteries and
/// runs one named suite (`all` runs every suite in order).
SuiteResult run_suite(const std::string& name, const ExperimentConfig& cfg);

/// Closed-form reference values for the configured instance (steering
/// energies, bound constants, exponents); deterministic, no simulation.
std::string oracle_table(const ExperimentConfig& cfg);

// config -> model builders (shared with tests and the acceptance suite)
DelayModel delay_model_from_config(const ExperimentConfig& cfg);
EvolutionModel evolution_model_from_config(const ExperimentConfig& cfg);
Segment default_initial_segment(const DelayModel& model, double step);
StateVector default_initial_state(std::size_t dim);
ShiftProfile shift_profile_from_config(const ExperimentConfig& cfg, std::size_t dim);

}  // namespace shiftlab
