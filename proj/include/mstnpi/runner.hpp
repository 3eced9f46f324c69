#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mstnpi/engine.hpp"
#include "mstnpi/io.hpp"

namespace mstnpi {

enum class OracleKind { None, PathSum, Dense, ExactDiag };

OracleKind parse_oracle_kind(const std::string& name);
std::string to_string(OracleKind kind);

/// Named product state, or else a path to an MPS file.
MatrixProductState resolve_initial_state(const SimulationConfig& config);

std::vector<StepRecord> run_engine(const SimulationConfig& config);

/// Oracle trajectory in the same record layout (observables per step; bond
/// statistics left at their defaults). Throws ParameterError with an
/// actionable message when the configuration violates the oracle's size guard.
std::vector<StepRecord> run_oracle(const SimulationConfig& config, OracleKind kind);

/// Exact-diag reference with Fock-level convergence: levels start at `start`
/// per mode; each mode grows by 2 until two further levels on it change no
/// density-matrix element by more than `tolerance`.
struct ExactDiagRun {
  std::vector<CMatrix> states;
  std::vector<std::size_t> levels;
  double level_change = 0.0;  // max element change over the final per-mode +2 trials
};
ExactDiagRun converged_exact_diag(const SimulationConfig& config, std::size_t start = 4, double tolerance = 1e-4);

struct ScanSpec {
  std::string parameter;  // dt | L | chi
  std::vector<std::string> values;
};

ScanSpec parse_scan(const std::string& text);
SimulationConfig with_scan_value(const SimulationConfig& config, const std::string& parameter,
                                 const std::string& value);

struct RunOptions {
  std::string config_path;
  std::string output_dir = ".";
  OracleKind oracle = OracleKind::None;
  std::optional<ScanSpec> scan;
};

/// The `run` command: writes trajectory and bond CSVs (one pair per scan value),
/// an optional oracle CSV, and finally the manifest. Returns the manifest.
RunManifest run_command(const RunOptions& options, std::ostream& log);

// Worker count for scans: MSTNPI_THREADS if set, otherwise the hardware count.
std::size_t worker_threads();

}  // namespace mstnpi
