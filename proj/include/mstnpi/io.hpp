#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mstnpi/engine.hpp"

namespace mstnpi {

/// Text MPS container, version 1:
///
///   mstnpi-mps 1
///   sites <P>
///   site <i> <left> <phys> <right>     (one header per site, i = 1..P)
///   <re> <im>                          (left*phys*right lines, left slowest,
///   ...                                 right fastest)
///
/// Edge tensors use a left/right dimension of 1.
void write_mps(std::ostream& os, const MatrixProductState& state);
MatrixProductState read_mps(std::istream& is);
void save_mps(const std::string& path, const MatrixProductState& state);
MatrixProductState load_mps(const std::string& path);

/// Observable trajectory rows `step,time,site,observable,value_re,value_im`,
/// one per step (1..N) and requested observable, sites 1-based.
void write_trajectory_csv(std::ostream& os, const SimulationConfig& config, const std::vector<StepRecord>& history);
/// Bond statistics rows `step,time,max_bond,avg_bond`.
void write_bond_csv(std::ostream& os, const std::vector<StepRecord>& history);

struct RunManifest {
  std::string config_text;  // format_config snapshot
  std::string version;
  double wall_seconds = 0.0;
  double dt = 0.0;
  std::size_t memory_length = 0;
  double cutoff = 0.0;
  std::string oracle = "none";
  std::string scan;  // "param=v1,v2,..." or empty
  std::vector<std::string> outputs;

  friend bool operator==(const RunManifest&, const RunManifest&) = default;
};

std::string manifest_to_json(const RunManifest& m);
RunManifest manifest_from_json(const std::string& text);

}  // namespace mstnpi
