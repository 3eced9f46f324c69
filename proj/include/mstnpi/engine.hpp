#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mstnpi/influence.hpp"
#include "mstnpi/model.hpp"
#include "mstnpi/propagator.hpp"

namespace mstnpi {

enum class ColumnRole { Initial, Intermediate, Terminal };

/// One time point of the grid: per site, the R factor arriving from the
/// previous step (absent on the initial column) and the U factor leaving
/// towards the next one (absent on the terminal column). Both share the site
/// leg `points[i]`, as does the row's influence tensor, so the grid tensor of
/// site i is the hyperedge product R_i U_i G_i.
struct GridColumn {
  std::size_t time_point = 0;
  ColumnRole role = ColumnRole::Initial;
  std::vector<Index> points;
  std::vector<std::optional<Tensor>> r;
  std::vector<std::optional<Tensor>> u;
  std::vector<Index> in_bonds;    // temporal bonds from the previous column (Intermediate/Terminal)
  std::vector<Index> out_bonds;   // temporal bonds to the next column (Initial/Intermediate)
  std::vector<Index> spatial;     // spatial bonds of the U factors (P-1)
};

struct StepRecord {
  std::size_t step = 0;
  double time = 0.0;
  std::vector<cplx> observables;  // in config.observables order
  BondStats bonds;
  cplx trace = 1.0;
};

/// Memory-truncated MS-TNPI propagation of one configuration.
class Engine {
 public:
  explicit Engine(SimulationConfig config);
  // Custom initial density (for example a state loaded from file).
  Engine(SimulationConfig config, MatrixProductState initial);

  const SimulationConfig& config() const { return config_; }
  const PropagatorFactors& factors() const { return factors_; }
  const MatrixProductOperator& propagator() const { return propagator_; }
  const std::optional<EtaTable>& eta() const { return eta_; }
  std::size_t step_count() const { return step_; }
  const std::vector<GridColumn>& columns() const { return columns_; }
  const InfluenceRow& influence() const { return row_; }
  const std::vector<StepRecord>& history() const { return history_; }

  /// Advances by one time step and records observables at the new point.
  void step();
  void run(std::size_t steps);
  void run() { run(config_.num_steps); }

  /// Reduced density at the current time point, as an MPS over the sites.
  MatrixProductState density_at() const;

  /// Augmented propagator over the first n steps, computed on a fresh grid
  /// with full memory. Requires n <= memory length and n <= num_steps.
  MatrixProductOperator augmented_propagator(std::size_t n) const;

  // Trace drift beyond this raises a warning through the handler (stderr by default).
  static constexpr double kTraceWarning = 1e-6;
  void set_warning_handler(std::function<void(const std::string&)> h) { warn_ = std::move(h); }

 private:
  void init(MatrixProductState initial);
  GridColumn make_column(std::size_t time_point, const std::vector<Index>* in_bonds) const;
  void attach_u(GridColumn& col) const;
  // Contracts a chain over sites with one column of the grid.
  // `edges` holds the per-site copies of the influence bond entering the
  // column and is replaced by the copies of the bond leaving it.
  TensorChain absorb_column(const TensorChain& state, const GridColumn& col, const InfluenceRow& row,
                            std::vector<Index>& edges, bool open_points) const;
  TensorChain observe_chain() const;
  void record();

  SimulationConfig config_;
  MatrixProductOperator propagator_;
  PropagatorFactors factors_;
  std::optional<EtaTable> eta_;
  // C0: everything already retired, as a chain over sites. Its legs per site
  // are the passenger legs plus either the initial site leg or the temporal
  // and influence bonds pointing into the window.
  TensorChain c0_;
  std::vector<Index> passengers_;      // extra per-site legs carried through (AP input legs)
  std::vector<Index> c0_points_;       // initial site legs while nothing is retired
  std::vector<Index> c0_edges_;        // per-site copies of the influence edge
  std::vector<GridColumn> columns_;
  InfluenceRow row_;
  std::size_t step_ = 0;
  std::vector<StepRecord> history_;
  MatrixProductState current_;
  std::function<void(const std::string&)> warn_;
};

/// Product initial state by name (all_up, all_down, neel) as an MPS.
MatrixProductState named_initial_state(const std::string& name, std::size_t num_sites);

}  // namespace mstnpi
