#pragma once

#include <optional>
#include <string>
#include <vector>

#include "mstnpi/tensor.hpp"

namespace mstnpi {

// Units: hbar = 1, energies in units of hbar*Omega's scale as given in the
// configuration (all inputs are dimensionless numbers in these units).

namespace pauli {
CMatrix identity();
CMatrix x();
CMatrix y();
CMatrix z();
}  // namespace pauli

enum class ModelKind { Ising, XXZ, Heisenberg };

ModelKind parse_model_kind(const std::string& name);
std::string to_string(ModelKind kind);

struct SpinChainModel {
  ModelKind kind = ModelKind::Ising;
  std::size_t num_sites = 1;
  std::size_t local_dim = 2;
  double eps = 0.0;    // longitudinal field
  double omega = 1.0;  // transverse field
  double jx = 0.0;
  double jy = 0.0;
  double jz = 0.0;

  void validate() const;
};

// eps * sz - Omega * sx on site `site` (0-based).
CMatrix one_body_term(const SpinChainModel& model, std::size_t site);
// Jx sx sx + Jy sy sy + Jz sz sz on the bond (site, site+1), 0-based.
CMatrix two_body_term(const SpinChainModel& model, std::size_t site);
// Full d^P x d^P Hamiltonian, site 0 the slowest tensor factor.
CMatrix dense_hamiltonian(const SpinChainModel& model);

struct BathMode {
  double frequency;
  double coupling;
};

enum class SpectralKind { Ohmic, Discrete };

/// Harmonic bath attached to every site through `coupling_operator`.
/// Ohmic: J(w) = pi/2 * xi * w * exp(-w / omega_c).
/// Discrete: J(w) = pi/2 * sum_l c_l^2 / w_l * delta(w - w_l).
struct BathModel {
  SpectralKind spectral = SpectralKind::Ohmic;
  double xi = 0.0;
  double omega_c = 1.0;
  double beta = 1.0;
  std::vector<BathMode> modes;
  CMatrix coupling_operator = pauli::z();

  void validate() const;
  double spectral_density(double w) const;  // Ohmic only
  // Eigenvalues of the (diagonal) coupling operator, in basis order.
  std::vector<double> coupling_eigenvalues() const;
};

/// Discretizes the Ohmic spectral density into `num_modes` modes placed at
/// w_l = l * w_max / num_modes, c_l^2 = (2/pi) w_l J(w_l) dw.
BathModel discretize_ohmic(const BathModel& ohmic, std::size_t num_modes, double w_max);

enum class Observable { Sx, Sy, Sz };

CMatrix observable_matrix(Observable o);
std::string to_string(Observable o);

struct ObservableRequest {
  std::size_t site;  // 0-based
  Observable op;
};

struct SimulationConfig {
  SpinChainModel model;
  std::optional<BathModel> bath;
  double dt = 0.25;
  std::size_t num_steps = 1;
  std::size_t memory_length = 1;
  double cutoff = 1e-11;
  std::optional<std::size_t> max_dim;
  std::string initial_state = "all_up";
  std::vector<ObservableRequest> observables;
  bool renormalize = false;

  void validate() const;
  TruncationParams truncation() const { return {cutoff, max_dim}; }
};

/// Parses the `key = value` text format (`#` starts a comment). Throws
/// ParameterError naming the offending key.
SimulationConfig parse_config(const std::string& text);
// Inverse of parse_config (up to formatting).
std::string format_config(const SimulationConfig& config);

}  // namespace mstnpi
