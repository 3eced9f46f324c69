#pragma once

#include <vector>

#include "mstnpi/influence.hpp"
#include "mstnpi/model.hpp"

namespace mstnpi {

// Brute-force references. Dense states are d^P x d^P density matrices with
// site 0 the slowest tensor factor.

/// rho(n dt) = U^n rho0 U^n^dag with U = exp(-i H dt) from the exact spectrum.
/// Returns n + 1 states (n = 0..steps). Throws ParameterError when P > 7.
std::vector<CMatrix> dense_liouville_propagate(const SpinChainModel& model, const CMatrix& rho0, double dt,
                                               std::size_t steps);

/// One step of the second-order odd/even split unitary, assembled from
/// Kronecker products of dense pair exponentials (independent of the MPO code).
CMatrix dense_trotter_unitary(const SpinChainModel& model, double dt);

/// As dense_liouville_propagate but stepping with an arbitrary step unitary.
std::vector<CMatrix> dense_unitary_propagate(const CMatrix& step_unitary, const CMatrix& rho0,
                                             std::size_t steps);

/// Literal sum over all forward-backward paths of bare amplitudes times the
/// per-site influence weights. `step_unitary` is the one-step system unitary
/// on d^P states, `rho0` the dense density matrix. Returns steps + 1 dense
/// density matrices. Throws ParameterError when P > 2 or steps > 6.
std::vector<CMatrix> brute_force_path_sum(const CMatrix& step_unitary, std::size_t num_sites,
                                          const EtaTable& eta, const CMatrix& rho0, std::size_t steps);

/// Exact dynamics of the spins plus one set of explicit oscillators per site,
///   H = H_s + sum_i sum_l [w_l a^dag a - c_l x_l s_i + c_l^2 / (2 w_l^2) s_i^2],
/// x_l = (a + a^dag)/sqrt(2 w_l), with ladders truncated at `levels[l]` states
/// and the bath starting in its (truncated) thermal state. Returns the spin
/// marginal at n dt for n = 0..steps. Throws ParameterError when the total
/// dimension exceeds 2^14 or a level count is below 1.
std::vector<CMatrix> exact_diag_system_bath(const SpinChainModel& model, const std::vector<BathMode>& modes,
                                            const std::vector<std::size_t>& levels, double beta,
                                            const CMatrix& rho0, double dt, std::size_t steps,
                                            const CMatrix& coupling_operator = pauli::z());

// Dense density matrix of a named product state or of a vectorized MPS.
CMatrix dense_initial_state(const std::string& name, std::size_t num_sites);

}  // namespace mstnpi
