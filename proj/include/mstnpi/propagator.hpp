#pragma once

#include <vector>

#include "mstnpi/model.hpp"
#include "mstnpi/mp_algebra.hpp"

namespace mstnpi {

/// exp(-i H dt) for Hermitian H, via eigendecomposition.
CMatrix unitary_propagator(const CMatrix& h, double dt);

/// Forward-backward superoperator of a unitary in the pair convention:
/// K[(a',b'), (a,b)] = U[a',a] * conj(U[b',b]), so vec(U rho U^dag) = K vec(rho)
/// for a single tensor factor.
CMatrix fb_superoperator(const CMatrix& u);

/// Two-site forward-backward gate with legs (in_a, in_b, out_a, out_b), each of
/// dimension d^2, where a is the left site.
struct FbGate {
  Tensor tensor;
  Index in_a, in_b, out_a, out_b;
};

FbGate two_body_fb_propagator(const CMatrix& h_pair, double dt);

/// Single-site forward-backward propagator as a 1-site MPO.
MatrixProductOperator single_site_fb_mpo(const CMatrix& h_site, double dt);

/// Pair Hamiltonians with the terminal one-body terms absorbed fully and the
/// interior ones split in halves; entry i acts on sites (i, i+1).
std::vector<CMatrix> pair_hamiltonians(const SpinChainModel& model);

/// Second-order odd/even split forward-backward propagator as an MPO:
/// K = K_odd(dt/2) K_even(dt) K_odd(dt/2), with every two-site gate split into
/// single-site tensors by SVD and the layers combined at the given truncation.
MatrixProductOperator build_fb_mpo(const SpinChainModel& model, double dt,
                                   const TruncationParams& params);

/// Per-site split W_i = sum_beta U_i R_i of a propagator MPO: U_i carries the
/// input site leg and the spatial bonds, R_i carries the output site leg, and
/// the two share the temporal bond beta_i.
struct PropagatorFactors {
  std::vector<Tensor> u;
  std::vector<Tensor> r;
  std::vector<Index> in_sites;
  std::vector<Index> out_sites;
  std::vector<Index> spatial_bonds;
  std::vector<Index> temporal_bonds;

  std::size_t length() const { return u.size(); }
  // Contracts every U_i with R_i back into an MPO.
  MatrixProductOperator recombine() const;
};

PropagatorFactors split_fb_mpo(const MatrixProductOperator& k, const TruncationParams& params);

}  // namespace mstnpi
