#pragma once

#include <random>
#include <vector>

#include "mstnpi/chain.hpp"
#include "mstnpi/tensor.hpp"

namespace mstnpi {

// Site-index convention: a site leg of dimension d*d encodes the
// forward-backward pair (s+, s-) as p = s+ * d + s- (s+ slow). Spin basis
// state 0 is |+1>, state 1 is |-1>.

/// Vectorized density matrix along a chain of sites (one d^2 leg per site).
struct MatrixProductState {
  TensorChain chain;
  std::vector<Index> sites;

  std::size_t length() const { return sites.size(); }
  const Tensor& operator[](std::size_t i) const { return chain.tensors[i]; }
  void validate() const;
};

/// Operator with an input and an output site leg per site. Its dense form maps
/// the input multi-index to the output multi-index: rho_out = M rho_in.
struct MatrixProductOperator {
  TensorChain chain;
  std::vector<Index> in_sites;
  std::vector<Index> out_sites;

  std::size_t length() const { return in_sites.size(); }
  const Tensor& operator[](std::size_t i) const { return chain.tensors[i]; }
  void validate() const;
};

// d x d matrix -> length d^2 vector (row-major, matching the site convention).
CVector vectorize(const CMatrix& m);
CMatrix unvectorize(const CVector& v, std::size_t d);

MatrixProductState product_mps(const std::vector<CVector>& site_states);

MatrixProductOperator identity_mpo(std::size_t length, std::size_t site_dim);

MatrixProductState apply_mpo(const MatrixProductOperator& op, const MatrixProductState& state,
                             const TruncationParams& params);

/// Dense(result) = Dense(a) * Dense(b): b acts first.
MatrixProductOperator mpo_product(const MatrixProductOperator& a, const MatrixProductOperator& b,
                                  const TruncationParams& params);

void compress(MatrixProductState& state, const TruncationParams& params);
void compress(MatrixProductOperator& op, const TruncationParams& params);

cplx trace(const MatrixProductState& state);

/// Tr(rho O_site), site is 0-based.
cplx expectation(const MatrixProductState& state, std::size_t site, const CMatrix& observable);

struct BondStats {
  std::size_t max_dim = 1;
  double mean_dim = 1.0;  // mean over the P-1 spatial bonds
};
BondStats bond_stats(const MatrixProductState& state);

// Dense forms, site 0 slowest.
CVector to_dense(const MatrixProductState& state);
CMatrix to_dense(const MatrixProductOperator& op);
// Reshapes a dense vectorized state into the d^P x d^P density matrix.
CMatrix density_matrix(const CVector& vec, std::size_t num_sites, std::size_t d);
CVector vectorize_density(const CMatrix& rho, std::size_t num_sites, std::size_t d);

// Random chains for tests and benchmarks.
MatrixProductState random_mps(std::size_t length, std::size_t site_dim, std::size_t bond_dim,
                              std::mt19937_64& rng);
MatrixProductOperator random_mpo(std::size_t length, std::size_t site_dim, std::size_t bond_dim,
                                 std::mt19937_64& rng);

}  // namespace mstnpi
