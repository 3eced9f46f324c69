#pragma once

#include <random>

#include <unsupported/Eigen/KroneckerProduct>

#include "mstnpi/mp_algebra.hpp"
#include "mstnpi/model.hpp"

namespace testing {

using mstnpi::CMatrix;
using mstnpi::CVector;
using mstnpi::cplx;

inline CMatrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = cplx(g(rng), g(rng));
  return m;
}

inline mstnpi::Tensor random_tensor(const std::vector<mstnpi::Index>& idx, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<cplx> data(mstnpi::product_of_dims(idx));
  for (auto& v : data) v = cplx(g(rng), g(rng));
  return mstnpi::Tensor(idx, data);
}

inline CMatrix kron(const CMatrix& a, const CMatrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

inline double max_abs(const CMatrix& m) { return m.size() ? m.cwiseAbs().maxCoeff() : 0.0; }

// Operator on `site` of a P-site chain (site 0 slowest).
inline CMatrix on_site(const CMatrix& op, std::size_t site, std::size_t num_sites) {
  const auto l = static_cast<Eigen::Index>(std::size_t{1} << site);
  const auto r = static_cast<Eigen::Index>(std::size_t{1} << (num_sites - site - 1));
  return kron(kron(CMatrix::Identity(l, l), op), CMatrix::Identity(r, r));
}

inline double sz_expectation(const CMatrix& rho, std::size_t site, std::size_t num_sites) {
  return (rho * on_site(mstnpi::pauli::z(), site, num_sites)).trace().real();
}

inline CMatrix dense_rho(const mstnpi::MatrixProductState& st) {
  return mstnpi::density_matrix(mstnpi::to_dense(st), st.length(), 2);
}

}  // namespace testing
