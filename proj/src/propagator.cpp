#include "mstnpi/propagator.hpp"

#include <cmath>
#include <string>

#include <unsupported/Eigen/KroneckerProduct>

namespace mstnpi {

CMatrix unitary_propagator(const CMatrix& h, double dt) {
  if (h.rows() != h.cols()) throw ParameterError("unitary_propagator: Hamiltonian must be square");
  const double scale = std::max(1.0, h.cwiseAbs().maxCoeff());
  if ((h - h.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw ParameterError("unitary_propagator: Hamiltonian is not Hermitian");
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  const Eigen::VectorXd& e = eig.eigenvalues();
  CVector phases(e.size());
  for (Eigen::Index k = 0; k < e.size(); ++k) phases(k) = std::exp(cplx(0.0, -e(k) * dt));
  return eig.eigenvectors() * phases.asDiagonal() * eig.eigenvectors().adjoint();
}

CMatrix fb_superoperator(const CMatrix& u) {
  const auto d = u.rows();
  CMatrix k(d * d, d * d);
  for (Eigen::Index ap = 0; ap < d; ++ap)
    for (Eigen::Index bp = 0; bp < d; ++bp)
      for (Eigen::Index a = 0; a < d; ++a)
        for (Eigen::Index b = 0; b < d; ++b) k(ap * d + bp, a * d + b) = u(ap, a) * std::conj(u(bp, b));
  return k;
}

FbGate two_body_fb_propagator(const CMatrix& h_pair, double dt) {
  if (h_pair.rows() != 4 || h_pair.cols() != 4)
    throw ParameterError("two_body_fb_propagator: expected a 4x4 pair Hamiltonian");
  const CMatrix u = unitary_propagator(h_pair, dt);
  const std::size_t d = 2;
  FbGate g{Tensor{}, Index(d * d, IndexKind::Site, "in_a"), Index(d * d, IndexKind::Site, "in_b"),
           Index(d * d, IndexKind::Site, "out_a"), Index(d * d, IndexKind::Site, "out_b")};
  g.tensor = Tensor::zeros({g.in_a, g.in_b, g.out_a, g.out_b});
  auto& data = g.tensor.mutable_data();
  // pair index p = s+ * d + s-; two-site basis index = s_a * d + s_b
  for (std::size_t pa = 0; pa < 4; ++pa)
    for (std::size_t pb = 0; pb < 4; ++pb)
      for (std::size_t qa = 0; qa < 4; ++qa)
        for (std::size_t qb = 0; qb < 4; ++qb) {
          const std::size_t fwd_in = (pa / d) * d + pb / d, bwd_in = (pa % d) * d + pb % d;
          const std::size_t fwd_out = (qa / d) * d + qb / d, bwd_out = (qa % d) * d + qb % d;
          data[((pa * 4 + pb) * 4 + qa) * 4 + qb] =
              u(static_cast<Eigen::Index>(fwd_out), static_cast<Eigen::Index>(fwd_in)) *
              std::conj(u(static_cast<Eigen::Index>(bwd_out), static_cast<Eigen::Index>(bwd_in)));
        }
  return g;
}

MatrixProductOperator single_site_fb_mpo(const CMatrix& h_site, double dt) {
  const CMatrix k = fb_superoperator(unitary_propagator(h_site, dt));
  MatrixProductOperator op;
  const auto dim = static_cast<std::size_t>(k.rows());
  op.in_sites.emplace_back(dim, IndexKind::Site, "site1");
  op.out_sites.emplace_back(dim, IndexKind::Site, "site1");
  // tensor layout (in, out); dense matrix is k[out, in]
  op.chain.tensors.push_back(Tensor::from_matrix(k.transpose(), {op.in_sites[0]}, {op.out_sites[0]}));
  return op;
}

std::vector<CMatrix> pair_hamiltonians(const SpinChainModel& model) {
  model.validate();
  const std::size_t p = model.num_sites;
  std::vector<CMatrix> out;
  const CMatrix id = CMatrix::Identity(2, 2);
  for (std::size_t i = 0; i + 1 < p; ++i) {
    const double wl = i == 0 ? 1.0 : 0.5;
    const double wr = i + 2 == p ? 1.0 : 0.5;
    CMatrix h = two_body_term(model, i);
    h += wl * CMatrix(Eigen::kroneckerProduct(one_body_term(model, i), id));
    h += wr * CMatrix(Eigen::kroneckerProduct(id, one_body_term(model, i + 1)));
    out.push_back(h);
  }
  return out;
}

namespace {

std::string site_tag(std::size_t i) { return "site" + std::to_string(i + 1); }

// One Trotter layer: gates on pairs (i, i+1) with i % 2 == parity.
MatrixProductOperator trotter_layer(const std::vector<CMatrix>& pairs, std::size_t num_sites,
                                    std::size_t parity, double dt, const TruncationParams& params) {
  MatrixProductOperator op;
  for (std::size_t i = 0; i < num_sites; ++i) {
    op.in_sites.emplace_back(4, IndexKind::Site, site_tag(i));
    op.out_sites.emplace_back(4, IndexKind::Site, site_tag(i));
  }
  std::vector<Tensor> tensors(num_sites);
  std::vector<Index> bonds(num_sites - 1);
  std::size_t i = 0;
  while (i < num_sites) {
    if (i + 1 < num_sites && i % 2 == parity) {
      FbGate g = two_body_fb_propagator(pairs[i], dt);
      Tensor t = g.tensor.replaced(g.in_a, op.in_sites[i])
                     .replaced(g.in_b, op.in_sites[i + 1])
                     .replaced(g.out_a, op.out_sites[i])
                     .replaced(g.out_b, op.out_sites[i + 1]);
      auto res = svd_truncate(t, {op.in_sites[i], op.out_sites[i]}, params, Absorb::Sqrt,
                              IndexKind::SpatialBond, "alpha" + std::to_string(i + 1));
      tensors[i] = res.u;
      tensors[i + 1] = res.v;
      bonds[i] = res.bond;
      i += 2;
    } else {
      tensors[i] = Tensor::identity(op.in_sites[i], op.out_sites[i]);
      ++i;
    }
  }
  // unit bonds between blocks
  for (std::size_t b = 0; b + 1 < num_sites; ++b) {
    if (bonds[b].id() != 0) continue;
    bonds[b] = Index(1, IndexKind::SpatialBond, "alpha" + std::to_string(b + 1));
    tensors[b] = tensors[b].with_unit_index(bonds[b]);
    tensors[b + 1] = tensors[b + 1].with_unit_index(bonds[b]);
  }
  op.chain.tensors = std::move(tensors);
  op.chain.bonds = std::move(bonds);
  return op;
}

}  // namespace

MatrixProductOperator build_fb_mpo(const SpinChainModel& model, double dt,
                                   const TruncationParams& params) {
  model.validate();
  if (model.num_sites == 1) return single_site_fb_mpo(one_body_term(model, 0), dt);
  const auto pairs = pair_hamiltonians(model);
  const std::size_t p = model.num_sites;
  // pair i (0-based) is "odd" in 1-based numbering when i is even
  const MatrixProductOperator odd_half = trotter_layer(pairs, p, 0, dt / 2.0, params);
  const MatrixProductOperator odd_half_2 = trotter_layer(pairs, p, 0, dt / 2.0, params);
  const MatrixProductOperator even = trotter_layer(pairs, p, 1, dt, params);
  return mpo_product(odd_half_2, mpo_product(even, odd_half, params), params);
}

PropagatorFactors split_fb_mpo(const MatrixProductOperator& k, const TruncationParams& params) {
  k.validate();
  PropagatorFactors f;
  f.in_sites = k.in_sites;
  f.out_sites = k.out_sites;
  f.spatial_bonds = k.chain.bonds;
  for (std::size_t i = 0; i < k.length(); ++i) {
    std::vector<Index> rows;
    for (const auto& idx : k[i].indices())
      if (idx != k.out_sites[i]) rows.push_back(idx);
    auto res = svd_truncate(k[i], rows, params, Absorb::Sqrt, IndexKind::TemporalBond,
                            "beta" + std::to_string(i + 1));
    f.u.push_back(res.u);
    f.r.push_back(res.v);
    f.temporal_bonds.push_back(res.bond);
  }
  return f;
}

MatrixProductOperator PropagatorFactors::recombine() const {
  MatrixProductOperator op;
  op.in_sites = in_sites;
  op.out_sites = out_sites;
  op.chain.bonds = spatial_bonds;
  for (std::size_t i = 0; i < u.size(); ++i) op.chain.tensors.push_back(contract(u[i], r[i]));
  return op;
}

}  // namespace mstnpi
