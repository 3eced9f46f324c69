#include "mstnpi/mp_algebra.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace mstnpi {

namespace {

std::string site_tag(std::size_t i) { return "site" + std::to_string(i + 1); }
std::string bond_tag(std::size_t i) { return "alpha" + std::to_string(i + 1); }

void check_sites(const TensorChain& chain, const std::vector<Index>& sites, const char* what) {
  chain.validate();
  if (chain.size() != sites.size())
    throw StructuralError(std::string(what) + ": one site index per tensor required");
  for (std::size_t i = 0; i < sites.size(); ++i)
    if (!chain.tensors[i].has(sites[i]))
      throw StructuralError(std::string(what) + ": tensor " + std::to_string(i) +
                            " lacks its site index");
}

// Tensor of weights w(p) over a d^2 site leg.
Tensor site_weights(const Index& site, const CMatrix& w_of_pair) {
  const auto d = static_cast<std::size_t>(w_of_pair.rows());
  Tensor t = Tensor::zeros({site});
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) t.mutable_data()[a * d + b] = w_of_pair(a, b);
  return t;
}

std::size_t local_dim(const Index& site) {
  const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(site.dim()))));
  if (d * d != site.dim()) throw StructuralError("site index dimension is not a square");
  return d;
}

cplx contract_with_weights(const MatrixProductState& state, std::size_t special,
                           const CMatrix& special_weights) {
  if (state.length() == 0) throw StructuralError("empty MPS");
  Tensor acc;
  for (std::size_t i = 0; i < state.length(); ++i) {
    const std::size_t d = local_dim(state.sites[i]);
    const CMatrix w = i == special ? special_weights : CMatrix(CMatrix::Identity(d, d));
    Tensor reduced = contract(state[i], site_weights(state.sites[i], w));
    acc = i == 0 ? reduced : contract(acc, reduced);
  }
  return acc.scalar_value();
}

}  // namespace

void MatrixProductState::validate() const { check_sites(chain, sites, "MatrixProductState"); }

void MatrixProductOperator::validate() const {
  check_sites(chain, in_sites, "MatrixProductOperator");
  check_sites(chain, out_sites, "MatrixProductOperator");
}

CVector vectorize(const CMatrix& m) {
  CVector v(m.rows() * m.cols());
  for (Eigen::Index a = 0; a < m.rows(); ++a)
    for (Eigen::Index b = 0; b < m.cols(); ++b) v(a * m.cols() + b) = m(a, b);
  return v;
}

CMatrix unvectorize(const CVector& v, std::size_t d) {
  if (static_cast<std::size_t>(v.size()) != d * d) throw StructuralError("unvectorize: bad length");
  CMatrix m(d, d);
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) m(a, b) = v(a * d + b);
  return m;
}

MatrixProductState product_mps(const std::vector<CVector>& site_states) {
  if (site_states.empty()) throw ParameterError("product_mps: empty sequence of site states");
  MatrixProductState mps;
  const std::size_t n = site_states.size();
  for (std::size_t i = 0; i + 1 < n; ++i) mps.chain.bonds.emplace_back(1, IndexKind::SpatialBond, bond_tag(i));
  for (std::size_t i = 0; i < n; ++i) {
    const auto dim = static_cast<std::size_t>(site_states[i].size());
    Index site(dim, IndexKind::Site, site_tag(i));
    local_dim(site);
    std::vector<Index> idx;
    if (i > 0) idx.push_back(mps.chain.bonds[i - 1]);
    idx.push_back(site);
    if (i + 1 < n) idx.push_back(mps.chain.bonds[i]);
    mps.chain.tensors.emplace_back(
        idx, std::vector<cplx>(site_states[i].data(), site_states[i].data() + dim));
    mps.sites.push_back(site);
  }
  return mps;
}

MatrixProductOperator identity_mpo(std::size_t length, std::size_t site_dim) {
  if (length == 0) throw ParameterError("identity_mpo: zero length");
  MatrixProductOperator op;
  for (std::size_t i = 0; i + 1 < length; ++i)
    op.chain.bonds.emplace_back(1, IndexKind::SpatialBond, bond_tag(i));
  for (std::size_t i = 0; i < length; ++i) {
    Index in(site_dim, IndexKind::Site, site_tag(i));
    Index out(site_dim, IndexKind::Site, site_tag(i));
    Tensor t = Tensor::identity(in, out);
    if (i > 0) t = t.with_unit_index(op.chain.bonds[i - 1]);
    if (i + 1 < length) t = t.with_unit_index(op.chain.bonds[i]);
    op.chain.tensors.push_back(std::move(t));
    op.in_sites.push_back(in);
    op.out_sites.push_back(out);
  }
  return op;
}

MatrixProductState apply_mpo(const MatrixProductOperator& op, const MatrixProductState& state,
                             const TruncationParams& params) {
  op.validate();
  state.validate();
  if (op.length() != state.length())
    throw StructuralError("apply_mpo: operator and state lengths differ");
  TensorChain relabelled = with_fresh_bonds(op.chain);
  MatrixProductState out;
  for (std::size_t i = 0; i < op.length(); ++i) {
    if (op.in_sites[i].dim() != state.sites[i].dim())
      throw StructuralError("apply_mpo: site dimension mismatch at site " + std::to_string(i));
    const Index fresh = op.out_sites[i].fresh();
    relabelled.tensors[i] =
        relabelled.tensors[i].replaced(op.in_sites[i], state.sites[i]).replaced(op.out_sites[i], fresh);
    out.sites.push_back(fresh);
  }
  out.chain = zip_chains(relabelled, state.chain);
  compress(out.chain, params);
  return out;
}

MatrixProductOperator mpo_product(const MatrixProductOperator& a, const MatrixProductOperator& b,
                                  const TruncationParams& params) {
  a.validate();
  b.validate();
  if (a.length() != b.length()) throw StructuralError("mpo_product: operator lengths differ");
  TensorChain relabelled = with_fresh_bonds(a.chain);
  MatrixProductOperator out;
  out.in_sites = b.in_sites;
  for (std::size_t i = 0; i < a.length(); ++i) {
    if (a.in_sites[i].dim() != b.out_sites[i].dim())
      throw StructuralError("mpo_product: site dimension mismatch at site " + std::to_string(i));
    const Index fresh = a.out_sites[i].fresh();
    relabelled.tensors[i] =
        relabelled.tensors[i].replaced(a.out_sites[i], fresh).replaced(a.in_sites[i], b.out_sites[i]);
    out.out_sites.push_back(fresh);
  }
  out.chain = zip_chains(relabelled, b.chain);
  compress(out.chain, params);
  return out;
}

void compress(MatrixProductState& state, const TruncationParams& params) {
  compress(state.chain, params);
}

void compress(MatrixProductOperator& op, const TruncationParams& params) {
  compress(op.chain, params);
}

cplx trace(const MatrixProductState& state) {
  state.validate();
  return contract_with_weights(state, state.length(), {});
}

cplx expectation(const MatrixProductState& state, std::size_t site, const CMatrix& observable) {
  state.validate();
  if (site >= state.length())
    throw ParameterError("expectation: site " + std::to_string(site) + " out of range");
  // Tr(rho O) = sum_{a,b} rho(a,b) O(b,a)
  return contract_with_weights(state, site, observable.transpose());
}

BondStats bond_stats(const MatrixProductState& state) {
  BondStats s;
  const auto& bonds = state.chain.bonds;
  if (bonds.empty()) return s;
  std::size_t total = 0;
  s.max_dim = 0;
  for (const auto& b : bonds) {
    s.max_dim = std::max(s.max_dim, b.dim());
    total += b.dim();
  }
  s.mean_dim = static_cast<double>(total) / static_cast<double>(bonds.size());
  return s;
}

CVector to_dense(const MatrixProductState& state) {
  state.validate();
  return contract_all(state.chain).vector(state.sites);
}

CMatrix to_dense(const MatrixProductOperator& op) {
  op.validate();
  return contract_all(op.chain).matrix(op.out_sites, op.in_sites);
}

CMatrix density_matrix(const CVector& vec, std::size_t num_sites, std::size_t d) {
  std::size_t dim = 1;
  for (std::size_t i = 0; i < num_sites; ++i) dim *= d;
  if (static_cast<std::size_t>(vec.size()) != dim * dim)
    throw StructuralError("density_matrix: vector length mismatch");
  CMatrix rho(dim, dim);
  for (std::size_t p = 0; p < dim * dim; ++p) {
    std::size_t rest = p, row = 0, col = 0, scale = 1;
    for (std::size_t i = 0; i < num_sites; ++i) {
      const std::size_t pair = rest % (d * d);
      rest /= d * d;
      row += (pair / d) * scale;
      col += (pair % d) * scale;
      scale *= d;
    }
    rho(row, col) = vec(p);
  }
  return rho;
}

CVector vectorize_density(const CMatrix& rho, std::size_t num_sites, std::size_t d) {
  std::size_t dim = 1;
  for (std::size_t i = 0; i < num_sites; ++i) dim *= d;
  if (static_cast<std::size_t>(rho.rows()) != dim || static_cast<std::size_t>(rho.cols()) != dim)
    throw StructuralError("vectorize_density: matrix shape mismatch");
  CVector vec(dim * dim);
  for (std::size_t p = 0; p < dim * dim; ++p) {
    std::size_t rest = p, row = 0, col = 0, scale = 1;
    for (std::size_t i = 0; i < num_sites; ++i) {
      const std::size_t pair = rest % (d * d);
      rest /= d * d;
      row += (pair / d) * scale;
      col += (pair % d) * scale;
      scale *= d;
    }
    vec(p) = rho(row, col);
  }
  return vec;
}

namespace {

std::vector<std::size_t> random_bond_dims(std::size_t length, std::size_t site_dim,
                                          std::size_t bond_dim) {
  std::vector<std::size_t> dims(length > 0 ? length - 1 : 0);
  for (std::size_t i = 0; i + 1 < length; ++i) {
    // cap by the largest rank the cut can support
    std::size_t left = 1, right = 1;
    for (std::size_t k = 0; k <= i && left < bond_dim; ++k) left *= site_dim;
    for (std::size_t k = i + 1; k < length && right < bond_dim; ++k) right *= site_dim;
    dims[i] = std::min({bond_dim, left, right});
  }
  return dims;
}

Tensor random_tensor(std::vector<Index> idx, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Tensor t = Tensor::zeros(std::move(idx));
  for (auto& x : t.mutable_data()) x = cplx(g(rng), g(rng));
  return t;
}

}  // namespace

MatrixProductState random_mps(std::size_t length, std::size_t site_dim, std::size_t bond_dim,
                              std::mt19937_64& rng) {
  MatrixProductState mps;
  for (auto dim : random_bond_dims(length, site_dim, bond_dim))
    mps.chain.bonds.emplace_back(dim, IndexKind::SpatialBond, bond_tag(mps.chain.bonds.size()));
  for (std::size_t i = 0; i < length; ++i) {
    Index site(site_dim, IndexKind::Site, site_tag(i));
    std::vector<Index> idx;
    if (i > 0) idx.push_back(mps.chain.bonds[i - 1]);
    idx.push_back(site);
    if (i + 1 < length) idx.push_back(mps.chain.bonds[i]);
    mps.chain.tensors.push_back(random_tensor(idx, rng));
    mps.sites.push_back(site);
  }
  return mps;
}

MatrixProductOperator random_mpo(std::size_t length, std::size_t site_dim, std::size_t bond_dim,
                                 std::mt19937_64& rng) {
  MatrixProductOperator op;
  for (auto dim : random_bond_dims(length, site_dim * site_dim, bond_dim))
    op.chain.bonds.emplace_back(dim, IndexKind::SpatialBond, bond_tag(op.chain.bonds.size()));
  for (std::size_t i = 0; i < length; ++i) {
    Index in(site_dim, IndexKind::Site, site_tag(i));
    Index out(site_dim, IndexKind::Site, site_tag(i));
    std::vector<Index> idx;
    if (i > 0) idx.push_back(op.chain.bonds[i - 1]);
    idx.push_back(in);
    idx.push_back(out);
    if (i + 1 < length) idx.push_back(op.chain.bonds[i]);
    op.chain.tensors.push_back(random_tensor(idx, rng));
    op.in_sites.push_back(in);
    op.out_sites.push_back(out);
  }
  return op;
}

}  // namespace mstnpi
