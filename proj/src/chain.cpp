#include "mstnpi/chain.hpp"

#include <string>

namespace mstnpi {

void TensorChain::validate() const {
  if (tensors.empty()) {
    if (!bonds.empty()) throw StructuralError("empty chain with bonds");
    return;
  }
  if (bonds.size() + 1 != tensors.size())
    throw StructuralError("chain needs exactly one bond between each pair of neighbours");
  for (std::size_t i = 0; i < bonds.size(); ++i) {
    if (!tensors[i].has(bonds[i]) || !tensors[i + 1].has(bonds[i]))
      throw StructuralError("chain bond " + std::to_string(i) + " not shared by its neighbours");
  }
}

namespace {

// Thin QR of t across (all but `bond` | bond): t = Q R.
std::pair<Tensor, Tensor> split_qr(const Tensor& t, const Index& bond, IndexKind kind) {
  std::vector<Index> rows;
  for (const auto& i : t.indices())
    if (i != bond) rows.push_back(i);
  const CMatrix m = t.matrix(rows, {bond});
  const auto k = std::min(m.rows(), m.cols());
  Eigen::HouseholderQR<CMatrix> qr(m);
  CMatrix q = qr.householderQ() * CMatrix::Identity(m.rows(), k);
  CMatrix r = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  Index fresh(static_cast<std::size_t>(k), kind, bond.tag());
  return {Tensor::from_matrix(q, rows, {fresh}), Tensor::from_matrix(r, {fresh}, {bond})};
}

}  // namespace

void compress(TensorChain& chain, const TruncationParams& params, IndexKind bond_kind) {
  chain.validate();
  const std::size_t n = chain.size();
  if (n < 2) return;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    auto [q, r] = split_qr(chain.tensors[i], chain.bonds[i], bond_kind);
    chain.tensors[i] = std::move(q);
    chain.tensors[i + 1] = contract(r, chain.tensors[i + 1]);
    chain.bonds[i] = chain.tensors[i].indices().back();
  }
  for (std::size_t i = n - 1; i >= 1; --i) {
    const Index left = chain.bonds[i - 1];
    auto res = svd_truncate(chain.tensors[i], {left}, params, Absorb::Left, bond_kind, left.tag());
    chain.tensors[i] = std::move(res.v);
    chain.tensors[i - 1] = contract(chain.tensors[i - 1], res.u);
    chain.bonds[i - 1] = res.bond;
  }
}

TensorChain zip_chains(const TensorChain& a, const TensorChain& b,
                       const std::vector<std::vector<Index>>& keep, IndexKind bond_kind) {
  if (a.size() != b.size()) throw StructuralError("zip_chains: chains of different length");
  TensorChain out;
  const std::size_t n = a.size();
  out.tensors.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (keep.empty())
      out.tensors.push_back(contract(a.tensors[i], b.tensors[i]));
    else
      out.tensors.push_back(contract(a.tensors[i], b.tensors[i], keep.at(i)));
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const Index& ba = a.bonds[i];
    const Index& bb = b.bonds[i];
    Index fused(ba.dim() * bb.dim(), bond_kind, ba.tag());
    out.tensors[i] = out.tensors[i].fused({ba, bb}, fused);
    out.tensors[i + 1] = out.tensors[i + 1].fused({ba, bb}, fused);
    out.bonds.push_back(fused);
  }
  return out;
}

Tensor contract_all(const TensorChain& chain) {
  if (chain.tensors.empty()) return Tensor::scalar(1.0);
  Tensor t = chain.tensors.front();
  for (std::size_t i = 1; i < chain.size(); ++i) t = contract(t, chain.tensors[i]);
  return t;
}

TensorChain with_fresh_bonds(const TensorChain& chain) {
  TensorChain out = chain;
  for (std::size_t i = 0; i < out.bonds.size(); ++i) {
    const Index f = out.bonds[i].fresh();
    out.tensors[i] = out.tensors[i].replaced(out.bonds[i], f);
    out.tensors[i + 1] = out.tensors[i + 1].replaced(out.bonds[i], f);
    out.bonds[i] = f;
  }
  return out;
}

}  // namespace mstnpi
