#pragma once

#include <vector>

#include "mstnpi/tensor.hpp"

namespace mstnpi {

/// Open-boundary chain of tensors. bonds[i] is the one Index shared by
/// tensors[i] and tensors[i+1]; every other leg is treated as physical.
struct TensorChain {
  std::vector<Tensor> tensors;
  std::vector<Index> bonds;

  std::size_t size() const { return tensors.size(); }
  void validate() const;
};

/// Two-sweep compression: left-to-right QR orthogonalization followed by
/// right-to-left truncated SVDs at the given cutoff. New bonds get `bond_kind`.
/// After the call the chain is right-canonical except for tensors[0], which
/// carries the norm.
void compress(TensorChain& chain, const TruncationParams& params,
              IndexKind bond_kind = IndexKind::SpatialBond);

/// Multiplies two aligned chains site by site (tensors[i] = contract(a[i], b[i])
/// with an optional per-site `keep` list) and fuses the pair of bonds between
/// each neighbour into one. a's and b's bonds must be distinct indices.
TensorChain zip_chains(const TensorChain& a, const TensorChain& b,
                       const std::vector<std::vector<Index>>& keep = {},
                       IndexKind bond_kind = IndexKind::SpatialBond);

// Contracts the whole chain into one tensor.
Tensor contract_all(const TensorChain& chain);

// Gives every bond a fresh identity (useful before zipping a chain with itself).
TensorChain with_fresh_bonds(const TensorChain& chain);

}  // namespace mstnpi
