#pragma once

#include <complex>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace mstnpi {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

// Bad numerical or configuration parameter.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Inconsistent tensor wiring (index mismatch, wrong chain length, ...).
class StructuralError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class IndexKind { Site, SpatialBond, TemporalBond, Aux };

const char* to_string(IndexKind kind);

/// A tensor leg. Identity is the opaque id: two legs contract iff their ids
/// match, so wiring a network amounts to handing the same Index to both ends.
class Index {
 public:
  Index() = default;
  Index(std::size_t dim, IndexKind kind, std::string tag = {});

  std::uint64_t id() const { return id_; }
  std::size_t dim() const { return dim_; }
  IndexKind kind() const { return kind_; }
  const std::string& tag() const { return tag_; }

  // Same dim/kind/tag, fresh id.
  Index fresh() const { return Index(dim_, kind_, tag_); }

  friend bool operator==(const Index& a, const Index& b) { return a.id_ == b.id_; }
  friend bool operator!=(const Index& a, const Index& b) { return a.id_ != b.id_; }

 private:
  std::uint64_t id_ = 0;
  std::size_t dim_ = 0;
  IndexKind kind_ = IndexKind::Aux;
  std::string tag_;
};

/// Dense complex tensor, row-major over its ordered index list (last index
/// fastest).
class Tensor {
 public:
  Tensor();  // rank-0 tensor holding 0
  Tensor(std::vector<Index> indices, std::vector<cplx> data);

  static Tensor zeros(std::vector<Index> indices);
  static Tensor scalar(cplx value);
  // delta(a, b) for two legs of equal dimension
  static Tensor identity(const Index& a, const Index& b);
  static Tensor from_matrix(const CMatrix& m, const std::vector<Index>& rows,
                            const std::vector<Index>& cols);
  static Tensor from_vector(const CVector& v, const Index& idx);

  std::size_t rank() const { return indices_.size(); }
  std::size_t size() const { return data_.size(); }
  const std::vector<Index>& indices() const { return indices_; }
  const std::vector<cplx>& data() const { return data_; }
  std::vector<cplx>& mutable_data() { return data_; }

  bool has(const Index& idx) const;
  std::size_t position(const Index& idx) const;  // throws if absent
  const Index& index(std::size_t pos) const { return indices_.at(pos); }
  // First index carrying the given tag, if any.
  std::optional<Index> find_tag(const std::string& tag) const;

  cplx operator()(std::initializer_list<std::size_t> pos) const;
  cplx& operator()(std::initializer_list<std::size_t> pos);
  cplx at(std::span<const std::size_t> pos) const;
  cplx& at(std::span<const std::size_t> pos);
  cplx scalar_value() const;

  // Reorders the data so that indices() == order.
  Tensor permuted(const std::vector<Index>& order) const;
  // Swaps the identity of one leg; dims must match.
  Tensor replaced(const Index& old_idx, const Index& new_idx) const;
  // Moves `legs` to the back (in that order) and merges them into `into`.
  Tensor fused(const std::vector<Index>& legs, const Index& into) const;
  // Splits leg `from` into `parts` (row-major), placed where `from` was.
  Tensor split(const Index& from, const std::vector<Index>& parts) const;
  // Appends a dimension-1 leg.
  Tensor with_unit_index(const Index& unit) const;
  // Removes a dimension-1 leg.
  Tensor without_unit_index(const Index& unit) const;

  Tensor conj() const;
  Tensor scaled(cplx factor) const;
  double norm() const;

  // Matricization. Row/col index sets must partition indices().
  CMatrix matrix(const std::vector<Index>& rows, const std::vector<Index>& cols) const;
  // Convenience for a rank-1 tensor (or any tensor flattened in `order`).
  CVector vector(const std::vector<Index>& order) const;

  friend Tensor operator+(const Tensor& a, const Tensor& b);
  friend Tensor operator-(const Tensor& a, const Tensor& b);

 private:
  std::size_t offset(std::span<const std::size_t> pos) const;

  std::vector<Index> indices_;
  std::vector<cplx> data_;
};

std::size_t product_of_dims(const std::vector<Index>& indices);

/// Sums over all indices the two tensors share. The result carries a's
/// remaining indices (in a's order) followed by b's remaining indices.
Tensor contract(const Tensor& a, const Tensor& b);

/// As contract, but indices listed in `keep` are shared and NOT summed:
/// they act as batch (hyperedge) legs and appear once in the result, at their
/// position in a.
Tensor contract(const Tensor& a, const Tensor& b, const std::vector<Index>& keep);

// Maximum element-wise |a - b| after aligning b's index order to a's.
double max_abs_diff(const Tensor& a, const Tensor& b);

enum class Absorb { None, Left, Right, Sqrt };

struct TruncationParams {
  double cutoff = 0.0;                   // relative discarded weight (squared)
  std::optional<std::size_t> max_dim;    // hard cap applied after the cutoff
};

struct SvdResult {
  Tensor u;                      // row indices + bond
  std::vector<double> singular;  // kept values, descending
  Tensor v;                      // bond + column indices
  Index bond;                    // shared by u and v
  double discarded_weight = 0;   // sum of discarded squared values
  double total_weight = 0;       // sum of all squared values
};

/// Truncated SVD t = U S V across the (row_indices | rest) partition.
///
/// The retained rank r is the smallest with
///   sum_{n>r} s_n^2 / sum_n s_n^2 < cutoff,
/// after which values tied with s_r (within 1e-12 relative) are kept as well,
/// and finally r is capped at max_dim. A tail whose relative weight is below
/// 1e-28 counts as exactly zero, so cutoff = 0 drops only numerical noise.
/// An all-zero tensor gives rank 1 with zero weight.
SvdResult svd_truncate(const Tensor& t, const std::vector<Index>& row_indices,
                       const TruncationParams& params, Absorb absorb = Absorb::None,
                       IndexKind bond_kind = IndexKind::Aux, const std::string& bond_tag = {});

/// Same split and rank rule as svd_truncate with Absorb::Right, for matrices
/// with many more rows than columns: the kept column space comes from the
/// eigenvectors of the (cols x cols) Gram matrix and the row factor is
/// re-orthonormalized, so the full row-side factor is never formed. Squared
/// weights below about cols * 1e-16 of the total are not resolved; use it
/// only with cutoffs well above that. Falls back to svd_truncate when the
/// matrix is not tall.
SvdResult gram_truncate(const Tensor& t, const std::vector<Index>& row_indices, const TruncationParams& params,
                        IndexKind bond_kind = IndexKind::Aux, const std::string& bond_tag = {});

// Rank selection used by svd_truncate, exposed for tests.
std::size_t truncation_rank(std::span<const double> singular_desc, double cutoff);

struct TruncationEvent {
  std::size_t full_rank;
  std::size_t kept_rank;
  double discarded_weight;
  double total_weight;
};

/// Collects every truncation made by svd_truncate on the current thread while
/// alive. Nesting is allowed; the innermost recorder receives the events.
class TruncationRecorder {
 public:
  TruncationRecorder();
  ~TruncationRecorder();
  TruncationRecorder(const TruncationRecorder&) = delete;
  TruncationRecorder& operator=(const TruncationRecorder&) = delete;

  const std::vector<TruncationEvent>& events() const { return events_; }
  void record(const TruncationEvent& e) { events_.push_back(e); }

 private:
  std::vector<TruncationEvent> events_;
  TruncationRecorder* previous_;
};

}  // namespace mstnpi
