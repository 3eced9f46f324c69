#pragma once

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "mstnpi/bath.hpp"
#include "mstnpi/mp_algebra.hpp"

namespace mstnpi {

/// Where a time point sits on a path that ends at `final_point`: the first
/// point and the final point own half-width windows.
enum class WindowKind { Initial, Interior, Terminal };

WindowKind window_kind(std::size_t k, std::size_t final_point);
TimeWindow time_window(std::size_t k, std::size_t final_point, double dt);

/// Discretized bath-response coefficients eta(k, k') for k' <= k and
/// k - k' <= memory. Entries depend only on the window kinds of the two points
/// and their separation, so that is how they are stored.
class EtaTable {
 public:
  EtaTable() = default;
  EtaTable(double dt, std::size_t memory);

  double dt() const { return dt_; }
  std::size_t memory() const { return memory_; }
  // Coupling eigenvalues s(basis state) of the bath coupling operator.
  const std::vector<double>& coupling_values() const { return coupling_; }
  void set_coupling_values(std::vector<double> s) { coupling_ = std::move(s); }

  /// eta for the pair (k, k') on a path ending at final_point. Throws
  /// ParameterError for k' > k, k > final_point or k - k' > memory.
  cplx eta(std::size_t k, std::size_t kp, std::size_t final_point) const;

  cplx self(WindowKind kind) const { return self_[static_cast<int>(kind)]; }
  cplx& self(WindowKind kind) { return self_[static_cast<int>(kind)]; }
  // Cross entry for a later point of kind `later` and earlier point of kind
  // `earlier` (Interior|Terminal x Initial|Interior), separation 1..memory.
  cplx cross(WindowKind later, WindowKind earlier, std::size_t separation) const;
  cplx& cross(WindowKind later, WindowKind earlier, std::size_t separation);

  bool is_zero() const;

 private:
  std::size_t slot(WindowKind later, WindowKind earlier, std::size_t separation) const;

  double dt_ = 0.0;
  std::size_t memory_ = 0;
  std::vector<double> coupling_{1.0, -1.0};
  std::array<cplx, 3> self_{};
  std::vector<cplx> cross_;  // 4 blocks of (memory + 1)
};

EtaTable eta_coefficients(const BathModel& bath, double dt, std::size_t memory);

// Text cache: see README for the layout. The key line must match on load.
std::string eta_cache_key(const BathModel& bath, double dt, std::size_t memory);
void write_eta_table(std::ostream& os, const EtaTable& table, const std::string& key);
// Returns false when the stream holds a table for a different key.
bool read_eta_table(std::istream& is, const std::string& key, EtaTable& table);
/// eta_coefficients with an on-disk cache in `path` (created if missing).
EtaTable cached_eta_coefficients(const BathModel& bath, double dt, std::size_t memory,
                                 const std::string& path);

/// Multipliers I(p_k, p_k') = exp(-ds_k (Re eta ds_k' + 2i Im eta sbar_k')) over
/// forward-backward pair values p = s+ * d + s-.
struct InfluenceFactor {
  std::size_t k = 0;
  std::size_t kp = 0;
  CMatrix table;  // [p_k, p_k']; for k == k' only the diagonal is meaningful

  cplx operator()(std::size_t pk, std::size_t pkp) const {
    return table(static_cast<Eigen::Index>(pk), static_cast<Eigen::Index>(pkp));
  }
};

InfluenceFactor if_factor(const EtaTable& eta, std::size_t k, std::size_t kp, std::size_t final_point);

/// F_k in diagonal form along time points first..k: tensor j has one point leg
/// (shared with the row it multiplies) and bonds carrying p_k backwards.
struct DiagonalTimeChain {
  TensorChain chain;
  std::vector<Index> points;
  std::size_t first = 0;
};

DiagonalTimeChain if_factor_chain(const EtaTable& eta, std::size_t k, std::size_t first,
                                  std::size_t final_point);

/// F_k as an MPO along time points first..k (diagonal in every point index).
MatrixProductOperator build_if_mpo(const EtaTable& eta, std::size_t k, std::size_t first,
                                   std::size_t final_point);

/// The influence functional of one row as a chain over a window of time points.
/// It does not depend on the system, so one instance serves every site; the
/// engine relabels its legs per row. tensors[0] may carry an extra `edge` leg
/// linking it to already-retired time points.
class InfluenceRow {
 public:
  InfluenceRow() = default;

  std::size_t first() const { return first_; }
  std::size_t last() const { return first_ + chain_.size() - 1; }
  std::size_t size() const { return chain_.size(); }
  bool empty() const { return chain_.size() == 0; }
  const TensorChain& chain() const { return chain_; }
  const Index& point(std::size_t k) const { return points_.at(k - first_); }
  const std::optional<Index>& edge() const { return edge_; }
  const Tensor& tensor(std::size_t k) const { return chain_.tensors.at(k - first_); }
  // Bond to the right of time point k (absent for the last point).
  std::optional<Index> right_bond(std::size_t k) const;

  /// Appends time point last()+1 (or 0 if empty) with weight 1.
  void append_point();
  /// Multiplies by F_k (window of k taken on a path ending at final_point);
  /// F_k spans max(first, k - memory)..k. Compresses at `params` afterwards
  /// unless `params` is empty.
  void apply_factor(const EtaTable& eta, std::size_t k, std::size_t final_point,
                    const std::optional<TruncationParams>& params);
  /// Drops the first point from the window. Its tensor is returned; the bond
  /// to the new first point becomes the new edge.
  Tensor retire_first();

 private:
  std::size_t first_ = 0;
  TensorChain chain_;
  std::vector<Index> points_;
  std::optional<Index> edge_;
};

}  // namespace mstnpi
