#include "mstnpi/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include <Eigen/Sparse>
#include <unsupported/Eigen/KroneckerProduct>

namespace mstnpi {

namespace {

CMatrix expm_hermitian(const CMatrix& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMatrix> eig(h);
  CVector ph = (eig.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
  return eig.eigenvectors() * ph.asDiagonal() * eig.eigenvectors().adjoint();
}

CMatrix kron(const CMatrix& a, const CMatrix& b) { return Eigen::kroneckerProduct(a, b).eval(); }

CMatrix ident(std::size_t n) { return CMatrix::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)); }

}  // namespace

CMatrix dense_initial_state(const std::string& name, std::size_t num_sites) {
  CMatrix rho = CMatrix::Ones(1, 1);
  for (std::size_t i = 0; i < num_sites; ++i) {
    bool up;
    if (name == "all_up") up = true;
    else if (name == "all_down") up = false;
    else if (name == "neel") up = i % 2 == 0;
    else throw ParameterError("initial_state: unknown product state '" + name + "'");
    CMatrix s = CMatrix::Zero(2, 2);
    s(up ? 0 : 1, up ? 0 : 1) = 1.0;
    rho = kron(rho, s);
  }
  return rho;
}

std::vector<CMatrix> dense_unitary_propagate(const CMatrix& step_unitary, const CMatrix& rho0, std::size_t steps) {
  std::vector<CMatrix> out{rho0};
  for (std::size_t n = 0; n < steps; ++n) out.push_back(step_unitary * out.back() * step_unitary.adjoint());
  return out;
}

std::vector<CMatrix> dense_liouville_propagate(const SpinChainModel& model, const CMatrix& rho0, double dt,
                                               std::size_t steps) {
  if (model.num_sites > 7) throw ParameterError("dense oracle: P > 7 is too large for dense propagation");
  const CMatrix h = dense_hamiltonian(model);
  if (rho0.rows() != h.rows() || rho0.cols() != h.cols())
    throw ParameterError("dense oracle: initial state has the wrong dimension");
  return dense_unitary_propagate(expm_hermitian(h, dt), rho0, steps);
}

CMatrix dense_trotter_unitary(const SpinChainModel& model, double dt) {
  model.validate();
  const std::size_t p = model.num_sites;
  if (p > 7) throw ParameterError("dense oracle: P > 7 is too large for dense propagation");
  if (p == 1) return expm_hermitian(one_body_term(model, 0), dt);
  auto layer = [&](std::size_t parity, double tau) {
    CMatrix u = ident(std::size_t{1} << p);
    for (std::size_t b = parity; b + 1 < p; b += 2) {
      const double wl = b == 0 ? 1.0 : 0.5;
      const double wr = b + 2 == p ? 1.0 : 0.5;
      const CMatrix h = two_body_term(model, b) + wl * kron(one_body_term(model, b), ident(2)) +
                        wr * kron(ident(2), one_body_term(model, b + 1));
      const CMatrix g = kron(kron(ident(std::size_t{1} << b), expm_hermitian(h, tau)), ident(std::size_t{1} << (p - b - 2)));
      u = g * u;
    }
    return u;
  };
  const CMatrix half = layer(0, dt / 2.0);
  return half * layer(1, dt) * half;
}

std::vector<CMatrix> brute_force_path_sum(const CMatrix& step_unitary, std::size_t num_sites, const EtaTable& eta,
                                          const CMatrix& rho0, std::size_t steps) {
  if (num_sites > 2) throw ParameterError("path-sum oracle: P must be <= 2");
  if (steps > 6) throw ParameterError("path-sum oracle: at most 6 steps");
  const std::size_t dim = std::size_t{1} << num_sites;
  if (static_cast<std::size_t>(step_unitary.rows()) != dim || static_cast<std::size_t>(rho0.rows()) != dim)
    throw ParameterError("path-sum oracle: dimension mismatch");
  const auto& sv = eta.coupling_values();
  // spin value of site i in multi-index a (site 0 slowest)
  auto spin = [&](std::size_t a, std::size_t i) { return sv[(a >> (num_sites - 1 - i)) & 1u]; };
  const std::size_t memory = eta.memory();

  std::vector<CMatrix> out{rho0};
  for (std::size_t n = 1; n <= steps; ++n) {
    CMatrix rho = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
    std::vector<std::size_t> fwd(n + 1), bwd(n + 1);
    // exponent contributed by point k given the path up to k
    auto increment = [&](std::size_t k) {
      cplx e = 0.0;
      const std::size_t lo = k > memory ? k - memory : 0;
      for (std::size_t i = 0; i < num_sites; ++i) {
        const double dk = spin(fwd[k], i) - spin(bwd[k], i);
        if (dk == 0.0) continue;
        for (std::size_t kp = lo; kp <= k; ++kp) {
          const cplx et = eta.eta(k, kp, n);
          const double dkp = spin(fwd[kp], i) - spin(bwd[kp], i);
          const double mean = (spin(fwd[kp], i) + spin(bwd[kp], i)) / 2.0;
          e += dk * (et.real() * dkp + cplx(0.0, 2.0 * et.imag() * mean));
        }
      }
      return e;
    };
    std::function<void(std::size_t, cplx, cplx)> walk = [&](std::size_t k, cplx amp, cplx expo) {
      const cplx total = expo + increment(k);
      if (k == n) {
        rho(static_cast<Eigen::Index>(fwd[n]), static_cast<Eigen::Index>(bwd[n])) += amp * std::exp(-total);
        return;
      }
      for (std::size_t a = 0; a < dim; ++a)
        for (std::size_t b = 0; b < dim; ++b) {
          const cplx step_amp = step_unitary(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(fwd[k])) *
                                std::conj(step_unitary(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(bwd[k])));
          if (step_amp == cplx(0.0)) continue;
          fwd[k + 1] = a;
          bwd[k + 1] = b;
          walk(k + 1, amp * step_amp, total);
        }
    };
    for (std::size_t a = 0; a < dim; ++a)
      for (std::size_t b = 0; b < dim; ++b) {
        const cplx r = rho0(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
        if (r == cplx(0.0)) continue;
        fwd[0] = a;
        bwd[0] = b;
        walk(0, r, 0.0);
      }
    out.push_back(rho);
  }
  return out;
}

namespace {

using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

// exp(-i H tau) applied to the columns of v by Chebyshev expansion.
void chebyshev_step(const SparseC& h, double e_min, double e_max, double tau, CMatrix& v) {
  const double centre = (e_max + e_min) / 2.0;
  const double radius = std::max((e_max - e_min) / 2.0 * 1.01, 1e-12);
  const double x = radius * tau;
  auto apply_scaled = [&](const CMatrix& w) -> CMatrix { return (h * w - centre * w) / radius; };
  CMatrix t_prev = v;
  CMatrix t_cur = apply_scaled(v);
  CMatrix acc = std::cyl_bessel_j(0.0, x) * t_prev + 2.0 * cplx(0.0, -1.0) * std::cyl_bessel_j(1.0, x) * t_cur;
  cplx phase(0.0, -1.0);
  for (int k = 2;; ++k) {
    CMatrix t_next = 2.0 * apply_scaled(t_cur) - t_prev;
    phase *= cplx(0.0, -1.0);
    const double jk = std::cyl_bessel_j(static_cast<double>(k), x);
    acc += 2.0 * phase * jk * t_next;
    t_prev = std::move(t_cur);
    t_cur = std::move(t_next);
    if (k > x && std::abs(jk) < 1e-17) break;
    if (k > 10000) throw ParameterError("exact-diag oracle: Chebyshev expansion did not converge");
  }
  v = std::exp(cplx(0.0, -centre * tau)) * acc;
}

}  // namespace

std::vector<CMatrix> exact_diag_system_bath(const SpinChainModel& model, const std::vector<BathMode>& modes,
                                            const std::vector<std::size_t>& levels, double beta,
                                            const CMatrix& rho0, double dt, std::size_t steps,
                                            const CMatrix& coupling_operator) {
  model.validate();
  if (levels.size() != modes.size()) throw ParameterError("exact-diag oracle: one level count per mode");
  for (auto l : levels)
    if (l < 1) throw ParameterError("exact-diag oracle: level counts must be >= 1");
  for (const auto& m : modes)
    if (!(m.frequency > 0.0)) throw ParameterError("exact-diag oracle: mode frequencies must be positive");
  if (!(beta > 0.0)) throw ParameterError("exact-diag oracle: beta must be positive");
  if (coupling_operator.rows() != 2 || !coupling_operator.isDiagonal())
    throw ParameterError("exact-diag oracle: coupling operator must be diagonal 2x2");
  const std::size_t p = model.num_sites;
  const std::size_t dsys = std::size_t{1} << p;
  std::size_t dbath_site = 1;
  for (auto l : levels) dbath_site *= l;
  std::size_t dbath = 1;
  for (std::size_t i = 0; i < p; ++i) dbath *= dbath_site;
  const std::size_t dim = dsys * dbath;
  if (dbath_site > (std::size_t{1} << 14) || dim > (std::size_t{1} << 14))
    throw ParameterError("exact-diag oracle: Hilbert dimension exceeds 2^14; reduce modes or levels");
  if (static_cast<std::size_t>(rho0.rows()) != dsys) throw ParameterError("exact-diag oracle: rho0 dimension");

  const std::size_t nm = modes.size();
  const CMatrix hs = dense_hamiltonian(model);
  auto s_val = [&](std::size_t sigma, std::size_t i) {
    return coupling_operator((sigma >> (p - 1 - i)) & 1u, (sigma >> (p - 1 - i)) & 1u).real();
  };
  // occupation of mode l on site i in bath index m (site 0 slowest, mode 0 slowest)
  std::vector<std::size_t> stride(p * nm);
  {
    std::size_t s = 1;
    for (std::size_t q = p * nm; q-- > 0;) {
      stride[q] = s;
      s *= levels[q % nm];
    }
  }
  auto occ = [&](std::size_t m, std::size_t q) { return (m / stride[q]) % levels[q % nm]; };

  std::vector<Eigen::Triplet<cplx>> trip;
  std::vector<double> centre(dim, 0.0), radius(dim, 0.0);
  for (std::size_t sigma = 0; sigma < dsys; ++sigma)
    for (std::size_t m = 0; m < dbath; ++m) {
      const std::size_t row = sigma * dbath + m;
      double diag = hs(static_cast<Eigen::Index>(sigma), static_cast<Eigen::Index>(sigma)).real();
      for (std::size_t sp = 0; sp < dsys; ++sp) {
        if (sp == sigma) continue;
        const cplx v = hs(static_cast<Eigen::Index>(sp), static_cast<Eigen::Index>(sigma));
        if (v == cplx(0.0)) continue;
        trip.emplace_back(static_cast<int>(sp * dbath + m), static_cast<int>(row), v);
        radius[sp * dbath + m] += std::abs(v);
      }
      for (std::size_t i = 0; i < p; ++i) {
        const double s = s_val(sigma, i);
        for (std::size_t l = 0; l < nm; ++l) {
          const std::size_t q = i * nm + l;
          const double w = modes[l].frequency, c = modes[l].coupling;
          const std::size_t n = occ(m, q);
          diag += w * static_cast<double>(n) + c * c / (2.0 * w * w) * s * s;
          const double g = -c * s / std::sqrt(2.0 * w);
          if (n + 1 < levels[l]) {
            const double v = g * std::sqrt(static_cast<double>(n + 1));
            const std::size_t other = sigma * dbath + m + stride[q];
            trip.emplace_back(static_cast<int>(other), static_cast<int>(row), v);
            trip.emplace_back(static_cast<int>(row), static_cast<int>(other), v);
            radius[row] += std::abs(v);
            radius[other] += std::abs(v);
          }
        }
      }
      trip.emplace_back(static_cast<int>(row), static_cast<int>(row), diag);
      centre[row] = diag;
    }
  SparseC h(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
  h.setFromTriplets(trip.begin(), trip.end());
  double e_min = centre[0] - radius[0], e_max = centre[0] + radius[0];
  for (std::size_t r = 0; r < dim; ++r) {
    e_min = std::min(e_min, centre[r] - radius[r]);
    e_max = std::max(e_max, centre[r] + radius[r]);
  }

  // truncated thermal weights of the bath product states, smallest pruned
  std::vector<double> w(dbath, 1.0);
  for (std::size_t m = 0; m < dbath; ++m)
    for (std::size_t q = 0; q < p * nm; ++q)
      w[m] *= std::exp(-beta * modes[q % nm].frequency * static_cast<double>(occ(m, q)));
  const double z = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<std::size_t> order(dbath);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return w[a] > w[b]; });
  std::vector<std::size_t> kept;
  double acc = 0.0;
  for (std::size_t m : order) {
    if (acc / z > 1.0 - 1e-10) break;
    kept.push_back(m);
    acc += w[m];
  }

  Eigen::SelfAdjointEigenSolver<CMatrix> sys(rho0);
  std::vector<std::pair<double, CVector>> components;
  for (Eigen::Index j = 0; j < sys.eigenvalues().size(); ++j)
    if (sys.eigenvalues()(j) > 1e-14) components.emplace_back(sys.eigenvalues()(j), sys.eigenvectors().col(j));

  const std::size_t ncols = kept.size() * components.size();
  CMatrix v = CMatrix::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(ncols));
  std::vector<double> weight(ncols);
  for (std::size_t c = 0; c < components.size(); ++c)
    for (std::size_t k = 0; k < kept.size(); ++k) {
      const std::size_t col = c * kept.size() + k;
      weight[col] = components[c].first * w[kept[k]] / acc;
      for (std::size_t sigma = 0; sigma < dsys; ++sigma)
        v(static_cast<Eigen::Index>(sigma * dbath + kept[k]), static_cast<Eigen::Index>(col)) =
            components[c].second(static_cast<Eigen::Index>(sigma));
    }

  auto marginal = [&]() {
    CMatrix rho = CMatrix::Zero(static_cast<Eigen::Index>(dsys), static_cast<Eigen::Index>(dsys));
    for (std::size_t col = 0; col < ncols; ++col) {
      Eigen::Map<const CMatrix> x(v.col(static_cast<Eigen::Index>(col)).data(), static_cast<Eigen::Index>(dbath),
                                  static_cast<Eigen::Index>(dsys));
      rho += weight[col] * (x.transpose() * x.conjugate());
    }
    return rho;
  };
  std::vector<CMatrix> out{marginal()};
  for (std::size_t n = 0; n < steps; ++n) {
    chebyshev_step(h, e_min, e_max, dt, v);
    out.push_back(marginal());
  }
  return out;
}

}  // namespace mstnpi
