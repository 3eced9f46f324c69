#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include "mstnpi/bath.hpp"
#include "mstnpi/influence.hpp"
#include "support.hpp"

using namespace mstnpi;

namespace {

BathModel ohmic(double xi = 0.25, double wc = 5.0, double beta = 1.0) {
  BathModel b;
  b.xi = xi;
  b.omega_c = wc;
  b.beta = beta;
  return b;
}

// Response function by GSL, one part at a time.
struct CorrParams {
  BathModel bath;
  double t;
  bool imag;
};

double corr_integrand(double w, void* v) {
  const auto* p = static_cast<CorrParams*>(v);
  const double j = p->bath.spectral_density(w) / M_PI;
  return p->imag ? -j * std::sin(w * p->t) : j / std::tanh(p->bath.beta * w / 2) * std::cos(w * p->t);
}

cplx corr_semi_infinite(const BathModel& b, double t) {
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(2000);
  double part[2], err;
  for (int k = 0; k < 2; ++k) {
    CorrParams p{b, t, k == 1};
    gsl_function f{corr_integrand, &p};
    gsl_integration_qagiu(&f, 0.0, 1e-14, 1e-11, 2000, ws, &part[k], &err);
  }
  gsl_integration_workspace_free(ws);
  return {part[0], part[1]};
}

cplx corr_fixed_panels(const BathModel& b, double t) {
  gsl_integration_glfixed_table* tab = gsl_integration_glfixed_table_alloc(400);
  double part[2] = {0, 0};
  for (int k = 0; k < 2; ++k) {
    CorrParams p{b, t, k == 1};
    gsl_function f{corr_integrand, &p};
    for (int panel = 0; panel < 80; ++panel)
      part[k] += gsl_integration_glfixed(&f, panel * b.omega_c, (panel + 1) * b.omega_c, tab);
  }
  gsl_integration_glfixed_table_free(tab);
  return {part[0], part[1]};
}

// Nested adaptive integral of C(t' - t'') over t' in [a1, b1], t'' in [a2, b2]
// (or t'' in [a2, t'] when `ordered`).
struct Window2d {
  BathModel bath;
  double a1, b1, a2, b2;
  bool ordered, imag;
  double outer_t;
};

double inner_fn(double tpp, void* v) {
  const auto* w = static_cast<Window2d*>(v);
  const cplx c = corr_semi_infinite(w->bath, w->outer_t - tpp);
  return w->imag ? c.imag() : c.real();
}

double outer_fn(double tp, void* v) {
  Window2d w = *static_cast<Window2d*>(v);
  w.outer_t = tp;
  gsl_integration_workspace* ws = gsl_integration_workspace_alloc(200);
  gsl_function f{inner_fn, &w};
  double r, e;
  gsl_integration_qag(&f, w.a2, w.ordered ? tp : w.b2, 1e-13, 1e-11, 200, GSL_INTEG_GAUSS21, ws, &r, &e);
  gsl_integration_workspace_free(ws);
  return r;
}

cplx window_quadrature(const BathModel& b, double a1, double b1, double a2, double b2, bool ordered) {
  double part[2];
  for (int k = 0; k < 2; ++k) {
    Window2d w{b, a1, b1, a2, b2, ordered, k == 1, 0.0};
    gsl_integration_workspace* ws = gsl_integration_workspace_alloc(200);
    gsl_function f{outer_fn, &w};
    double e;
    gsl_integration_qag(&f, a1, b1, 1e-13, 1e-11, 200, GSL_INTEG_GAUSS21, ws, &part[k], &e);
    gsl_integration_workspace_free(ws);
  }
  return {part[0], part[1]};
}

struct GslQuiet {
  GslQuiet() { previous = gsl_set_error_handler_off(); }
  ~GslQuiet() { gsl_set_error_handler(previous); }
  gsl_error_handler_t* previous;
};

// Influence weight of one path of pair values (p = s+ * 2 + s-) by direct summation.
cplx path_weight(const EtaTable& eta, const std::vector<std::size_t>& path, std::size_t memory) {
  const double s[2] = {1.0, -1.0};
  const std::size_t final_point = path.size() - 1;
  cplx exponent = 0.0;
  for (std::size_t k = 0; k < path.size(); ++k)
    for (std::size_t kp = (k > memory ? k - memory : 0); kp <= k; ++kp) {
      const double dk = s[path[k] / 2] - s[path[k] % 2];
      const double dkp = s[path[kp] / 2] - s[path[kp] % 2];
      const double mkp = (s[path[kp] / 2] + s[path[kp] % 2]) / 2;
      const cplx e = eta.eta(k, kp, final_point);
      exponent -= dk * (e.real() * dkp + cplx(0, 2) * e.imag() * mkp);
    }
  return std::exp(exponent);
}

std::vector<std::vector<std::size_t>> all_paths(std::size_t points) {
  std::vector<std::vector<std::size_t>> out;
  std::size_t total = 1;
  for (std::size_t i = 0; i < points; ++i) total *= 4;
  for (std::size_t code = 0; code < total; ++code) {
    std::vector<std::size_t> path(points);
    std::size_t rest = code;
    for (std::size_t i = points; i-- > 0;) {
      path[i] = rest % 4;
      rest /= 4;
    }
    out.push_back(path);
  }
  return out;
}

// Weight of a path under a chain whose open legs are `points` (first slowest).
cplx chain_weight(const Tensor& full, const std::vector<Index>& points, const std::vector<std::size_t>& path) {
  return full.permuted(points).at(path);
}

}  // namespace

TEST_CASE("response function limits") {
  CHECK(bath_correlation(ohmic(0.0), 0.7) == cplx(0.0));
  CHECK(bath_correlation(ohmic(), 0.0).imag() == 0.0);
  CHECK_THROWS_AS(bath_correlation(ohmic(), -0.1), ParameterError);
}

TEST_CASE("response function against two independent quadratures") {
  GslQuiet quiet;
  const BathModel b = ohmic();
  const cplx a = corr_semi_infinite(b, 0.25), c = corr_fixed_panels(b, 0.25);
  CHECK(std::abs(a - c) <= 1e-8);
  // frozen from the GSL semi-infinite quadrature
  const cplx frozen(0.025384221787110695, -1.1897679952409281);
  CHECK(std::abs(a - frozen) <= 1e-10);
  const cplx lib = bath_correlation(b, 0.25);
  CHECK(std::abs(lib - frozen) <= 1e-8 * std::abs(frozen));
  for (double t : {0.0, 0.1, 0.6, 1.5, 4.0})
    CHECK(std::abs(bath_correlation(b, t) - corr_semi_infinite(b, t)) <= 1e-8 * std::max(1.0, std::abs(a)));
}

TEST_CASE("response function of discrete modes is a finite sum") {
  BathModel b;
  b.spectral = SpectralKind::Discrete;
  b.beta = 0.7;
  b.modes = {{0.5, 0.3}, {1.7, 0.9}, {3.0, 0.2}};
  for (double t : {0.0, 0.4, 2.2}) {
    cplx want = 0.0;
    for (const auto& m : b.modes)
      want += m.coupling * m.coupling / (2 * m.frequency) *
              cplx(std::cos(m.frequency * t) / std::tanh(b.beta * m.frequency / 2), -std::sin(m.frequency * t));
    CHECK(std::abs(bath_correlation(b, t) - want) <= 1e-14);
  }
}

TEST_CASE("time windows") {
  const double dt = 0.2;
  CHECK(window_kind(0, 4) == WindowKind::Initial);
  CHECK(window_kind(2, 4) == WindowKind::Interior);
  CHECK(window_kind(4, 4) == WindowKind::Terminal);
  TimeWindow w = time_window(0, 4, dt);
  CHECK(w.center == doctest::Approx(dt / 4));
  CHECK(w.width == doctest::Approx(dt / 2));
  w = time_window(3, 4, dt);
  CHECK(w.center == doctest::Approx(3 * dt));
  CHECK(w.width == doctest::Approx(dt));
  w = time_window(4, 4, dt);
  CHECK(w.center == doctest::Approx(4 * dt - dt / 4));
  CHECK(w.width == doctest::Approx(dt / 2));
}

TEST_CASE("eta vanishes without coupling") {
  const EtaTable t = eta_coefficients(ohmic(0.0), 0.25, 4);
  CHECK(t.is_zero());
  for (std::size_t k = 0; k <= 6; ++k)
    for (std::size_t kp = (k > 4 ? k - 4 : 0); kp <= k; ++kp) CHECK(t.eta(k, kp, 6) == cplx(0.0));
}

TEST_CASE("interior eta depends only on the separation") {
  const EtaTable t = eta_coefficients(ohmic(), 0.25, 5);
  const std::size_t final_point = 20;
  for (std::size_t j = 0; j <= 5; ++j) {
    const cplx ref = t.eta(1 + j, 1, final_point);
    for (std::size_t k = 2; k + j < final_point; ++k) CHECK(std::abs(t.eta(k + j, k, final_point) - ref) <= 1e-10);
  }
}

TEST_CASE("eta against a nested 2D quadrature") {
  GslQuiet quiet;
  const BathModel b = ohmic();
  const double dt = 0.25;
  const EtaTable t = eta_coefficients(b, dt, 5);
  const cplx e00 = window_quadrature(b, 0, dt / 2, 0, dt / 2, true);
  const cplx e10 = window_quadrature(b, dt / 2, 1.5 * dt, 0, dt / 2, false);
  const cplx e11 = window_quadrature(b, dt / 2, 1.5 * dt, dt / 2, 1.5 * dt, true);
  // frozen from the same nested quadrature
  const cplx f00(0.023076728443496244, -0.0083000855820546948);
  const cplx f10(0.024207514478410547, -0.046726962421717248);
  const cplx f11(0.068584204823743194, -0.044243076928582002);
  CHECK(std::abs(e00 - f00) <= 1e-10);
  CHECK(std::abs(e10 - f10) <= 1e-10);
  CHECK(std::abs(e11 - f11) <= 1e-10);
  CHECK(std::abs(t.eta(0, 0, 5) - f00) <= 1e-8);
  CHECK(std::abs(t.eta(1, 0, 5) - f10) <= 1e-8);
  CHECK(std::abs(t.eta(1, 1, 5) - f11) <= 1e-8);

  const cplx tail = window_quadrature(b, 5 * dt - dt / 2, 5 * dt, 2.5 * dt, 3.5 * dt, false);
  CHECK(std::abs(t.eta(5, 3, 5) - tail) <= 1e-8);
  const cplx last = window_quadrature(b, 5 * dt - dt / 2, 5 * dt, 5 * dt - dt / 2, 5 * dt, true);
  CHECK(std::abs(t.eta(5, 5, 5) - last) <= 1e-8);
}

TEST_CASE("eta table errors") {
  const EtaTable t = eta_coefficients(ohmic(), 0.25, 2);
  CHECK_THROWS_AS(t.eta(4, 1, 5), ParameterError);
  CHECK_THROWS_AS(t.eta(1, 2, 5), ParameterError);
  CHECK_THROWS_AS(t.eta(6, 5, 5), ParameterError);
  CHECK_THROWS_AS(eta_coefficients(ohmic(), -0.1, 2), ParameterError);
}

TEST_CASE("self terms damp") {
  for (const BathModel& b : {ohmic(), ohmic(1.2, 0.5, 0.1), ohmic(0.05, 10.0, 20.0)}) {
    const EtaTable t = eta_coefficients(b, 0.3, 3);
    for (WindowKind k : {WindowKind::Initial, WindowKind::Interior, WindowKind::Terminal})
      CHECK(t.self(k).real() >= 0.0);
    const InfluenceFactor f = if_factor(t, 2, 2, 4);
    for (Eigen::Index p = 0; p < 4; ++p) CHECK(std::abs(f.table(p, p)) <= 1.0 + 1e-15);
  }
}

TEST_CASE("influence multipliers") {
  const EtaTable t = eta_coefficients(ohmic(), 0.25, 3);
  for (std::size_t k = 0; k <= 4; ++k)
    for (std::size_t kp = (k > 3 ? k - 3 : 0); kp <= k; ++kp) {
      const InfluenceFactor f = if_factor(t, k, kp, 4);
      for (std::size_t q = 0; q < 4; ++q) {
        CHECK(f(0, q) == cplx(1.0));
        CHECK(f(3, q) == cplx(1.0));
      }
    }
  const InfluenceFactor none = if_factor(eta_coefficients(ohmic(0.0), 0.25, 3), 2, 1, 4);
  CHECK((none.table.array() == cplx(1.0)).all());

  const cplx f00(0.023076728443496244, -0.0083000855820546948);
  const InfluenceFactor diag = if_factor(t, 0, 0, 4);
  CHECK(std::abs(diag(1, 1) - std::exp(-2.0 * 2.0 * f00.real())) <= 1e-9);
  CHECK_THROWS_AS(if_factor(t, 4, 0, 4), ParameterError);
}

TEST_CASE("total influence weight never exceeds one") {
  const EtaTable t = eta_coefficients(ohmic(0.6, 3.0, 0.5), 0.3, 4);
  for (std::size_t points = 1; points <= 5; ++points)
    for (const auto& path : all_paths(points)) {
      const cplx w = path_weight(t, path, 4);
      CHECK(std::abs(w) <= 1.0 + 1e-12);
      bool diagonal = true;
      for (std::size_t p : path) diagonal = diagonal && (p == 0 || p == 3);
      if (diagonal) CHECK(w == cplx(1.0));
    }
}

TEST_CASE("influence operator without coupling is the identity") {
  const MatrixProductOperator f = build_if_mpo(eta_coefficients(ohmic(0.0), 0.25, 3), 3, 0, 3);
  CHECK(f.length() == 4);
  CHECK(testing::max_abs(to_dense(f) - CMatrix::Identity(256, 256)) == 0.0);
}

TEST_CASE("single-point influence operator") {
  const EtaTable t = eta_coefficients(ohmic(), 0.25, 3);
  const MatrixProductOperator f = build_if_mpo(t, 0, 0, 3);
  REQUIRE(f.length() == 1);
  CHECK(f.chain.bonds.empty());
  const CMatrix dense = to_dense(f);
  const InfluenceFactor i00 = if_factor(t, 0, 0, 3);
  CHECK(testing::max_abs(dense - CMatrix(i00.table.diagonal().asDiagonal())) <= 1e-15);
  for (const auto& b : build_if_mpo(t, 3, 0, 3).chain.bonds) CHECK(b.dim() <= 4);
}

TEST_CASE("influence operators reproduce the path weights") {
  const EtaTable t = eta_coefficients(ohmic(), 0.25, 2);
  const std::size_t final_point = 2;
  CMatrix product = CMatrix::Identity(64, 64);
  for (std::size_t k = 0; k <= final_point; ++k) {
    const MatrixProductOperator f = build_if_mpo(t, k, 0, final_point);
    CMatrix dense = to_dense(f);
    // pad to the three-point space: F_k acts on points 0..k
    const auto pad = static_cast<Eigen::Index>(std::size_t{1} << (2 * (final_point - k)));
    product = testing::kron(dense, CMatrix::Identity(pad, pad)) * product;
  }
  CHECK(testing::max_abs(product - CMatrix(product.diagonal().asDiagonal())) == 0.0);
  for (const auto& path : all_paths(3)) {
    const auto at = static_cast<Eigen::Index>(path[0] * 16 + path[1] * 4 + path[2]);
    CHECK(std::abs(product(at, at) - path_weight(t, path, 2)) <= 1e-12);
  }
}

TEST_CASE("influence row accumulates the full functional") {
  const EtaTable t = eta_coefficients(ohmic(), 0.25, 4);
  const std::size_t final_point = 3;
  InfluenceRow row;
  for (std::size_t k = 0; k <= final_point; ++k) {
    row.append_point();
    row.apply_factor(t, k, final_point, std::nullopt);
  }
  CHECK(row.first() == 0);
  CHECK(row.last() == final_point);
  CHECK_FALSE(row.edge());
  std::vector<Index> points;
  for (std::size_t k = 0; k <= final_point; ++k) points.push_back(row.point(k));
  const Tensor full = contract_all(row.chain());
  for (const auto& path : all_paths(4))
    CHECK(std::abs(chain_weight(full, points, path) - path_weight(t, path, 4)) <= 1e-12);
}

TEST_CASE("influence row with a short memory and retired points") {
  const std::size_t memory = 2, final_point = 4;
  const EtaTable t = eta_coefficients(ohmic(), 0.25, memory);
  InfluenceRow row;
  std::vector<Tensor> retired;
  std::vector<Index> points;
  for (std::size_t k = 0; k <= final_point; ++k) {
    row.append_point();
    points.push_back(row.point(k));
    CHECK_THROWS(row.apply_factor(t, k + 1, final_point, std::nullopt));
    row.apply_factor(t, k, final_point, TruncationParams{0.0, {}});
    if (row.size() > memory + 1) retired.push_back(row.retire_first());
  }
  CHECK(row.first() == final_point - memory);
  REQUIRE(row.edge());
  Tensor full = contract_all(row.chain());
  for (const auto& r : retired) full = contract(r, full);
  for (const auto& path : all_paths(5))
    CHECK(std::abs(chain_weight(full, points, path) - path_weight(t, path, memory)) <= 1e-12);
}

TEST_CASE("eta cache round trip") {
  const BathModel b = ohmic();
  const EtaTable t = eta_coefficients(b, 0.25, 3);
  const std::string key = eta_cache_key(b, 0.25, 3);
  CHECK(key != eta_cache_key(b, 0.25, 4));
  CHECK(key != eta_cache_key(ohmic(0.3), 0.25, 3));
  std::stringstream ss;
  write_eta_table(ss, t, key);
  EtaTable back;
  REQUIRE(read_eta_table(ss, key, back));
  CHECK(back.dt() == t.dt());
  CHECK(back.memory() == 3);
  for (std::size_t k = 0; k <= 5; ++k)
    for (std::size_t kp = (k > 3 ? k - 3 : 0); kp <= k; ++kp) CHECK(back.eta(k, kp, 5) == t.eta(k, kp, 5));
  std::stringstream other(ss.str());
  EtaTable ignored;
  CHECK_FALSE(read_eta_table(other, eta_cache_key(b, 0.5, 3), ignored));

  const auto dir = std::filesystem::temp_directory_path() / "mstnpi_eta_cache_test";
  std::filesystem::remove_all(dir);
  const std::string path = (dir / "eta.txt").string();
  const EtaTable first = cached_eta_coefficients(b, 0.25, 3, path);
  CHECK(std::filesystem::exists(path));
  const EtaTable second = cached_eta_coefficients(b, 0.25, 3, path);
  CHECK(second.eta(3, 1, 5) == first.eta(3, 1, 5));
  const EtaTable changed = cached_eta_coefficients(b, 0.2, 3, path);
  CHECK(changed.dt() == 0.2);
  std::filesystem::remove_all(dir);
}
