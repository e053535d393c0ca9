#include <Eigen/Dense>
#include <cmath>

#include "doctest.h"
#include "pluriflow/hermitian/hermitian_geometry.hpp"
#include "test_support.hpp"

using namespace pluriflow;
using namespace testsupport;

namespace {

/// n = 1 conformal factor g = e^phi with closed-form d_1 phi and d_1 d_1bar phi.
struct Conformal {
  TensorField g, d1phi, ddbarphi;
};

Conformal conformal(const ChartGrid& grid, double a, double b) {
  Conformal c{TensorField(grid, metric_signature()), TensorField(grid, {}), TensorField(grid, {})};
  const double w = 2.0 * kPi;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const double x = grid.coordinate(p, 0), y = grid.coordinate(p, 1);
    const double phi = a * std::cos(w * x) + b * std::sin(w * y);
    const double px = -a * w * std::sin(w * x), py = b * w * std::cos(w * y);
    const double pxx = -a * w * w * std::cos(w * x), pyy = -b * w * w * std::sin(w * y);
    c.g(p, 0) = std::exp(phi);
    c.d1phi(p, 0) = 0.5 * cplx(px, -py);
    c.ddbarphi(p, 0) = 0.25 * (pxx + pyy);
  }
  return c;
}

/// First component of an n = 1 field as a scalar field.
TensorField scalar_view(const TensorField& f) {
  TensorField t(f.grid(), {});
  for (std::size_t p = 0; p < f.num_points(); ++p) t(p, 0) = f(p, 0);
  return t;
}

double hermitian_defect_4(const TensorField& om) {
  const int n = om.grid().n();
  double r = 0.0;
  for (std::size_t p = 0; p < om.num_points(); ++p)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int a = 0; a < n; ++a)
          for (int b = 0; b < n; ++b) {
            const cplx x = om(p, ((i * n + j) * n + a) * n + b);
            const cplx y = om(p, ((j * n + i) * n + b) * n + a);
            r = std::max(r, std::abs(x - std::conj(y)));
          }
  return r;
}

double hermitian_defect_2(const TensorField& s) {
  const int n = s.grid().n();
  double r = 0.0;
  for (std::size_t p = 0; p < s.num_points(); ++p)
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b) r = std::max(r, std::abs(s(p, a * n + b) - std::conj(s(p, b * n + a))));
  return r;
}

}  // namespace

TEST_CASE("inverse metric") {
  ChartGrid grid(2, 8);
  const TensorField id = identity_metric(grid);
  TensorField want(grid, inverse_metric_signature());
  for (std::size_t p = 0; p < grid.num_points(); ++p) want(p, 0) = want(p, 3) = 1.0;
  CHECK(sup_diff(inverse_metric(id), want) == 0.0);
  const TensorField two = cplx(2.0) * id;
  const TensorField inv2 = inverse_metric(two);
  CHECK(std::abs(inv2(7, 0) - 0.5) < 1e-15);
  CHECK(std::abs(inv2(7, 1)) < 1e-15);

  const TensorField g = random_metric(grid, 42, 0.45, 2);
  const TensorField gi = inverse_metric(g);
  double r = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        cplx acc = 0.0;
        for (int i = 0; i < 2; ++i) acc += gi(p, j * 2 + i) * g(p, i * 2 + k);
        r = std::max(r, std::abs(acc - (j == k ? 1.0 : 0.0)));
      }
  CHECK(r < 1e-13);
}

TEST_CASE("degenerate and malformed metrics are rejected") {
  ChartGrid grid(2, 8);
  TensorField g = identity_metric(grid);
  g(3, 3) = 1e-10;
  CHECK_THROWS_AS(inverse_metric(g), DegenerateMetricError);
  TensorField h = identity_metric(grid);
  h(0, 1) = cplx(0.1, 0.0);
  CHECK_THROWS_AS(validate_metric(h), InvalidArgumentError);
  TensorField beta = zero_form(grid);
  beta(0, 1) = 1.0;
  CHECK_THROWS_AS(validate_torsion_potential(beta), InvalidArgumentError);
}

TEST_CASE("classical chern connection") {
  ChartGrid grid(2, 8);
  CHECK(chern_connection_classical(identity_metric(grid)).sup_norm() == 0.0);

  ChartGrid g1(1, 32);
  const Conformal c = conformal(g1, 0.3, 0.2);
  const TensorField gam = chern_connection_classical(c.g);
  CHECK(sup_diff(scalar_view(gam), c.d1phi) < 1e-10);

  ChartGrid g2(2, 16);
  const TensorField g = random_metric(g2, 7, 0.4);
  const MetricJet jet = metric_jet(g);
  const TensorField G = chern_connection_classical(jet);
  ConnectionSet conn{&G, nullptr};
  CHECK(covariant_derivative(g, Dir::Holo, conn).sup_norm() < 1e-10);
  CHECK(covariant_derivative(g, Dir::Antiholo, conn).sup_norm() < 1e-10);
  // g^{-1} is not bandlimited; keep the amplitude small so aliasing stays below tolerance
  const MetricJet small = metric_jet(random_metric(g2, 7, 0.05));
  const TensorField Gs = chern_connection_classical(small);
  CHECK(covariant_derivative(small.ginv, Dir::Holo, ConnectionSet{&Gs, nullptr}).sup_norm() < 1e-10);
}

TEST_CASE("classical chern curvature") {
  ChartGrid grid(2, 8);
  CHECK(chern_curvature_classical(identity_metric(grid)).sup_norm() == 0.0);

  ChartGrid g1(1, 32);
  const Conformal c = conformal(g1, 0.3, 0.2);
  const TensorField om = chern_curvature_classical(c.g);
  TensorField want(g1, {});
  for (std::size_t p = 0; p < g1.num_points(); ++p) want(p, 0) = -c.g(p, 0) * c.ddbarphi(p, 0);
  CHECK(sup_diff(scalar_view(om), want) < 1e-9);

  CHECK(sup_diff(scalar_view(s_classical(c.g)), cplx(-1.0) * c.ddbarphi) < 1e-9);

  ChartGrid g2(2, 16);
  const TensorField g = random_metric(g2, 9, 0.4);
  CHECK(hermitian_defect_4(chern_curvature_classical(g)) < 1e-10);
  CHECK(hermitian_defect_2(s_classical(g)) < 1e-10);
  CHECK(s_classical(identity_metric(g2)).sup_norm() == 0.0);
}

TEST_CASE("torsion and its square") {
  ChartGrid grid(2, 16);
  CHECK(chern_torsion(identity_metric(grid)).sup_norm() == 0.0);

  const KahlerData k = kahler_metric(grid, 3, 0.1);
  const TensorField Tk = chern_torsion(k.g);
  CHECK(Tk.sup_norm() < 1e-10);
  CHECK(torsion_square(Tk, k.g).sup_norm() < 1e-12);
  CHECK(pluriclosed_residual(k.g) < 1e-10);
  CHECK(compatibility_residual(k.g, zero_form(grid)) < 1e-10);

  const TensorField g = random_metric(grid, 5, 0.4);
  const TensorField T = chern_torsion(g);
  double asym = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p)
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        for (int l = 0; l < 2; ++l)
          asym = std::max(asym, std::abs(T(p, (i * 2 + j) * 2 + l) + T(p, (j * 2 + i) * 2 + l)));
  CHECK(asym == 0.0);
  CHECK(T.sup_norm() > 1e-2);

  const TensorField T2 = torsion_square(T, g);
  CHECK(hermitian_defect_2(T2) < 1e-14);
  double min_eig = 1.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    Eigen::Matrix2cd m;
    m << T2(p, 0), T2(p, 1), T2(p, 2), T2(p, 3);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2cd> es(m);
    min_eig = std::min(min_eig, es.eigenvalues()(0));
  }
  CHECK(min_eig >= -1e-12);

  ChartGrid g1(1, 16);
  const TensorField r1 = random_metric(g1, 2, 0.4);
  CHECK(torsion_square(chern_torsion(r1), r1).sup_norm() == 0.0);

  // generic metrics are neither pluriclosed nor compatible with beta = 0
  CHECK(pluriclosed_residual(g) > 1e-2);
  CHECK(compatibility_residual(g, zero_form(grid)) > 1e-2);
}

TEST_CASE("compatible pair residuals and negative control") {
  ChartGrid grid(2, 16);
  auto [g, beta] = compatible_pair(grid, 21, 0.05);
  CHECK(compatibility_residual(g, beta) < 1e-12);
  CHECK(pluriclosed_residual(g) < 1e-12);
  CHECK(chern_torsion(g).sup_norm() > 1e-3);

  // add a non-holomorphic piece to beta
  TensorField bump = beta;
  for (std::size_t p = 0; p < grid.num_points(); ++p) {
    const cplx v = 0.01 * std::cos(2 * kPi * grid.coordinate(p, 1));
    bump(p, 1) += v;
    bump(p, 2) -= v;
  }
  CHECK(compatibility_residual(g, bump) > 1e-3);
}

TEST_CASE("torsion fault injection is scoped") {
  ChartGrid grid(2, 16);
  auto [g, beta] = compatible_pair(grid, 4, 0.05);
  {
    ScopedTorsionFault fault(TorsionFault::SecondTermSign);
    CHECK(active_torsion_fault() == TorsionFault::SecondTermSign);
    CHECK(compatibility_residual(g, beta) > 1e-3);
  }
  CHECK(active_torsion_fault() == TorsionFault::None);
  CHECK(compatibility_residual(g, beta) < 1e-12);
}

TEST_CASE("form hessian and laplacian in the flat case reduce to partials") {
  ChartGrid grid(2, 16);
  auto [g, beta] = compatible_pair(grid, 8, 0.05);
  const TensorField id = identity_metric(grid);
  const ClassicalGeometry flat = classical_geometry(id, beta);
  const TensorField ddb = Differentiator(beta, {}).mixed_hessian();
  CHECK(sup_diff(flat.beta_hessian, ddb) < 1e-13);
  const ClassicalGeometry geo = classical_geometry(g, beta);
  // beta_laplacian is antisymmetric
  double asym = 0.0;
  for (std::size_t p = 0; p < grid.num_points(); ++p)
    asym = std::max(asym, std::abs(geo.beta_laplacian(p, 1) + geo.beta_laplacian(p, 2)));
  CHECK(asym < 1e-15);
}
