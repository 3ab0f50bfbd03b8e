#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>

#include "sthjb/errors.hpp"
#include "sthjb/quadrature.hpp"
#include "sthjb/space.hpp"
#include "support.hpp"

using namespace sthjb;

namespace {

std::shared_ptr<const Mesh2D> uniform(int k) {
  return std::make_shared<const Mesh2D>(build_uniform_quad_mesh(k));
}

}  // namespace

TEST_CASE("Gauss-Legendre rules integrate monomials to their exactness degree") {
  std::mt19937 rng(3);
  for (int n = 1; n <= 12; ++n) {
    const QuadratureRule& r = gauss_legendre(n);
    CHECK(r.exactness == 2 * n - 1);
    for (double w : r.weights) CHECK(w > 0.0);
    for (int trial = 0; trial < 5; ++trial) {
      const int a = std::uniform_int_distribution<int>(0, r.exactness)(rng);
      const int b = std::uniform_int_distribution<int>(0, r.exactness)(rng);
      double sum = 0.0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          sum += r.weights[i] * r.weights[j] * std::pow(r.points[i], a) * std::pow(r.points[j], b);
      auto exact1 = [](int e) { return e % 2 ? 0.0 : 2.0 / (e + 1); };
      const double exact = exact1(a) * exact1(b);
      CHECK(std::abs(sum - exact) <= 1e-13 * std::max(1.0, std::abs(exact)));
    }
  }
  CHECK_THROWS(gauss_legendre(0));
}

TEST_CASE("basis is orthonormal and the constant mode has no gradient") {
  const DGSpace space = DGSpace::uniform(uniform(1), 3);
  CHECK(space.dim() == 4 * 16);
  for (int k = 0; k < space.n_elements(); ++k) {
    const BasisTable t = tabulate_element(space, k, space.degree(k) + 3);
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(t.n_basis(), t.n_basis());
    for (int q = 0; q < t.n_points(); ++q) gram += t.weights[q] * t.v.col(q) * t.v.col(q).transpose();
    CHECK((gram - Eigen::MatrixXd::Identity(t.n_basis(), t.n_basis())).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(t.gx.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.gy.row(0).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t.v(0, 0) == doctest::Approx(1.0 / std::sqrt(space.mesh().area(k))));
  }
}

TEST_CASE("affine chain rule on a square of width 0.5") {
  const DGSpace space = DGSpace::uniform(uniform(1), 2);
  const Cell& c = space.mesh().cell(0);
  const Point x{c.x0 + 0.4, c.y0 + 0.1};
  std::vector<Jet> jets(space.n_basis(0));
  space.eval_basis(0, x, jets);
  // index 1 is the x-degree 1 mode: value A s with s the reference coordinate
  const double s = 2.0 * (x.x - c.x0) / 0.5 - 1.0;
  CHECK(jets[1].gx == doctest::Approx(4.0 * jets[1].v / s));
  CHECK(jets[1].gy == doctest::Approx(0.0));
}

TEST_CASE("tabulated Hessian of a quadratic is its constant Hessian") {
  const Mesh2D graded = build_graded_quad_mesh(3);
  const DGSpace space = DGSpace::uniform(std::make_shared<const Mesh2D>(graded), 2);
  auto g = [](Point x) { return 3.0 * x.x * x.x - 2.0 * x.x * x.y + 0.5 * x.y * x.y + x.x - 1.0; };
  const Eigen::VectorXd u = testing::project(space, g);
  for (int k = 0; k < space.n_elements(); ++k) {
    const Point c = space.mesh().centroid(k);
    const Jet j = space.eval(k, c, u);
    CHECK(j.v == doctest::Approx(g(c)).epsilon(1e-12));
    CHECK(std::abs(j.hxx - 6.0) < 1e-9);
    CHECK(std::abs(j.hxy + 2.0) < 1e-9);
    CHECK(std::abs(j.hyy - 1.0) < 1e-9);
  }
}

TEST_CASE("face traces") {
  const DGSpace space = DGSpace::uniform(std::make_shared<const Mesh2D>(build_graded_quad_mesh(3)), 3);
  const Eigen::VectorXd lin = testing::project(space, [](Point x) { return 2.0 * x.x - 3.0 * x.y + 1.0; });
  const Eigen::VectorXd sq = testing::project(space, [](Point x) { return x.x * x.x; });

  for (const Face& f : space.mesh().faces()) {
    const FaceTable t = tabulate_face(space, f, face_rule_size(space, f));
    Eigen::VectorXd local_lin(t.n_local()), local_sq(t.n_local());
    const int ne = space.n_basis(f.k_ext);
    local_lin.head(ne) = lin.segment(space.offset(f.k_ext), ne);
    local_sq.head(ne) = sq.segment(space.offset(f.k_ext), ne);
    if (f.interior()) {
      const int ni = space.n_basis(f.k_int);
      local_lin.tail(ni) = lin.segment(space.offset(f.k_int), ni);
      local_sq.tail(ni) = sq.segment(space.offset(f.k_int), ni);
      CHECK((t.jump(&FaceSide::v).transpose() * local_lin).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((t.jump(&FaceSide::dn).transpose() * local_lin).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((t.jump(&FaceSide::dt).transpose() * local_lin).cwiseAbs().maxCoeff() < 1e-12);
    } else {
      CHECK((t.jump(&FaceSide::v) - t.avg(&FaceSide::v)).cwiseAbs().maxCoeff() == 0.0);
    }
    // trace equals direct evaluation
    for (int q = 0; q < t.n_points(); ++q) {
      const Jet j = space.eval(f.k_ext, t.points[q], lin);
      CHECK(std::abs(t.ext.v.col(q).dot(local_lin.head(ne)) - j.v) < 1e-13);
    }
    // x^2 on a vertical face: no tangential variation
    if (f.normal.y == 0.0) {
      CHECK((t.ext.dt.transpose() * local_sq.head(ne)).cwiseAbs().maxCoeff() < 1e-11);
      CHECK((t.ext.dtt.transpose() * local_sq.head(ne)).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("time partitions") {
  const TimePartition g = build_time_partition(PartitionKind::geometric, 3, 0.05, DegreeRule::constant, 1, 0.2);
  REQUIRE(g.t.size() == 4);
  CHECK(g.t[0] == 0.0);
  CHECK(g.t[1] == doctest::Approx(0.002).epsilon(1e-14));
  CHECK(g.t[2] == doctest::Approx(0.01).epsilon(1e-14));
  CHECK(g.t[3] == 0.05);

  const TimePartition u = build_time_partition(PartitionKind::uniform, 4, 1.0, DegreeRule::constant, 2);
  for (int n = 0; n < 4; ++n) {
    CHECK(u.tau(n) == doctest::Approx(0.25));
    CHECK(u.q[n] == 2);
  }
  CHECK(u.temporal_dofs() == 12);

  const TimePartition lin = build_time_partition(PartitionKind::geometric, 3, 1.0, DegreeRule::linear);
  CHECK(lin.q == std::vector<int>{2, 3, 4});

  CHECK_THROWS_AS(build_time_partition(PartitionKind::geometric, 3, 1.0, DegreeRule::linear, 1, 1.0),
                  ConfigError);
  CHECK_THROWS_AS(build_time_partition(PartitionKind::geometric, 3, 1.0, DegreeRule::linear, 1, 0.0),
                  ConfigError);
  CHECK_THROWS_AS(build_time_partition(PartitionKind::uniform, 0, 1.0, DegreeRule::constant), ConfigError);
}

TEST_CASE("temporal basis") {
  const double tau = 0.3;
  const TemporalBasis b = temporal_basis(1, tau, 3);
  CHECK(b.right[0] == 1.0);
  CHECK(b.right[1] == 1.0);
  CHECK(b.left[1] == -1.0);
  for (int j = 0; j < 3; ++j) CHECK(b.dpsi(0, j) == 0.0);
  double stiff = 0.0;
  for (int j = 0; j < 3; ++j) stiff += b.weights[j] * b.dpsi(1, j) * b.dpsi(1, j);
  CHECK(stiff == doctest::Approx(4.0 / tau));

  const TemporalBasis b4 = temporal_basis(4, 1.0, 6);
  for (int k = 0; k <= 4; ++k) CHECK(b4.left[k] == (k % 2 ? -1.0 : 1.0));
}

TEST_CASE("temporal jumps and averages") {
  using V = Eigen::VectorXd;
  auto one = [](double x) { return V::Constant(1, x); };
  const TemporalJump mid = temporal_jump_avg(one(2.0), one(0.5), 1, 3);
  CHECK(mid.jump[0] == 1.5);
  CHECK(mid.avg[0] == 1.25);
  const TemporalJump first = temporal_jump_avg(V(), one(3.0), 0, 3);
  CHECK(first.jump[0] == -3.0);
  CHECK(first.avg[0] == 3.0);
  const TemporalJump last = temporal_jump_avg(one(7.0), V(), 3, 3);
  CHECK(last.jump[0] == 7.0);
  CHECK(last.avg[0] == 7.0);
  const V same = V::LinSpaced(5, -1.0, 2.0);
  CHECK(temporal_jump_avg(same, same, 2, 3).jump.norm() == 0.0);
  CHECK_THROWS_AS(temporal_jump_avg(same, same, 4, 3), ArgumentError);
}

TEST_CASE("degree checks") {
  auto mesh = uniform(1);
  CHECK_THROWS_AS(DGSpace::uniform(mesh, 1), ConfigError);
  CHECK_THROWS_AS(DGSpace(mesh, {2, 2}), ConfigError);
  const DGSpace mixed(mesh, {2, 3, 4, 2});
  CHECK(mixed.dim() == 9 + 16 + 25 + 9);
  CHECK(mixed.degree_ratio() == doctest::Approx(2.0));
}
