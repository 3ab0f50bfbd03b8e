#include <doctest.h>

#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "sthjb/errors.hpp"
#include "sthjb/forms.hpp"
#include "sthjb/slab.hpp"
#include "sthjb/solver.hpp"
#include "support.hpp"

using namespace sthjb;
using testing::bubble;

namespace {

std::shared_ptr<const Mesh2D> uniform(int k) {
  return std::make_shared<const Mesh2D>(build_uniform_quad_mesh(k));
}

Eigen::VectorXd random_vector(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

double asymmetry(const SparseMatrix& m) {
  const Eigen::MatrixXd d(m);
  return (d - d.transpose()).cwiseAbs().maxCoeff() / std::max(1.0, d.cwiseAbs().maxCoeff());
}

struct Setup {
  explicit Setup(int k, int p, double lambda = 0.0, PenaltyParams params = {})
      : space(DGSpace::uniform(uniform(k), p)),
        penalties(build_penalty_table(space, params, lambda)),
        ops(assemble_spatial_operators(space, penalties, lambda)) {}

  DGSpace space;
  std::vector<FacePenalty> penalties;
  SpatialOperators ops;
};

}  // namespace

TEST_CASE("penalty table follows the face geometry") {
  const DGSpace space(std::make_shared<const Mesh2D>(build_graded_quad_mesh(3)),
                      std::vector<int>(52, 2));
  for (double lambda : {0.0, 3.0}) {
    const PenaltyParams params{1.7, 2.0};
    const std::vector<FacePenalty> t = build_penalty_table(space, params, lambda);
    REQUIRE(t.size() == space.mesh().faces().size());
    for (std::size_t i = 0; i < t.size(); ++i) {
      const PenaltyGeometry g = face_penalty_geometry(space.mesh(), space.mesh().faces()[i], space.degrees());
      const double p = g.p_tilde, h = g.h_tilde;
      CHECK(t[i].mu == doctest::Approx(2.0 * 1.7 * p * p / h).epsilon(1e-15));
      CHECK(t[i].eta ==
            doctest::Approx(2.0 * std::max(1.0, lambda) * 1.7 * std::pow(p, 6) / (h * h * h)).epsilon(1e-15));
    }
  }
  CHECK_THROWS_AS(build_penalty_table(space, {0.0, 1.0}, 0.0), ConfigError);
  CHECK_THROWS_AS(build_penalty_table(space, {1.0, 0.5}, 0.0), ConfigError);
}

TEST_CASE("single element: a_h and J_h of the constant") {
  const DGSpace space = DGSpace::uniform(std::make_shared<const Mesh2D>(std::vector<Cell>{{0.0, 0.0, 1.0, 1.0, 0}}), 2);
  const std::vector<FacePenalty> pen = build_penalty_table(space, {}, 0.0);
  Eigen::VectorXd one = Eigen::VectorXd::Zero(space.dim());
  one[0] = 1.0;
  const double ah = one.dot(assemble_a_h(space, pen, 0.0) * one);
  CHECK(ah == doctest::Approx(4.0 * 2.5 * 4.0 / std::sqrt(2.0)).epsilon(1e-12));
  const double jh = one.dot(assemble_J_h(space, pen, 0.0) * one);
  CHECK(jh == doctest::Approx(4.0 * 2.5 * 64.0 / std::pow(std::sqrt(2.0), 3)).epsilon(1e-12));
}

TEST_CASE("symmetry and positivity on k=2, p=3") {
  const Setup s(2, 3);
  CHECK(asymmetry(s.ops.a_h) <= 1e-12);
  CHECK(asymmetry(s.ops.b_star) <= 1e-12);
  CHECK(asymmetry(s.ops.jump) <= 1e-12);
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Eigen::VectorXd v = random_vector(s.space.dim(), rng);
    CHECK(v.dot(s.ops.a_h * v) > 0.0);
    CHECK(v.dot(s.ops.jump * v) >= 0.0);
  }
}

TEST_CASE("matrix forms agree with direct quadrature") {
  const double lambda = 0.5;
  const Setup s(1, 2, lambda);
  std::mt19937_64 rng(2);
  const SparseMatrix b0 = assemble_B_theta(s.space, s.penalties, lambda, 0.0);
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd v = random_vector(s.space.dim(), rng);
    auto field = [&](int k, Point x) { return s.space.eval(k, x, v); };
    double lap = 0.0;
    for (int k = 0; k < s.space.n_elements(); ++k) {
      const BasisTable t = tabulate_element(s.space, k, 6);
      for (int q = 0; q < t.n_points(); ++q) {
        const Jet j = s.space.eval(k, t.points[q], v);
        const double l = j.hxx + j.hyy - lambda * j.v;
        lap += t.weights[q] * l * l;
      }
    }
    const double jh = J_h_energy(s.space, s.penalties, field);
    CHECK(v.dot(b0 * v) == doctest::Approx(lap + jh).epsilon(1e-11));
    CHECK(v.dot(s.ops.a_h * v) == doctest::Approx(a_h_energy(s.space, s.penalties, lambda, field)).epsilon(1e-11));
    CHECK(v.dot(s.ops.jump * v) == doctest::Approx(jh).epsilon(1e-11));
  }
  CHECK_THROWS_AS(s.ops.b_theta(1.5), ArgumentError);
}

TEST_CASE("consistency with a smooth function vanishing on the boundary") {
  const Setup s(2, 3);
  const Eigen::VectorXd w = testing::project(s.space, bubble);
  const double jw = w.dot(s.ops.jump * w);
  const Eigen::VectorXd aw = w.cwiseAbs();
  CHECK(std::abs(jw) <= 1e-12 * aw.dot(SparseMatrix(s.ops.jump.cwiseAbs()) * aw));
  CHECK(testing::componentwise_ratio(SparseMatrix(s.ops.b_star - s.ops.lap), w) <= 1e-10);
  CHECK(testing::componentwise_ratio(s.ops.jump, w) <= 1e-10);
  CHECK(testing::componentwise_ratio(s.ops.flux, w) <= 1e-10);

  // a_h_load of the global function equals the matrix action on its coefficients
  const Eigen::VectorXd load = a_h_load(s.space, s.penalties, 0.0, [](Point x) {
    return Jet{bubble(x), (1 - 2 * x.x) * x.y * (1 - x.y), x.x * (1 - x.x) * (1 - 2 * x.y),
               -2 * x.y * (1 - x.y), (1 - 2 * x.x) * (1 - 2 * x.y), -2 * x.x * (1 - x.x)};
  });
  CHECK((load - s.ops.a_h * w).norm() <= 1e-12 * load.norm());
}

TEST_CASE("space-time forms") {
  const Setup s(1, 2);
  const HJBProblem problem = make_problem("heat-singleton");
  const TimePartition part = build_time_partition(PartitionKind::uniform, 3, 1.0, DegreeRule::constant, 2);
  const SpaceTimeForms forms(problem, s.space, s.ops, part);
  const int dim = s.space.dim();

  SUBCASE("time-constant tests switch the flux off") {
    SpaceTimeFunction v = forms.zero();
    std::mt19937_64 rng(4);
    for (auto& b : v.blocks) b.head(dim) = random_vector(dim, rng);
    CHECK(std::abs(forms.CF_h(forms.random(5), v)) <= 1e-13);
  }

  SUBCASE("expansion of C_h into symmetric and skew parts") {
    const double om = problem.omega;
    const SparseMatrix b1 = s.ops.b_theta(1.0);
    const SparseMatrix b1j = b1 + s.ops.jump;
    const int N = part.n_intervals();
    for (unsigned seed = 0; seed < 10; ++seed) {
      const SpaceTimeFunction u = forms.random(100 + seed), v = forms.random(200 + seed);
      double rhs = 0.5 * (om * om * forms.time_derivative_form(u, v) + forms.slab_mass_form(b1j, u, v)) +
                   0.5 * forms.volume_L_omega(u, v) + 0.5 * forms.CF_h(u, v) - 0.5 * forms.CF_h(v, u);
      for (int n = 1; n <= N; ++n) rhs += 0.5 * om * forms.jump(v, n).dot(s.ops.a_h * forms.average(u, n));
      for (int n = 0; n < N; ++n) rhs -= 0.5 * om * forms.average(v, n).dot(s.ops.a_h * forms.jump(u, n));
      for (int n = 1; n < N; ++n) rhs += 0.5 * om * forms.jump(v, n).dot(s.ops.a_h * forms.jump(u, n));
      const double lhs = forms.C_h(u, v);
      CHECK(std::abs(lhs - rhs) <= 1e-10 * (std::abs(lhs) + std::abs(forms.volume_L_omega(u, v))));
    }
  }

  SUBCASE("for a single identity control A_h is affine with linear part C_h") {
    for (unsigned seed = 0; seed < 5; ++seed) {
      const SpaceTimeFunction u = forms.random(300 + seed), v = forms.random(400 + seed);
      const double lhs = forms.A_h(u, v) - forms.A_h(forms.zero(), v);
      CHECK(lhs == doctest::Approx(forms.C_h(u, v)).epsilon(1e-10));
    }
  }
}

TEST_CASE("coercivity calibration") {
  const double eps = 1.25e-3;
  const double kappa = 0.5 * (1.0 + 1.0 / (1.0 - eps));
  const DGSpace space = DGSpace::uniform(uniform(1), 2);
  const CalibrationResult r = calibrate_penalty(space, 0.0, kappa, {});
  CHECK(r.c_s >= 2.5);
  CHECK(r.worst_margin >= 0.0);
  const SpatialOperators ops =
      assemble_spatial_operators(space, build_penalty_table(space, {r.c_s, 1.0}, 0.0), 0.0);
  CHECK(coercivity_margin(ops, kappa, 100, 21) >= 0.0);
  CHECK_THROWS_AS(calibrate_penalty(space, 0.0, 1.0, {}), ArgumentError);
}

TEST_CASE("slab system") {
  const auto mesh = uniform(1);
  const TimePartition part = build_time_partition(PartitionKind::uniform, 2, 1.0, DegreeRule::constant, 1);

  SUBCASE("zero data gives a zero right side") {
    HJBProblem heat = make_problem("exp2-heat");
    heat.initial = [](Point) { return Jet{}; };
    const Discretisation d(heat, DGSpace::uniform(mesh, 2));
    const SlabSystem sys = d.slab(part, 0);
    const Eigen::VectorXd rhs = sys.rhs_from_functional(a_h_load(d.space(), d.penalties(), 0.0, heat.initial));
    CHECK(rhs.norm() == 0.0);
    SparseMatrix m;
    Eigen::VectorXd load;
    sys.assemble(sys.policy_from_initial(heat.initial), m, load);
    CHECK(load.norm() == 0.0);
  }

  SUBCASE("assembly is deterministic") {
    const Discretisation d(make_problem("exp1-anisotropic-sup"), DGSpace::uniform(mesh, 2));
    const SlabSystem sys = d.slab(part, 1);
    std::mt19937_64 rng(3);
    const PolicyField policy = sys.policy(random_vector(sys.size(), rng));
    SparseMatrix m1, m2;
    Eigen::VectorXd g1, g2;
    sys.assemble(policy, m1, g1);
    sys.assemble(policy, m2, g2);
    std::ostringstream a, b;
    write_matrix_dump(a, m1);
    write_matrix_dump(b, m2);
    CHECK(a.str() == b.str());
    CHECK(g1 == g2);
  }

  SUBCASE("the manufactured polynomial solves the slab equations") {
    const Discretisation d(make_problem("heat-singleton"), DGSpace::uniform(mesh, 2));
    const Eigen::VectorXd B = testing::project(d.space(), bubble);
    const int dim = d.space().dim();
    const SlabSystem sys = d.slab(part, 1);
    const double t0 = part.t[1], tau = part.tau(1);
    Eigen::VectorXd U(2 * dim);
    U.head(dim) = (t0 + 0.5 * tau) * B;
    U.tail(dim) = 0.5 * tau * B;
    const Eigen::VectorXd rhs = sys.rhs_from_trace(t0 * B);
    SparseMatrix m;
    Eigen::VectorXd load;
    sys.assemble(sys.policy(U), m, load);
    const Eigen::VectorXd r = sys.residual(U, rhs);
    const double scale = rhs.norm() + load.norm() + (m.cwiseAbs() * U.cwiseAbs()).norm();
    CHECK(r.norm() <= 1e-10 * scale);
  }
}
