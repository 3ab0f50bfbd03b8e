#include <doctest.h>

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <sstream>

#include "sthjb/analysis.hpp"
#include "sthjb/errors.hpp"
#include "sthjb/experiments.hpp"

using namespace sthjb;

namespace {

std::shared_ptr<const Mesh2D> uniform(int k) {
  return std::make_shared<const Mesh2D>(build_uniform_quad_mesh(k));
}

const std::shared_ptr<const Mesh2D> unit_square =
    std::make_shared<const Mesh2D>(std::vector<Cell>{{0.0, 0.0, 1.0, 1.0, 0}});

}  // namespace

TEST_CASE("X norm") {
  const DGSpace space = DGSpace::uniform(unit_square, 2);
  const TimePartition part = build_time_partition(PartitionKind::uniform, 1, 1.0, DegreeRule::constant, 1);
  const ExactFn zero = [](Point, double) { return PointState{}; };
  CHECK(norm_X(space, part, 1.0, nullptr, &zero) == 0.0);
  const ExactFn t = [](Point, double s) {
    PointState p;
    p.v = s;
    p.vt = 1.0;
    return p;
  };
  CHECK(norm_X(space, part, 1.0, nullptr, &t) == doctest::Approx(std::sqrt(4.0 / 3.0)).epsilon(1e-13));
}

TEST_CASE("energy norm") {
  const HJBProblem p = make_problem("heat-singleton");
  const Discretisation d(p, DGSpace::uniform(uniform(1), 2));
  const TimePartition part = build_time_partition(PartitionKind::uniform, 2, 1.0, DegreeRule::constant, 1);
  const ExactFn zero = [](Point, double) { return PointState{}; };
  CHECK(norm_E(d, part, nullptr, &zero) == 0.0);

  // a smooth reference alone has no jump contributions
  const ExactFn ex = p.exact;
  const VolumeIntegrals v = volume_integrals(d.space(), part, 0.0, nullptr, &ex);
  CHECK(norm_E(d, part, nullptr, &ex) == doctest::Approx(std::sqrt(v.vt + v.h2_lambda)).epsilon(1e-14));

  const SolutionHistory h = march(d, part);
  CHECK(norm_E(d, part, &h.u, nullptr) == doctest::Approx(norm_E(d, part, nullptr, &ex)).epsilon(1e-8));
}

TEST_CASE("norms are homogeneous and satisfy the triangle inequality") {
  const HJBProblem p = make_problem("heat-singleton");
  const Discretisation d(p, DGSpace::uniform(uniform(1), 2));
  const TimePartition part = build_time_partition(PartitionKind::uniform, 2, 1.0, DegreeRule::constant, 2);
  const SpaceTimeForms forms(p, d.space(), d.ops(), part);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  auto scaled = [](SpaceTimeFunction f, double c) {
    for (auto& b : f.blocks) b *= c;
    return f;
  };
  auto sum = [](SpaceTimeFunction a, const SpaceTimeFunction& b) {
    for (std::size_t n = 0; n < a.blocks.size(); ++n) a.blocks[n] += b.blocks[n];
    return a;
  };
  for (unsigned s = 0; s < 10; ++s) {
    const SpaceTimeFunction u = forms.random(s), v = forms.random(50 + s);
    const double c = coef(rng);
    const auto nX = [&](const SpaceTimeFunction& f) { return norm_X(d.space(), part, 1.0, &f, nullptr); };
    const auto nE = [&](const SpaceTimeFunction& f) { return norm_E_discrete(forms, f); };
    const auto n1 = [&](const SpaceTimeFunction& f) { return norm_h1(forms, f); };
    for (auto norm : {std::function<double(const SpaceTimeFunction&)>(nX), std::function<double(const SpaceTimeFunction&)>(nE),
                      std::function<double(const SpaceTimeFunction&)>(n1)}) {
      CHECK(norm(scaled(u, c)) == doctest::Approx(std::abs(c) * norm(u)).epsilon(1e-12));
      CHECK(norm(sum(u, v)) <= norm(u) + norm(v) + 1e-12);
    }
  }
}

TEST_CASE("h1 norm identity") {
  const HJBProblem p = make_problem("heat-singleton");
  const Discretisation d(p, DGSpace::uniform(uniform(1), 2));
  const TimePartition part = build_time_partition(PartitionKind::uniform, 3, 1.0, DegreeRule::constant, 1);
  const SpaceTimeForms forms(p, d.space(), d.ops(), part);
  for (unsigned s = 0; s < 20; ++s) {
    const SpaceTimeFunction v = forms.random(s);
    const Eigen::VectorXd jN = forms.jump(v, part.n_intervals());
    const double e = norm_E_discrete(forms, v);
    CHECK(norm_h1(forms, v) * norm_h1(forms, v) ==
          doctest::Approx(e * e + p.omega * jN.dot(d.ops().a_h * jN)).epsilon(1e-10));
  }
}

TEST_CASE("end-time H1 error") {
  const HJBProblem p = make_problem("exp1-anisotropic-sup");
  const DGSpace space = DGSpace::uniform(uniform(2), 2);
  const ExactFn ex = p.exact;
  CHECK(broken_h1(space, nullptr, &ex, 1.0) > 0.0);
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(space.dim());
  CHECK(end_time_H1_error(space, zero, ex, 1.0) == doctest::Approx(broken_h1(space, nullptr, &ex, 1.0)));
}

TEST_CASE("heat series reference") {
  const double pi = std::numbers::pi;
  CHECK(reference_exp2(0.5, 0.5, 0.0, 10000).v == doctest::Approx(0.25).epsilon(4e-6));
  for (double t : {0.0, 0.01, 1.0}) CHECK(reference_exp2(0.0, 0.3, t, 50).v == 0.0);
  double prev = reference_exp2(0.3, 0.6, 0.0, 200).v;
  for (double t : {0.001, 0.01, 0.1, 1.0}) {
    const double v = reference_exp2(0.3, 0.6, t, 200).v;
    CHECK(v < prev);
    CHECK(v > 0.0);
    prev = v;
  }
  for (int K : {10, 100, 1000}) {
    const double a = reference_exp2(0.37, 0.41, 0.0, K).v;
    const double b = reference_exp2(0.37, 0.41, 0.0, 2 * K).v;
    CHECK(std::abs(a - b) <= exp2_tail_bound(K));
  }
  CHECK(exp2_tail_bound(10) == doctest::Approx(4.0 / (pi * pi * pi * 100.0)));

  // the series solves the heat equation
  const PointState s = reference_exp2(0.3, 0.7, 0.02, 4000);
  CHECK(s.vt == doctest::Approx(s.hxx + s.hyy).epsilon(1e-9));
  CHECK(HeatSeriesReference::auto_terms(1e-3) == 4000);
  CHECK(exp2_tail_bound(HeatSeriesReference::auto_terms(1e-8)) <= 1e-10);
  const HeatSeriesReference ref;
  CHECK(ref({0.3, 0.7}, 0.02).v == s.v);
}

TEST_CASE("EOC") {
  CHECK(eoc({0.4, 0.1}, {0.5, 0.25})[0] == doctest::Approx(2.0));
  CHECK(eoc({1.0, 1.0}, {0.5, 0.25})[0] == 0.0);
  CHECK_THROWS_AS(eoc({1.0, 0.0}, {0.5, 0.25}), ArgumentError);
  CHECK_THROWS_AS(eoc({1.0}, {0.5}), ArgumentError);
  CHECK_THROWS_AS(eoc({1.0, 2.0}, {0.5}), ArgumentError);
}

TEST_CASE("exponential fit") {
  const RateFit f = exp_rate_fit({std::exp(-1.0), std::exp(-2.0), std::exp(-3.0)}, {1.0, 4.0, 9.0}, 0.5);
  CHECK(f.slope == doctest::Approx(-1.0));
  CHECK(f.r2 == doctest::Approx(1.0));
  CHECK(!f.degenerate);
  const RateFit c = exp_rate_fit({0.1, 0.1, 0.1}, {1.0, 8.0, 27.0}, 1.0 / 3.0);
  CHECK(c.slope == doctest::Approx(0.0));
  CHECK(c.degenerate);
  CHECK(exp_rate_fit({0.1}, {4.0}, 0.5).degenerate);
  CHECK_THROWS_AS(exp_rate_fit({0.1, -0.1, 0.2}, {1.0, 2.0, 3.0}, 0.5), ArgumentError);
}

TEST_CASE("error table CSV") {
  ErrorTable t;
  ErrorRow a;
  a.level = 1;
  a.h = 0.5;
  a.err_X = 0.4;
  a.err_H1_T = 0.4;
  ErrorRow b = a;
  b.level = 2;
  b.h = 0.25;
  b.err_X = 0.1;
  b.err_H1_T = 0.2;
  t.rows = {a, b};
  CHECK(std::string(ErrorTable::header()) == "level,h,tau,p,q,dof_x,dof_t,err_X,err_E,err_H1_T,eoc_X,eoc_H1T");
  CHECK(t.eoc_X()[0] == doctest::Approx(2.0));
  CHECK(t.eoc_H1T()[0] == doctest::Approx(1.0));
  std::ostringstream out;
  t.write_csv(out);
  CHECK(out.str().rfind(std::string(ErrorTable::header()) + "\n1,", 0) == 0);
}

TEST_CASE("cubic sweep on the anisotropic family gains two orders") {
  RunConfig c;
  c.problem = "exp1-anisotropic-sup";
  c.p = 3;
  c.q = 2;
  c.intervals = 2;
  c.sweep_min = 1;
  c.sweep_max = 3;
  const ErrorTable t = run_convergence(c);
  REQUIRE(t.rows.size() == 3);
  CHECK(std::abs(t.eoc_X().back() - 2.0) <= 0.3);
}
