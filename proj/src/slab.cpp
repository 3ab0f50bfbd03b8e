#include "sthjb/slab.hpp"

#include <algorithm>
#include <limits>

#include "sthjb/errors.hpp"
#include "sthjb/parallel.hpp"

namespace sthjb {

namespace {

struct Extremum {
  double value;
  int control;
};

// min over controls of gamma (v_t - a:D2v - b.grad v + c v + f) from cached weights.
Extremum pointwise_min(const double* c, int n_controls, double v, double vt, double gx, double gy,
                       double hxx, double hxy, double hyy) {
  Extremum best{std::numeric_limits<double>::infinity(), 0};
  for (int a = 0; a < n_controls; ++a, c += 8) {
    const double val = c[0] * vt -
                       (c[1] * hxx + 2.0 * c[2] * hxy + c[3] * hyy + c[4] * gx + c[5] * gy - c[6] * v) +
                       c[7];
    if (val < best.value) best = {val, a};
  }
  return best;
}

}  // namespace

SlabSystem::SlabSystem(const HJBProblem& problem, const DGSpace& space, const SpatialOperators& ops,
                       const std::vector<BasisTable>& tables, double t0, double tau, int q)
    : problem_(problem),
      space_(space),
      tables_(tables),
      tb_(temporal_basis(q, tau, q + 2)),
      nt_(q + 1),
      dim_(space.dim()),
      n_controls_(problem.n_controls),
      t0_(t0),
      a_h_(ops.a_h) {
  const int* outer = ops.a_h.outerIndexPtr();
  const int* inner = ops.a_h.innerIndexPtr();
  spatial_len_.resize(dim_);
  diag_rel_.resize(dim_);
  for (int k = 0; k < space.n_elements(); ++k) {
    for (int j = 0; j < space.n_basis(k); ++j) {
      const int c = space.offset(k) + j;
      spatial_len_[c] = outer[c + 1] - outer[c];
      const int* it = std::lower_bound(inner + outer[c], inner + outer[c + 1], space.offset(k));
      diag_rel_[c] = static_cast<int>(it - (inner + outer[c]));
    }
  }
  const int n = nt_ * dim_;
  col_start_.assign(n + 1, 0);
  for (int m = 0; m < nt_; ++m)
    for (int c = 0; c < dim_; ++c) col_start_[m * dim_ + c + 1] = nt_ * spatial_len_[c];
  for (int i = 0; i < n; ++i) col_start_[i + 1] += col_start_[i];

  const TemporalMatrices tm = temporal_matrices(q, tau);
  const double om = problem.omega;
  std::vector<int> rows(col_start_.back());
  std::vector<double> values(col_start_.back());
  const double* sv = ops.slab.valuePtr();
  const double* gv = ops.flux.valuePtr();
  const double* av = ops.a_h.valuePtr();
  for (int m = 0; m < nt_; ++m) {
    for (int c = 0; c < dim_; ++c) {
      int pos = col_start_[m * dim_ + c];
      for (int k = 0; k < nt_; ++k) {
        const double cs = tm.mass(k, m);
        const double cg = om * tm.deriv(k, m);
        const double ca = om * tm.left(k) * tm.left(m);
        for (int r = outer[c]; r < outer[c + 1]; ++r, ++pos) {
          rows[pos] = inner[r] + k * dim_;
          values[pos] = cs * sv[r] + cg * gv[r] + ca * av[r];
        }
      }
    }
  }
  const Eigen::Map<const SparseMatrix> map(n, n, static_cast<Eigen::Index>(rows.size()),
                                           col_start_.data(), rows.data(), values.data());
  linear_ = SparseMatrix(map);

  const int ne = space.n_elements();
  const int nqt = static_cast<int>(tb_.s.size());
  policy_offsets_.assign(ne + 1, 0);
  for (int k = 0; k < ne; ++k) policy_offsets_[k + 1] = policy_offsets_[k] + nqt * tables[k].n_points();
  coeffs_.resize(ne);
  parallel_for(ne, [&](int k) {
    const BasisTable& t = tables_[k];
    const int nqx = t.n_points();
    std::vector<double>& c = coeffs_[k];
    c.resize(static_cast<std::size_t>(nqt) * nqx * n_controls_ * kStride);
    Coefficients co;
    double* dst = c.data();
    for (int j = 0; j < nqt; ++j) {
      const double time = t0_ + 0.5 * tau * (tb_.s[j] + 1.0);
      for (int i = 0; i < nqx; ++i) {
        for (int a = 0; a < n_controls_; ++a, dst += kStride) {
          problem_.coefficients(t.points[i], time, a, co);
          const double g = gamma_eval(problem_, co);
          dst[0] = g;
          dst[1] = g * co.a(0, 0);
          dst[2] = g * co.a(0, 1);
          dst[3] = g * co.a(1, 1);
          dst[4] = g * co.b(0);
          dst[5] = g * co.b(1);
          dst[6] = g * co.c;
          dst[7] = g * co.f;
        }
      }
    }
  });
}

const double* SlabSystem::coeff(int k, int tq, int xq, int control) const {
  const int nqx = tables_[k].n_points();
  return coeffs_[k].data() + (static_cast<std::size_t>(tq * nqx + xq) * n_controls_ + control) * kStride;
}

Eigen::VectorXd SlabSystem::rhs_from_functional(const Eigen::VectorXd& a_h_w) const {
  Eigen::VectorXd r(size());
  for (int k = 0; k < nt_; ++k) r.segment(k * dim_, dim_) = problem_.omega * tb_.left(k) * a_h_w;
  return r;
}

Eigen::VectorXd SlabSystem::rhs_from_trace(const Eigen::VectorXd& prev_end) const {
  return rhs_from_functional(a_h_ * prev_end);
}

Eigen::MatrixXd SlabSystem::test_matrix(int k) const {
  const BasisTable& t = tables_[k];
  const int nb = t.n_basis();
  const int nqx = t.n_points();
  const int nqt = static_cast<int>(tb_.s.size());
  const Eigen::MatrixXd lphi = t.hxx + t.hyy - problem_.lambda * t.v;
  Eigen::MatrixXd te(nt_ * nb, nqt * nqx);
  for (int j = 0; j < nqt; ++j)
    for (int m = 0; m < nt_; ++m)
      te.block(m * nb, j * nqx, nb, nqx) = problem_.omega * tb_.dpsi(m, j) * t.v - tb_.psi(m, j) * lphi;
  return te;
}

void SlabSystem::assemble(const PolicyField& policy, SparseMatrix& matrix, Eigen::VectorXd& load) const {
  if (static_cast<int>(policy.control.size()) != policy_offsets_.back())
    throw ArgumentError("policy field does not match the slab");
  matrix = linear_;
  load = Eigen::VectorXd::Zero(size());
  double* values = matrix.valuePtr();
  const int nqt = static_cast<int>(tb_.s.size());
  parallel_for(space_.n_elements(), [&](int k) {
    const BasisTable& t = tables_[k];
    const int nb = t.n_basis();
    const int nqx = t.n_points();
    const int off = space_.offset(k);
    const Eigen::MatrixXd te = test_matrix(k);
    Eigen::MatrixXd tr(nt_ * nb, nqt * nqx);
    Eigen::VectorXd w(nqt * nqx);
    Eigen::VectorXd wf(nqt * nqx);
    Eigen::MatrixXd gv(nb, nqx), op(nb, nqx);
    const int* pol = policy.control.data() + policy_offset(k);
    for (int j = 0; j < nqt; ++j) {
      for (int i = 0; i < nqx; ++i) {
        const double* c = coeff(k, j, i, pol[j * nqx + i]);
        gv.col(i) = c[0] * t.v.col(i);
        op.col(i) = c[1] * t.hxx.col(i) + 2.0 * c[2] * t.hxy.col(i) + c[3] * t.hyy.col(i) +
                    c[4] * t.gx.col(i) + c[5] * t.gy.col(i) - c[6] * t.v.col(i);
        w[j * nqx + i] = t.weights[i] * tb_.weights[j];
        wf[j * nqx + i] = w[j * nqx + i] * c[7];
      }
      for (int m = 0; m < nt_; ++m)
        tr.block(m * nb, j * nqx, nb, nqx) = tb_.dpsi(m, j) * gv - tb_.psi(m, j) * op;
    }
    const Eigen::MatrixXd e = te * w.asDiagonal() * tr.transpose();
    const Eigen::VectorXd lf = te * wf;
    for (int m = 0; m < nt_; ++m) {
      for (int jb = 0; jb < nb; ++jb) {
        const int c = off + jb;
        const int base = col_start_[m * dim_ + c] + diag_rel_[c];
        for (int kk = 0; kk < nt_; ++kk) {
          double* dst = values + base + kk * spatial_len_[c];
          for (int ib = 0; ib < nb; ++ib) dst[ib] += e(kk * nb + ib, m * nb + jb);
        }
      }
    }
    for (int kk = 0; kk < nt_; ++kk) load.segment(kk * dim_ + off, nb) = lf.segment(kk * nb, nb);
  });
}

Eigen::VectorXd SlabSystem::residual(const Eigen::VectorXd& u, const Eigen::VectorXd& rhs,
                                     PolicyField* policy) const {
  Eigen::VectorXd r = linear_ * u - rhs;
  if (policy) policy->control.assign(policy_offsets_.back(), 0);
  const int nqt = static_cast<int>(tb_.s.size());
  const Eigen::Map<const Eigen::VectorXd> wt(tb_.weights.data(), nqt);
  parallel_for(space_.n_elements(), [&](int k) {
    const BasisTable& t = tables_[k];
    const int nb = t.n_basis();
    const int nqx = t.n_points();
    const int off = space_.offset(k);
    const SlabFieldValues f = eval_slab_field(t, tb_, u, dim_, off);
    Eigen::MatrixXd fw(nqx, nqt);
    int* pol = policy ? policy->control.data() + policy_offset(k) : nullptr;
    for (int j = 0; j < nqt; ++j) {
      for (int i = 0; i < nqx; ++i) {
        const Extremum e = pointwise_min(coeff(k, j, i, 0), n_controls_, f.v(i, j), f.vt(i, j),
                                         f.gx(i, j), f.gy(i, j), f.hxx(i, j), f.hxy(i, j), f.hyy(i, j));
        fw(i, j) = e.value * t.weights[i] * wt[j];
        if (pol) pol[j * nqx + i] = e.control;
      }
    }
    const Eigen::MatrixXd lphi = t.hxx + t.hyy - problem_.lambda * t.v;
    const Eigen::MatrixXd loc =
        problem_.omega * t.v * fw * tb_.dpsi.transpose() - lphi * fw * tb_.psi.transpose();
    for (int kk = 0; kk < nt_; ++kk) r.segment(kk * dim_ + off, nb) += loc.col(kk);
  });
  return r;
}

PolicyField SlabSystem::policy(const Eigen::VectorXd& u) const {
  PolicyField p;
  residual(u, Eigen::VectorXd::Zero(size()), &p);
  return p;
}

PolicyField SlabSystem::policy_from_initial(const InitialFn& u0) const {
  PolicyField p;
  p.control.assign(policy_offsets_.back(), 0);
  const int nqt = static_cast<int>(tb_.s.size());
  parallel_for(space_.n_elements(), [&](int k) {
    const BasisTable& t = tables_[k];
    const int nqx = t.n_points();
    int* pol = p.control.data() + policy_offset(k);
    for (int i = 0; i < nqx; ++i) {
      const Jet j0 = u0(t.points[i]);
      for (int j = 0; j < nqt; ++j)
        pol[j * nqx + i] = pointwise_min(coeff(k, j, i, 0), n_controls_, j0.v, 0.0, j0.gx, j0.gy,
                                         j0.hxx, j0.hxy, j0.hyy)
                               .control;
    }
  });
  return p;
}

Eigen::VectorXd SlabSystem::end_trace(const Eigen::VectorXd& u) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dim_);
  for (int k = 0; k < nt_; ++k) r += tb_.right(k) * u.segment(k * dim_, dim_);
  return r;
}

Eigen::VectorXd SlabSystem::start_trace(const Eigen::VectorXd& u) const {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dim_);
  for (int k = 0; k < nt_; ++k) r += tb_.left(k) * u.segment(k * dim_, dim_);
  return r;
}

}  // namespace sthjb
