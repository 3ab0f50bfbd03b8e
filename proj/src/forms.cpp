#include "sthjb/forms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <random>

#include "sthjb/errors.hpp"
#include "sthjb/parallel.hpp"

namespace sthjb {

namespace {

// Weighted product X diag(w) Y^T: rows index test functions, columns trial functions.
Eigen::MatrixXd wprod(const Eigen::MatrixXd& x, const std::vector<double>& w, const Eigen::MatrixXd& y) {
  const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
  return x * wv.asDiagonal() * y.transpose();
}

// Linear combination of matrices that share one sparsity pattern.
SparseMatrix combine(std::initializer_list<std::pair<double, const SparseMatrix*>> terms) {
  const SparseMatrix& first = *terms.begin()->second;
  SparseMatrix r = first;
  Eigen::Map<Eigen::VectorXd> out(r.valuePtr(), r.nonZeros());
  out.setZero();
  for (const auto& [c, m] : terms) {
    if (m->nonZeros() != r.nonZeros()) throw StructuralError("operator patterns differ");
    out += c * Eigen::Map<const Eigen::VectorXd>(m->valuePtr(), m->nonZeros());
  }
  return r;
}

void scatter_face(SparseMatrix& m, const DGSpace& space, const Face& f, const Eigen::MatrixXd& local) {
  const int ne = space.n_basis(f.k_ext);
  add_block(m, space, f.k_ext, f.k_ext, local.topLeftCorner(ne, ne));
  if (!f.interior()) return;
  const int ni = space.n_basis(f.k_int);
  add_block(m, space, f.k_ext, f.k_int, local.topRightCorner(ne, ni));
  add_block(m, space, f.k_int, f.k_ext, local.bottomLeftCorner(ni, ne));
  add_block(m, space, f.k_int, f.k_int, local.bottomRightCorner(ni, ni));
}

}  // namespace

std::vector<FacePenalty> build_penalty_table(const DGSpace& space, PenaltyParams params,
                                             double lambda) {
  if (!(params.c_s > 0.0)) throw ConfigError("penalty constant c_s must be positive");
  if (params.sigma < 1.0) throw ConfigError("penalty factor sigma must be >= 1");
  std::vector<FacePenalty> table;
  table.reserve(space.mesh().faces().size());
  for (const Face& f : space.mesh().faces()) {
    const PenaltyGeometry g = face_penalty_geometry(space.mesh(), f, space.degrees());
    const double p2 = static_cast<double>(g.p_tilde) * g.p_tilde;
    table.push_back({params.sigma * params.c_s * p2 / g.h_tilde,
                     params.sigma * std::max(1.0, lambda) * params.c_s * p2 * p2 * p2 /
                         (g.h_tilde * g.h_tilde * g.h_tilde)});
  }
  return table;
}

BlockPattern::BlockPattern(const DGSpace& space) : dim_(space.dim()) {
  const int ne = space.n_elements();
  std::vector<std::vector<int>> adj(ne);
  for (int k = 0; k < ne; ++k) adj[k].push_back(k);
  for (const Face& f : space.mesh().faces()) {
    if (!f.interior()) continue;
    adj[f.k_ext].push_back(f.k_int);
    adj[f.k_int].push_back(f.k_ext);
  }
  col_start_.assign(dim_ + 1, 0);
  for (int k = 0; k < ne; ++k) {
    auto& a = adj[k];
    std::sort(a.begin(), a.end());
    a.erase(std::unique(a.begin(), a.end()), a.end());
  }
  for (int k = 0; k < ne; ++k) {
    int len = 0;
    for (int kk : adj[k]) len += space.n_basis(kk);
    for (int j = 0; j < space.n_basis(k); ++j) {
      const int col = space.offset(k) + j;
      col_start_[col + 1] = len;
    }
  }
  for (int c = 0; c < dim_; ++c) col_start_[c + 1] += col_start_[c];
  rows_.resize(col_start_.back());
  for (int k = 0; k < ne; ++k) {
    for (int j = 0; j < space.n_basis(k); ++j) {
      int pos = col_start_[space.offset(k) + j];
      for (int kk : adj[k])
        for (int i = 0; i < space.n_basis(kk); ++i) rows_[pos++] = space.offset(kk) + i;
    }
  }
}

int BlockPattern::position(int row, int col) const {
  const auto begin = rows_.begin() + col_start_[col];
  const auto end = rows_.begin() + col_start_[col + 1];
  const auto it = std::lower_bound(begin, end, row);
  if (it == end || *it != row) throw StructuralError("entry outside the block pattern");
  return static_cast<int>(it - rows_.begin());
}

SparseMatrix BlockPattern::zero_matrix() const {
  std::vector<double> values(rows_.size(), 0.0);
  const Eigen::Map<const SparseMatrix> map(dim_, dim_, static_cast<Eigen::Index>(rows_.size()),
                                           col_start_.data(), rows_.data(), values.data());
  return SparseMatrix(map);
}

void add_block(SparseMatrix& m, const DGSpace& space, int ka, int kb, const Eigen::MatrixXd& block) {
  const int row0 = space.offset(ka);
  const int nr = space.n_basis(ka);
  const int* inner = m.innerIndexPtr();
  const int* outer = m.outerIndexPtr();
  double* values = m.valuePtr();
  for (int j = 0; j < space.n_basis(kb); ++j) {
    const int col = space.offset(kb) + j;
    const int* it = std::lower_bound(inner + outer[col], inner + outer[col + 1], row0);
    if (it == inner + outer[col + 1] || *it != row0)
      throw StructuralError("block outside the sparsity pattern");
    double* dst = values + (it - inner);
    for (int i = 0; i < nr; ++i) dst[i] += block(i, j);
  }
}

SparseMatrix SpatialOperators::h2_lambda() const {
  return combine({{1.0, &hess}, {2.0 * lambda, &grad}, {lambda * lambda, &mass}});
}

SparseMatrix SpatialOperators::h2_full() const {
  return combine({{1.0, &hess}, {1.0, &grad}, {1.0, &mass}});
}

SparseMatrix SpatialOperators::b_theta(double theta) const {
  if (theta < 0.0 || theta > 1.0) throw ArgumentError("theta must lie in [0,1]");
  return combine({{theta, &b_star}, {1.0 - theta, &lap}, {1.0, &jump}});
}

std::vector<BasisTable> tabulate_all_elements(const DGSpace& space, int extra) {
  std::vector<BasisTable> tables(space.n_elements());
  parallel_for(space.n_elements(), [&](int k) {
    tables[k] = tabulate_element(space, k, space.degree(k) + 3 + extra);
  });
  return tables;
}

SpatialOperators assemble_spatial_operators(const DGSpace& space,
                                            const std::vector<FacePenalty>& penalties,
                                            double lambda) {
  const BlockPattern pattern(space);
  SpatialOperators ops;
  ops.lambda = lambda;
  ops.a_h = pattern.zero_matrix();
  ops.jump = ops.a_h;
  ops.b_star = ops.a_h;
  ops.lap = ops.a_h;
  ops.flux = ops.a_h;
  ops.mass = ops.a_h;
  ops.grad = ops.a_h;
  ops.hess = ops.a_h;

  const int ne = space.n_elements();
  struct ElementBlocks {
    Eigen::MatrixXd mass, grad, hess, lap;
  };
  std::vector<ElementBlocks> blocks(ne);
  parallel_for(ne, [&](int k) {
    const BasisTable t = tabulate_element(space, k, space.degree(k) + 3);
    const auto& w = t.weights;
    ElementBlocks& b = blocks[k];
    b.mass = wprod(t.v, w, t.v);
    b.grad = wprod(t.gx, w, t.gx) + wprod(t.gy, w, t.gy);
    b.hess = wprod(t.hxx, w, t.hxx) + 2.0 * wprod(t.hxy, w, t.hxy) + wprod(t.hyy, w, t.hyy);
    const Eigen::MatrixXd l = t.hxx + t.hyy - lambda * t.v;
    b.lap = wprod(l, w, l);
  });
  for (int k = 0; k < ne; ++k) {
    const ElementBlocks& b = blocks[k];
    add_block(ops.mass, space, k, k, b.mass);
    add_block(ops.grad, space, k, k, b.grad);
    add_block(ops.hess, space, k, k, b.hess);
    add_block(ops.lap, space, k, k, b.lap);
    add_block(ops.a_h, space, k, k, b.grad + lambda * b.mass);
    add_block(ops.b_star, space, k, k, b.hess + 2.0 * lambda * b.grad + lambda * lambda * b.mass);
  }

  const auto faces = space.mesh().faces();
  const int nf = static_cast<int>(faces.size());
  struct FaceBlocks {
    Eigen::MatrixXd a, j, b, g;
  };
  std::vector<FaceBlocks> fblocks(nf);
  parallel_for(nf, [&](int fi) {
    const Face& f = faces[fi];
    const FaceTable t = tabulate_face(space, f, face_rule_size(space, f));
    const auto& w = t.weights;
    const double mu = penalties[fi].mu;
    const double eta = penalties[fi].eta;
    const Eigen::MatrixXd jv = t.jump(&FaceSide::v);
    const Eigen::MatrixXd av = t.avg(&FaceSide::v);
    const Eigen::MatrixXd jdn = t.jump(&FaceSide::dn);
    const Eigen::MatrixXd adn = t.avg(&FaceSide::dn);
    const Eigen::MatrixXd jdt = t.jump(&FaceSide::dt);
    const Eigen::MatrixXd adtt = t.avg(&FaceSide::dtt);
    const Eigen::MatrixXd adtn = t.avg(&FaceSide::dtn);
    const Eigen::MatrixXd jv_adn = wprod(jv, w, adn);
    const Eigen::MatrixXd jv_jv = wprod(jv, w, jv);
    const Eigen::MatrixXd jdt_adtn = wprod(jdt, w, adtn);
    FaceBlocks& b = fblocks[fi];
    b.a = -jv_adn - jv_adn.transpose() + mu * jv_jv;
    b.j = mu * wprod(jdt, w, jdt) + eta * jv_jv;
    b.b = -jdt_adtn - jdt_adtn.transpose() - lambda * (jv_adn + jv_adn.transpose());
    b.g = mu * jv_jv - jv_adn.transpose();
    if (t.interior) {
      b.j += mu * wprod(jdn, w, jdn);
      const Eigen::MatrixXd jdn_adtt = wprod(jdn, w, adtt);
      const Eigen::MatrixXd jdn_av = wprod(jdn, w, av);
      b.b += jdn_adtt + jdn_adtt.transpose() - lambda * (jdn_av + jdn_av.transpose());
      b.g += jdn_av.transpose();
    }
  });
  for (int fi = 0; fi < nf; ++fi) {
    scatter_face(ops.a_h, space, faces[fi], fblocks[fi].a);
    scatter_face(ops.jump, space, faces[fi], fblocks[fi].j);
    scatter_face(ops.b_star, space, faces[fi], fblocks[fi].b);
    scatter_face(ops.flux, space, faces[fi], fblocks[fi].g);
  }
  ops.slab = combine({{0.5, &ops.b_star}, {-0.5, &ops.lap}, {1.0, &ops.jump}});
  return ops;
}

SparseMatrix assemble_a_h(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                          double lambda) {
  return assemble_spatial_operators(space, penalties, lambda).a_h;
}

SparseMatrix assemble_J_h(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                          double lambda) {
  return assemble_spatial_operators(space, penalties, lambda).jump;
}

SparseMatrix assemble_B_theta(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                              double lambda, double theta) {
  return assemble_spatial_operators(space, penalties, lambda).b_theta(theta);
}

namespace {

struct FaceJets {
  std::vector<Point> pts;
  std::vector<double> w;
  std::vector<Jet> ext, in;
};

FaceJets face_jets(const DGSpace& space, const Face& f, const ElementField& field) {
  const int n = face_rule_size(space, f) + 1;
  const QuadratureRule& rule = gauss_legendre(n);
  FaceJets r;
  for (int i = 0; i < n; ++i) {
    const double s = 0.5 * (rule.points[i] + 1.0);
    const Point x{f.a.x + s * (f.b.x - f.a.x), f.a.y + s * (f.b.y - f.a.y)};
    r.pts.push_back(x);
    r.w.push_back(0.5 * f.length * rule.weights[i]);
    r.ext.push_back(field(f.k_ext, x));
    if (f.interior()) r.in.push_back(field(f.k_int, x));
  }
  return r;
}

double dn(const Jet& j, Point n) { return j.gx * n.x + j.gy * n.y; }

}  // namespace

double a_h_energy(const DGSpace& space, const std::vector<FacePenalty>& penalties, double lambda,
                  const ElementField& w) {
  double sum = 0.0;
  for (int k = 0; k < space.n_elements(); ++k) {
    const int n = space.degree(k) + 4;
    const QuadratureRule& rule = gauss_legendre(n);
    const Cell& c = space.mesh().cell(k);
    const double hx = c.x1 - c.x0;
    const double hy = c.y1 - c.y0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const Point x{c.x0 + 0.5 * hx * (rule.points[i] + 1.0), c.y0 + 0.5 * hy * (rule.points[j] + 1.0)};
        const Jet v = w(k, x);
        sum += 0.25 * hx * hy * rule.weights[i] * rule.weights[j] *
               (v.gx * v.gx + v.gy * v.gy + lambda * v.v * v.v);
      }
  }
  const auto faces = space.mesh().faces();
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const FaceJets fj = face_jets(space, f, w);
    for (std::size_t q = 0; q < fj.pts.size(); ++q) {
      double jump = fj.ext[q].v;
      double avg_dn = dn(fj.ext[q], f.normal);
      if (f.interior()) {
        jump -= fj.in[q].v;
        avg_dn = 0.5 * (avg_dn + dn(fj.in[q], f.normal));
      }
      sum += fj.w[q] * (-2.0 * avg_dn * jump + penalties[fi].mu * jump * jump);
    }
  }
  return sum;
}

double J_h_energy(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                  const ElementField& w) {
  double sum = 0.0;
  const auto faces = space.mesh().faces();
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const Point t = f.tangent();
    const FaceJets fj = face_jets(space, f, w);
    for (std::size_t q = 0; q < fj.pts.size(); ++q) {
      double jv = fj.ext[q].v;
      double jt = dn(fj.ext[q], t);
      double jn = 0.0;
      if (f.interior()) {
        jv -= fj.in[q].v;
        jt -= dn(fj.in[q], t);
        jn = dn(fj.ext[q], f.normal) - dn(fj.in[q], f.normal);
      }
      sum += fj.w[q] * (penalties[fi].mu * (jn * jn + jt * jt) + penalties[fi].eta * jv * jv);
    }
  }
  return sum;
}

Eigen::VectorXd a_h_load(const DGSpace& space, const std::vector<FacePenalty>& penalties,
                         double lambda, const InitialFn& g) {
  Eigen::VectorXd r = Eigen::VectorXd::Zero(space.dim());
  for (int k = 0; k < space.n_elements(); ++k) {
    const BasisTable t = tabulate_element(space, k, space.degree(k) + 4);
    Eigen::VectorXd wgx(t.n_points()), wgy(t.n_points()), wv(t.n_points());
    for (int q = 0; q < t.n_points(); ++q) {
      const Jet j = g(t.points[q]);
      wgx[q] = t.weights[q] * j.gx;
      wgy[q] = t.weights[q] * j.gy;
      wv[q] = t.weights[q] * lambda * j.v;
    }
    r.segment(space.offset(k), space.n_basis(k)) += t.gx * wgx + t.gy * wgy + t.v * wv;
  }
  const auto faces = space.mesh().faces();
  for (std::size_t fi = 0; fi < faces.size(); ++fi) {
    const Face& f = faces[fi];
    const FaceTable t = tabulate_face(space, f, face_rule_size(space, f) + 1);
    const int nq = t.n_points();
    Eigen::VectorXd wdn(nq), wjump(nq);
    for (int q = 0; q < nq; ++q) {
      const Jet j = g(t.points[q]);
      wdn[q] = t.weights[q] * dn(j, f.normal);
      wjump[q] = f.interior() ? 0.0 : t.weights[q] * j.v;
    }
    const Eigen::VectorXd local = -t.jump(&FaceSide::v) * wdn - t.avg(&FaceSide::dn) * wjump +
                                  penalties[fi].mu * t.jump(&FaceSide::v) * wjump;
    const int ne = space.n_basis(f.k_ext);
    r.segment(space.offset(f.k_ext), ne) += local.head(ne);
    if (f.interior()) r.segment(space.offset(f.k_int), space.n_basis(f.k_int)) += local.tail(local.size() - ne);
  }
  return r;
}

void write_matrix_dump(std::ostream& out, const SparseMatrix& m) {
  const auto old_precision = out.precision(17);
  for (int c = 0; c < m.outerSize(); ++c)
    for (SparseMatrix::InnerIterator it(m, c); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << it.value() << '\n';
  out.precision(old_precision);
}

Eigen::VectorXd SpaceTimeFunction::end_value(int n, int dim) const {
  const Eigen::VectorXd& b = blocks[n - 1];
  const int nt = static_cast<int>(b.size() / dim);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < nt; ++k) r += b.segment(k * dim, dim);
  return r;
}

Eigen::VectorXd SpaceTimeFunction::start_value(int n, int dim) const {
  const Eigen::VectorXd& b = blocks[n];
  const int nt = static_cast<int>(b.size() / dim);
  Eigen::VectorXd r = Eigen::VectorXd::Zero(dim);
  for (int k = 0; k < nt; ++k) r += (k % 2 == 0 ? 1.0 : -1.0) * b.segment(k * dim, dim);
  return r;
}

SlabFieldValues eval_slab_field(const BasisTable& table, const TemporalBasis& tb,
                                const Eigen::Ref<const Eigen::VectorXd>& block, int dim, int offset) {
  const int nb = table.n_basis();
  const int nt = tb.q + 1;
  Eigen::MatrixXd c(nb, nt);
  for (int k = 0; k < nt; ++k) c.col(k) = block.segment(k * dim + offset, nb);
  SlabFieldValues f;
  const Eigen::MatrixXd v = table.v.transpose() * c;
  f.v = v * tb.psi;
  f.vt = v * tb.dpsi;
  f.gx = table.gx.transpose() * c * tb.psi;
  f.gy = table.gy.transpose() * c * tb.psi;
  f.hxx = table.hxx.transpose() * c * tb.psi;
  f.hxy = table.hxy.transpose() * c * tb.psi;
  f.hyy = table.hyy.transpose() * c * tb.psi;
  return f;
}

TemporalMatrices temporal_matrices(int q, double tau) {
  const TemporalBasis b = temporal_basis(q, tau, q + 2);
  TemporalMatrices m;
  m.mass = wprod(b.psi, b.weights, b.psi);
  m.deriv = wprod(b.dpsi, b.weights, b.psi);
  m.stiff = wprod(b.dpsi, b.weights, b.dpsi);
  m.left = b.left;
  m.right = b.right;
  return m;
}

SpaceTimeForms::SpaceTimeForms(const HJBProblem& problem, const DGSpace& space,
                               const SpatialOperators& ops, const TimePartition& partition)
    : problem_(problem),
      space_(space),
      ops_(ops),
      partition_(partition),
      dim_(space.dim()),
      tables_(tabulate_all_elements(space)) {}

TemporalBasis SpaceTimeForms::time_basis(int n) const {
  return temporal_basis(partition_.q[n], partition_.tau(n), partition_.q[n] + 2);
}

double SpaceTimeForms::volume_L_omega(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const {
  const double om = problem_.omega;
  const double lam = problem_.lambda;
  double sum = 0.0;
  for (int n = 0; n < partition_.n_intervals(); ++n) {
    const TemporalBasis tb = time_basis(n);
    const Eigen::Map<const Eigen::VectorXd> wt(tb.weights.data(), static_cast<Eigen::Index>(tb.weights.size()));
    for (int k = 0; k < space_.n_elements(); ++k) {
      const BasisTable& t = tables_[k];
      const Eigen::Map<const Eigen::VectorXd> wx(t.weights.data(), t.n_points());
      const SlabFieldValues fu = eval_slab_field(t, tb, u.blocks[n], dim_, space_.offset(k));
      const SlabFieldValues fv = eval_slab_field(t, tb, v.blocks[n], dim_, space_.offset(k));
      const Eigen::MatrixXd lu = om * fu.vt - (fu.hxx + fu.hyy - lam * fu.v);
      const Eigen::MatrixXd lv = om * fv.vt - (fv.hxx + fv.hyy - lam * fv.v);
      sum += wx.dot(lu.cwiseProduct(lv) * wt);
    }
  }
  return sum;
}

double SpaceTimeForms::CF_h(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const {
  double sum = 0.0;
  for (int n = 0; n < partition_.n_intervals(); ++n) {
    const int nt = partition_.q[n] + 1;
    const TemporalMatrices tm = temporal_matrices(partition_.q[n], partition_.tau(n));
    for (int m = 0; m < nt; ++m) {
      const Eigen::VectorXd gu = ops_.flux * u.mode(n, m, dim_);
      for (int k = 0; k < nt; ++k) sum += tm.deriv(k, m) * v.mode(n, k, dim_).dot(gu);
    }
  }
  return problem_.omega * sum;
}

double SpaceTimeForms::slab_mass_form(const SparseMatrix& s, const SpaceTimeFunction& u,
                                      const SpaceTimeFunction& v) const {
  double sum = 0.0;
  for (int n = 0; n < partition_.n_intervals(); ++n) {
    const int nt = partition_.q[n] + 1;
    const TemporalMatrices tm = temporal_matrices(partition_.q[n], partition_.tau(n));
    for (int m = 0; m < nt; ++m) {
      const Eigen::VectorXd su = s * u.mode(n, m, dim_);
      for (int k = 0; k < nt; ++k)
        if (std::abs(tm.mass(k, m)) > 1e-15 * partition_.tau(n))
          sum += tm.mass(k, m) * v.mode(n, k, dim_).dot(su);
    }
  }
  return sum;
}

double SpaceTimeForms::time_derivative_form(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const {
  double sum = 0.0;
  for (int n = 0; n < partition_.n_intervals(); ++n) {
    const int nt = partition_.q[n] + 1;
    const TemporalMatrices tm = temporal_matrices(partition_.q[n], partition_.tau(n));
    for (int m = 0; m < nt; ++m) {
      const Eigen::VectorXd mu = ops_.mass * u.mode(n, m, dim_);
      for (int k = 0; k < nt; ++k) sum += tm.stiff(k, m) * v.mode(n, k, dim_).dot(mu);
    }
  }
  return sum;
}

Eigen::VectorXd SpaceTimeForms::jump(const SpaceTimeFunction& v, int n) const {
  const int N = partition_.n_intervals();
  const Eigen::VectorXd left = n > 0 ? v.end_value(n, dim_) : Eigen::VectorXd();
  const Eigen::VectorXd right = n < N ? v.start_value(n, dim_) : Eigen::VectorXd();
  return temporal_jump_avg(left, right, n, N).jump;
}

Eigen::VectorXd SpaceTimeForms::average(const SpaceTimeFunction& v, int n) const {
  const int N = partition_.n_intervals();
  const Eigen::VectorXd left = n > 0 ? v.end_value(n, dim_) : Eigen::VectorXd();
  const Eigen::VectorXd right = n < N ? v.start_value(n, dim_) : Eigen::VectorXd();
  return temporal_jump_avg(left, right, n, N).avg;
}

double SpaceTimeForms::C_h(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const {
  const int N = partition_.n_intervals();
  const double om = problem_.omega;
  double sum = volume_L_omega(u, v) + CF_h(u, v) + slab_mass_form(ops_.slab, u, v);
  for (int n = 0; n < N; ++n) sum -= om * average(v, n).dot(ops_.a_h * jump(u, n));
  for (int n = 1; n < N; ++n) sum += 0.5 * om * jump(v, n).dot(ops_.a_h * jump(u, n));
  return sum;
}

double SpaceTimeForms::A_h(const SpaceTimeFunction& u, const SpaceTimeFunction& v) const {
  const double om = problem_.omega;
  const double lam = problem_.lambda;
  double sum = 0.0;
  for (int n = 0; n < partition_.n_intervals(); ++n) {
    const TemporalBasis tb = time_basis(n);
    const double t0 = partition_.t[n];
    for (int k = 0; k < space_.n_elements(); ++k) {
      const BasisTable& t = tables_[k];
      const SlabFieldValues fu = eval_slab_field(t, tb, u.blocks[n], dim_, space_.offset(k));
      const SlabFieldValues fv = eval_slab_field(t, tb, v.blocks[n], dim_, space_.offset(k));
      for (int j = 0; j < static_cast<int>(tb.weights.size()); ++j) {
        const double time = t0 + 0.5 * tb.tau * (tb.s[j] + 1.0);
        for (int i = 0; i < t.n_points(); ++i) {
          const PointState s{fu.v(i, j), fu.vt(i, j), fu.gx(i, j), fu.gy(i, j),
                             fu.hxx(i, j), fu.hxy(i, j), fu.hyy(i, j)};
          const double fg = F_gamma_pointwise(problem_, s, t.points[i], time).value;
          const double lv = om * fv.vt(i, j) - (fv.hxx(i, j) + fv.hyy(i, j) - lam * fv.v(i, j));
          sum += t.weights[i] * tb.weights[j] * fg * lv;
        }
      }
    }
  }
  return sum + C_h(u, v) - volume_L_omega(u, v);
}

double SpaceTimeForms::initial_functional(const Eigen::VectorXd& a_h_u0, const SpaceTimeFunction& v) const {
  return problem_.omega * a_h_u0.dot(v.start_value(0, dim_));
}

SpaceTimeFunction SpaceTimeForms::random(unsigned seed) const {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  SpaceTimeFunction f;
  for (int n = 0; n < partition_.n_intervals(); ++n) {
    Eigen::VectorXd b((partition_.q[n] + 1) * dim_);
    for (Eigen::Index i = 0; i < b.size(); ++i) b[i] = dist(rng);
    f.blocks.push_back(std::move(b));
  }
  return f;
}

SpaceTimeFunction SpaceTimeForms::zero() const {
  SpaceTimeFunction f;
  for (int n = 0; n < partition_.n_intervals(); ++n)
    f.blocks.push_back(Eigen::VectorXd::Zero((partition_.q[n] + 1) * dim_));
  return f;
}

double coercivity_margin(const SpatialOperators& ops, double kappa, int samples, unsigned seed) {
  const SparseMatrix h2 = ops.h2_lambda();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  const int dim = static_cast<int>(ops.a_h.rows());
  double worst = std::numeric_limits<double>::infinity();
  Eigen::VectorXd v(dim);
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < dim; ++i) v[i] = dist(rng);
    const double bs = v.dot(ops.b_star * v);
    const double lap = v.dot(ops.lap * v);
    const double j = v.dot(ops.jump * v);
    const double hh = v.dot(h2 * v);
    for (double theta : {0.0, 0.5, 1.0}) {
      const double lhs = theta * bs + (1.0 - theta) * lap + j;
      const double rhs = theta / kappa * hh + (1.0 - theta) * lap + 0.5 * j;
      worst = std::min(worst, (lhs - rhs) / std::max(std::abs(lhs), 1e-300));
    }
  }
  return worst;
}

CalibrationResult calibrate_penalty(const DGSpace& space, double lambda, double kappa,
                                    PenaltyParams start, int samples, unsigned seed,
                                    int max_doublings) {
  if (!(kappa > 1.0)) throw ArgumentError("kappa must exceed 1");
  constexpr int kDenseLimit = 1500;
  PenaltyParams params = start;
  for (int d = 0; d <= max_doublings; ++d) {
    const SpatialOperators ops =
        assemble_spatial_operators(space, build_penalty_table(space, params, lambda), lambda);
    bool ok = true;
    if (space.dim() <= kDenseLimit) {
      const SparseMatrix h2 = ops.h2_lambda();
      const Eigen::MatrixXd m = Eigen::MatrixXd(ops.b_star) + 0.5 * Eigen::MatrixXd(ops.jump) -
                                Eigen::MatrixXd(h2) / kappa;
      const Eigen::MatrixXd sym = 0.5 * (m + m.transpose());
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(sym, Eigen::EigenvaluesOnly);
      const double scale = Eigen::MatrixXd(h2).norm();
      ok = eig.eigenvalues()(0) >= -1e-10 * scale;
    }
    const double margin = coercivity_margin(ops, kappa, samples, seed);
    if (ok && margin >= 0.0) return {params.c_s, d, margin};
    params.c_s *= 2.0;
  }
  throw SolverError("penalty calibration did not reach coercivity", -1, {});
}

}  // namespace sthjb
