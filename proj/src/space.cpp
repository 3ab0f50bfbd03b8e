#include "sthjb/space.hpp"

#include <algorithm>
#include <cmath>

#include "sthjb/errors.hpp"

namespace sthjb {

namespace {

struct AxisValues {
  std::vector<double> n, dn, d2n;
};

// Orthonormal Legendre values and derivatives (reference variable) at s.
void axis_values(int p, double s, AxisValues& out) {
  out.n.resize(p + 1);
  out.dn.resize(p + 1);
  out.d2n.resize(p + 1);
  legendre_values(p, s, out.n, out.dn, out.d2n);
  for (int a = 0; a <= p; ++a) {
    const double c = legendre_orthonormal_scale(a);
    out.n[a] *= c;
    out.dn[a] *= c;
    out.d2n[a] *= c;
  }
}

}  // namespace

DGSpace::DGSpace(std::shared_ptr<const Mesh2D> mesh, std::vector<int> degrees)
    : mesh_(std::move(mesh)), degrees_(std::move(degrees)) {
  if (!mesh_) throw ConfigError("space needs a mesh");
  if (static_cast<int>(degrees_.size()) != mesh_->n_elements())
    throw ConfigError("degree vector does not match the element count");
  offsets_.resize(degrees_.size() + 1, 0);
  for (std::size_t k = 0; k < degrees_.size(); ++k) {
    if (degrees_[k] < 2) throw ConfigError("polynomial degree must be at least 2");
    offsets_[k + 1] = offsets_[k] + (degrees_[k] + 1) * (degrees_[k] + 1);
  }
}

DGSpace DGSpace::uniform(std::shared_ptr<const Mesh2D> mesh, int p) {
  const int n = mesh->n_elements();
  return DGSpace(std::move(mesh), std::vector<int>(n, p));
}

int DGSpace::max_degree() const { return *std::max_element(degrees_.begin(), degrees_.end()); }

double DGSpace::degree_ratio() const {
  double r = 1.0;
  for (const Face& f : mesh_->faces()) {
    if (!f.interior()) continue;
    const int a = degrees_[f.k_ext];
    const int b = degrees_[f.k_int];
    r = std::max(r, static_cast<double>(std::max(a, b)) / std::min(a, b));
  }
  return r;
}

void DGSpace::eval_basis(int k, Point x, std::span<Jet> out) const {
  const Cell& c = mesh_->cell(k);
  const int p = degrees_[k];
  const double hx = c.x1 - c.x0;
  const double hy = c.y1 - c.y0;
  const double sx = 2.0 / hx;
  const double sy = 2.0 / hy;
  const double scale = 2.0 / std::sqrt(hx * hy);
  thread_local AxisValues ax, ay;
  axis_values(p, sx * (x.x - c.x0) - 1.0, ax);
  axis_values(p, sy * (x.y - c.y0) - 1.0, ay);
  for (int b = 0; b <= p; ++b) {
    for (int a = 0; a <= p; ++a) {
      Jet& j = out[a + (p + 1) * b];
      j.v = scale * ax.n[a] * ay.n[b];
      j.gx = scale * sx * ax.dn[a] * ay.n[b];
      j.gy = scale * sy * ax.n[a] * ay.dn[b];
      j.hxx = scale * sx * sx * ax.d2n[a] * ay.n[b];
      j.hxy = scale * sx * sy * ax.dn[a] * ay.dn[b];
      j.hyy = scale * sy * sy * ax.n[a] * ay.d2n[b];
    }
  }
}

Jet DGSpace::eval(int k, Point x, const Eigen::Ref<const Eigen::VectorXd>& coeffs) const {
  thread_local std::vector<Jet> basis;
  const int nb = n_basis(k);
  basis.resize(nb);
  eval_basis(k, x, basis);
  Jet r;
  const double* u = coeffs.data() + offsets_[k];
  for (int i = 0; i < nb; ++i) {
    r.v += u[i] * basis[i].v;
    r.gx += u[i] * basis[i].gx;
    r.gy += u[i] * basis[i].gy;
    r.hxx += u[i] * basis[i].hxx;
    r.hxy += u[i] * basis[i].hxy;
    r.hyy += u[i] * basis[i].hyy;
  }
  return r;
}

BasisTable tabulate_points(const DGSpace& space, int k, std::span<const Point> points) {
  const int nb = space.n_basis(k);
  const int nq = static_cast<int>(points.size());
  BasisTable t;
  t.points.assign(points.begin(), points.end());
  t.v.resize(nb, nq);
  t.gx.resize(nb, nq);
  t.gy.resize(nb, nq);
  t.hxx.resize(nb, nq);
  t.hxy.resize(nb, nq);
  t.hyy.resize(nb, nq);
  std::vector<Jet> jets(nb);
  for (int q = 0; q < nq; ++q) {
    space.eval_basis(k, points[q], jets);
    for (int i = 0; i < nb; ++i) {
      t.v(i, q) = jets[i].v;
      t.gx(i, q) = jets[i].gx;
      t.gy(i, q) = jets[i].gy;
      t.hxx(i, q) = jets[i].hxx;
      t.hxy(i, q) = jets[i].hxy;
      t.hyy(i, q) = jets[i].hyy;
    }
  }
  return t;
}

BasisTable tabulate_element(const DGSpace& space, int k, int n_per_axis) {
  const QuadratureRule& rule = gauss_legendre(n_per_axis);
  const Cell& c = space.mesh().cell(k);
  const double hx = c.x1 - c.x0;
  const double hy = c.y1 - c.y0;
  std::vector<Point> pts;
  std::vector<double> w;
  pts.reserve(n_per_axis * n_per_axis);
  for (int j = 0; j < n_per_axis; ++j) {
    for (int i = 0; i < n_per_axis; ++i) {
      pts.push_back({c.x0 + 0.5 * hx * (rule.points[i] + 1.0),
                     c.y0 + 0.5 * hy * (rule.points[j] + 1.0)});
      w.push_back(0.25 * hx * hy * rule.weights[i] * rule.weights[j]);
    }
  }
  BasisTable t = tabulate_points(space, k, pts);
  t.weights = std::move(w);
  return t;
}

namespace {

FaceSide face_side(const DGSpace& space, int k, const Face& face, std::span<const Point> pts) {
  const BasisTable t = tabulate_points(space, k, pts);
  const Point n = face.normal;
  const Point tg = face.tangent();
  FaceSide s;
  s.element = k;
  s.v = t.v;
  s.dn = n.x * t.gx + n.y * t.gy;
  s.dt = tg.x * t.gx + tg.y * t.gy;
  s.dtt = tg.x * tg.x * t.hxx + 2.0 * tg.x * tg.y * t.hxy + tg.y * tg.y * t.hyy;
  s.dtn = tg.x * n.x * t.hxx + (tg.x * n.y + tg.y * n.x) * t.hxy + tg.y * n.y * t.hyy;
  return s;
}

}  // namespace

FaceTable tabulate_face(const DGSpace& space, const Face& face, int n_points) {
  const QuadratureRule& rule = gauss_legendre(n_points);
  FaceTable t;
  t.interior = face.interior();
  for (int i = 0; i < n_points; ++i) {
    const double s = 0.5 * (rule.points[i] + 1.0);
    t.points.push_back({face.a.x + s * (face.b.x - face.a.x), face.a.y + s * (face.b.y - face.a.y)});
    t.weights.push_back(0.5 * face.length * rule.weights[i]);
  }
  t.ext = face_side(space, face.k_ext, face, t.points);
  if (t.interior) t.in = face_side(space, face.k_int, face, t.points);
  return t;
}

int face_rule_size(const DGSpace& space, const Face& face) {
  int p = space.degree(face.k_ext);
  if (face.interior()) p = std::max(p, space.degree(face.k_int));
  return p + 3;
}

Eigen::MatrixXd FaceTable::jump(Eigen::MatrixXd FaceSide::*q) const {
  const Eigen::MatrixXd& e = ext.*q;
  if (!interior) return e;
  const Eigen::MatrixXd& i = in.*q;
  Eigen::MatrixXd r(e.rows() + i.rows(), e.cols());
  r.topRows(e.rows()) = e;
  r.bottomRows(i.rows()) = -i;
  return r;
}

Eigen::MatrixXd FaceTable::avg(Eigen::MatrixXd FaceSide::*q) const {
  const Eigen::MatrixXd& e = ext.*q;
  if (!interior) return e;
  const Eigen::MatrixXd& i = in.*q;
  Eigen::MatrixXd r(e.rows() + i.rows(), e.cols());
  r.topRows(e.rows()) = 0.5 * e;
  r.bottomRows(i.rows()) = 0.5 * i;
  return r;
}

int TimePartition::temporal_dofs() const {
  int s = 0;
  for (int qn : q) s += qn + 1;
  return s;
}

TimePartition build_time_partition(PartitionKind kind, int n_intervals, double final_time,
                                   DegreeRule rule, int q, double sigma) {
  if (n_intervals < 1) throw ConfigError("number of time intervals must be >= 1");
  if (!(final_time > 0.0)) throw ConfigError("final time must be positive");
  if (rule == DegreeRule::constant && q < 1) throw ConfigError("temporal degree must be >= 1");
  TimePartition tp;
  tp.t.resize(n_intervals + 1);
  tp.t[0] = 0.0;
  if (kind == PartitionKind::uniform) {
    for (int n = 1; n <= n_intervals; ++n)
      tp.t[n] = final_time * static_cast<double>(n) / n_intervals;
  } else {
    if (!(sigma > 0.0 && sigma < 1.0)) throw ConfigError("geometric ratio must lie in (0,1)");
    for (int n = 1; n <= n_intervals; ++n)
      tp.t[n] = std::pow(sigma, n_intervals - n) * final_time;
  }
  tp.t[n_intervals] = final_time;
  tp.q.resize(n_intervals);
  for (int n = 0; n < n_intervals; ++n) tp.q[n] = rule == DegreeRule::linear ? n + 2 : q;
  return tp;
}

TemporalBasis temporal_basis(int q, double tau, int n_points) {
  if (q < 1) throw ConfigError("temporal degree must be >= 1");
  const QuadratureRule& rule = gauss_legendre(n_points);
  TemporalBasis b;
  b.q = q;
  b.tau = tau;
  b.s = rule.points;
  b.psi.resize(q + 1, n_points);
  b.dpsi.resize(q + 1, n_points);
  std::vector<double> p(q + 1), dp(q + 1), d2p(q + 1);
  for (int i = 0; i < n_points; ++i) {
    legendre_values(q, rule.points[i], p, dp, d2p);
    for (int k = 0; k <= q; ++k) {
      b.psi(k, i) = p[k];
      b.dpsi(k, i) = dp[k] * 2.0 / tau;
    }
    b.weights.push_back(0.5 * tau * rule.weights[i]);
  }
  b.left.resize(q + 1);
  b.right.resize(q + 1);
  for (int k = 0; k <= q; ++k) {
    b.left[k] = k % 2 == 0 ? 1.0 : -1.0;
    b.right[k] = 1.0;
  }
  return b;
}

TemporalJump temporal_jump_avg(const Eigen::VectorXd& left, const Eigen::VectorXd& right, int n,
                               int N) {
  if (n < 0 || n > N) throw ArgumentError("breakpoint index out of range");
  if (n == 0) return {-right, right};
  if (n == N) return {left, left};
  return {left - right, 0.5 * (left + right)};
}

}  // namespace sthjb
