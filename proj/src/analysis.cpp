#include "sthjb/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <numbers>
#include <ostream>
#include <unordered_map>

#include "sthjb/errors.hpp"
#include "sthjb/parallel.hpp"

namespace sthjb {

namespace {

Jet to_jet(const PointState& s) { return {s.v, s.gx, s.gy, s.hxx, s.hxy, s.hyy}; }

Jet operator-(const Jet& a, const Jet& b) {
  return {a.v - b.v, a.gx - b.gx, a.gy - b.gy, a.hxx - b.hxx, a.hxy - b.hxy, a.hyy - b.hyy};
}

VolumeIntegrals& operator+=(VolumeIntegrals& a, const VolumeIntegrals& b) {
  a.l2 += b.l2;
  a.grad += b.grad;
  a.hess += b.hess;
  a.vt += b.vt;
  a.h2_lambda += b.h2_lambda;
  return a;
}

}  // namespace

VolumeIntegrals volume_integrals(const DGSpace& space, const TimePartition& partition, double lambda,
                                 const SpaceTimeFunction* discrete, const ExactFn* reference) {
  VolumeIntegrals total;
  if (!discrete && !reference) return total;
  const std::vector<BasisTable> tables = tabulate_all_elements(space, 1);
  const int dim = space.dim();
  for (int n = 0; n < partition.n_intervals(); ++n) {
    const TemporalBasis tb = temporal_basis(partition.q[n], partition.tau(n), partition.q[n] + 3);
    const int nqt = static_cast<int>(tb.s.size());
    std::vector<VolumeIntegrals> parts(space.n_elements());
    parallel_for(space.n_elements(), [&](int k) {
      const BasisTable& t = tables[k];
      const int nqx = t.n_points();
      SlabFieldValues f;
      if (discrete) f = eval_slab_field(t, tb, discrete->blocks[n], dim, space.offset(k));
      VolumeIntegrals& acc = parts[k];
      for (int j = 0; j < nqt; ++j) {
        const double time = partition.t[n] + 0.5 * partition.tau(n) * (tb.s[j] + 1.0);
        for (int i = 0; i < nqx; ++i) {
          PointState s;
          if (reference) s = (*reference)(t.points[i], time);
          if (discrete) {
            s.v -= f.v(i, j);
            s.vt -= f.vt(i, j);
            s.gx -= f.gx(i, j);
            s.gy -= f.gy(i, j);
            s.hxx -= f.hxx(i, j);
            s.hxy -= f.hxy(i, j);
            s.hyy -= f.hyy(i, j);
          }
          const double w = t.weights[i] * tb.weights[j];
          const double l2 = s.v * s.v;
          const double g = s.gx * s.gx + s.gy * s.gy;
          const double h = s.hxx * s.hxx + 2.0 * s.hxy * s.hxy + s.hyy * s.hyy;
          acc.l2 += w * l2;
          acc.grad += w * g;
          acc.hess += w * h;
          acc.vt += w * s.vt * s.vt;
          acc.h2_lambda += w * (h + 2.0 * lambda * g + lambda * lambda * l2);
        }
      }
    });
    for (const VolumeIntegrals& p : parts) total += p;
  }
  return total;
}

double norm_X(const DGSpace& space, const TimePartition& partition, double omega,
              const SpaceTimeFunction* discrete, const ExactFn* reference) {
  const VolumeIntegrals v = volume_integrals(space, partition, 0.0, discrete, reference);
  return std::sqrt(omega * omega * v.vt + v.l2 + v.grad + v.hess);
}

double norm_h1(const SpaceTimeForms& forms, const SpaceTimeFunction& v) {
  const SpatialOperators& ops = forms.ops();
  const HJBProblem& pb = forms.problem();
  const SparseMatrix gram = ops.h2_lambda() + ops.jump;
  double sum = pb.omega * pb.omega * forms.time_derivative_form(v, v) + forms.slab_mass_form(gram, v, v);
  const int N = forms.partition().n_intervals();
  for (int n = 0; n <= N; ++n) {
    const Eigen::VectorXd j = forms.jump(v, n);
    sum += pb.omega * j.dot(ops.a_h * j);
  }
  return std::sqrt(std::max(sum, 0.0));
}

double norm_E_discrete(const SpaceTimeForms& forms, const SpaceTimeFunction& v) {
  const SpatialOperators& ops = forms.ops();
  const HJBProblem& pb = forms.problem();
  const SparseMatrix gram = ops.h2_lambda() + ops.jump;
  double sum = pb.omega * pb.omega * forms.time_derivative_form(v, v) + forms.slab_mass_form(gram, v, v);
  const int N = forms.partition().n_intervals();
  for (int n = 0; n < N; ++n) {
    const Eigen::VectorXd j = forms.jump(v, n);
    sum += pb.omega * j.dot(ops.a_h * j);
  }
  return std::sqrt(std::max(sum, 0.0));
}

double norm_E(const Discretisation& disc, const TimePartition& partition,
              const SpaceTimeFunction* discrete, const ExactFn* reference) {
  const HJBProblem& pb = disc.problem();
  const DGSpace& space = disc.space();
  if (discrete && !reference) {
    const SpaceTimeForms forms(pb, space, disc.ops(), partition);
    return norm_E_discrete(forms, *discrete);
  }
  const VolumeIntegrals v = volume_integrals(space, partition, pb.lambda, discrete, reference);
  double sum = pb.omega * pb.omega * v.vt + v.h2_lambda;
  if (discrete) {
    const SpaceTimeForms forms(pb, space, disc.ops(), partition);
    const int dim = space.dim();
    for (int n = 0; n < partition.n_intervals(); ++n) {
      const int q = partition.q[n];
      const TemporalBasis tb = temporal_basis(q, partition.tau(n), q + 2);
      for (std::size_t j = 0; j < tb.weights.size(); ++j) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(dim);
        for (int k = 0; k <= q; ++k) c += tb.psi(k, j) * discrete->mode(n, k, dim);
        const double t = partition.t[n] + 0.5 * (tb.s[j] + 1.0) * partition.tau(n);
        sum += tb.weights[j] * J_h_energy(space, disc.penalties(), [&](int k, Point x) {
                 return to_jet((*reference)(x, t)) - space.eval(k, x, c);
               });
      }
    }
    const Eigen::VectorXd start = discrete->start_value(0, space.dim());
    const InitialFn& u0 = pb.initial;
    sum += pb.omega * a_h_energy(space, disc.penalties(), pb.lambda,
                                 [&](int k, Point x) { return u0(x) - space.eval(k, x, start); });
    for (int n = 1; n < partition.n_intervals(); ++n) {
      const Eigen::VectorXd j = forms.jump(*discrete, n);
      sum += pb.omega * j.dot(disc.ops().a_h * j);
    }
  }
  return std::sqrt(std::max(sum, 0.0));
}

double broken_h1(const DGSpace& space, const Eigen::VectorXd* coeffs, const ExactFn* reference,
                 double t) {
  double sum = 0.0;
  for (int k = 0; k < space.n_elements(); ++k) {
    const BasisTable tab = tabulate_element(space, k, space.degree(k) + 4);
    for (int i = 0; i < tab.n_points(); ++i) {
      Jet e;
      if (reference) e = to_jet((*reference)(tab.points[i], t));
      if (coeffs) e = e - space.eval(k, tab.points[i], *coeffs);
      sum += tab.weights[i] * (e.v * e.v + e.gx * e.gx + e.gy * e.gy);
    }
  }
  return std::sqrt(sum);
}

double end_time_H1_error(const DGSpace& space, const Eigen::VectorXd& u_T, const ExactFn& reference,
                         double T) {
  return broken_h1(space, &u_T, &reference, T);
}

namespace {

// Series in x of the separated solution: X = sum c_k e^{-k^2 pi^2 t} sin(k pi x)
// over odd k, with its first two x-derivatives.
struct XSeries {
  double v = 0.0, dx = 0.0, dxx = 0.0;
};

XSeries x_series(double x, double t, int K) {
  constexpr double pi = std::numbers::pi;
  const double c0 = 8.0 / (pi * pi * pi);
  const double th = pi * x;
  const double c2 = 2.0 * std::cos(2.0 * th);
  double s_prev = -std::sin(th), s = std::sin(th);  // sin(-theta), sin(theta)
  double co_prev = std::cos(th), co = std::cos(th);
  XSeries r;
  for (int k = 1; k <= K; k += 2) {
    const double kk = static_cast<double>(k);
    const double decay = std::exp(-kk * kk * pi * pi * t);
    const double ck = c0 / (kk * kk * kk) * decay;
    r.v += ck * s;
    r.dx += ck * kk * pi * co;
    r.dxx -= ck * kk * kk * pi * pi * s;
    if (t > 0.0 && ck * kk * kk * pi * pi < 1e-18) break;
    const double s_next = c2 * s - s_prev;
    const double co_next = c2 * co - co_prev;
    s_prev = s;
    s = s_next;
    co_prev = co;
    co = co_next;
  }
  return r;
}

struct SeriesKey {
  double x, t;
  int K;
  bool operator==(const SeriesKey& o) const { return x == o.x && t == o.t && K == o.K; }
};

struct SeriesKeyHash {
  std::size_t operator()(const SeriesKey& k) const {
    std::uint64_t a, b;
    std::memcpy(&a, &k.x, sizeof a);
    std::memcpy(&b, &k.t, sizeof b);
    return std::hash<std::uint64_t>()(a * 0x9E3779B97F4A7C15ULL ^ b) ^ static_cast<std::size_t>(k.K);
  }
};

const XSeries& memo_x_series(double x, double t, int K) {
  thread_local std::unordered_map<SeriesKey, XSeries, SeriesKeyHash> cache;
  if (cache.size() > (1u << 16)) cache.clear();
  const SeriesKey key{x, t, K};
  auto it = cache.find(key);
  if (it == cache.end()) it = cache.emplace(key, x_series(x, t, K)).first;
  return it->second;
}

PointState assemble_state(const XSeries& s, double y, double t) {
  constexpr double pi = std::numbers::pi;
  const double e = std::exp(-pi * pi * t);
  const double sy = std::sin(pi * y);
  const double cy = std::cos(pi * y);
  PointState p;
  p.v = e * s.v * sy;
  p.vt = e * (-pi * pi * s.v + s.dxx) * sy;
  p.gx = e * s.dx * sy;
  p.gy = e * s.v * pi * cy;
  p.hxx = e * s.dxx * sy;
  p.hxy = e * s.dx * pi * cy;
  p.hyy = -pi * pi * p.v;
  return p;
}

}  // namespace

PointState reference_exp2(double x, double y, double t, int K) {
  if (K < 1) throw ArgumentError("series truncation must be at least 1");
  return assemble_state(x_series(x, t, K), y, t);
}

double exp2_tail_bound(int K) {
  constexpr double pi = std::numbers::pi;
  return 4.0 / (pi * pi * pi * static_cast<double>(K) * K);
}

int HeatSeriesReference::auto_terms(double t) {
  int K = 4000;
  if (t >= 1e-5) return K;
  while (exp2_tail_bound(K) > 1e-10) K *= 2;
  return K;
}

PointState HeatSeriesReference::operator()(Point x, double t) const {
  return assemble_state(memo_x_series(x.x, t, terms(t)), x.y, t);
}

ExactFn HeatSeriesReference::as_function() const {
  const HeatSeriesReference self = *this;
  return [self](Point x, double t) { return self(x, t); };
}

std::vector<double> eoc(const std::vector<double>& errors, const std::vector<double>& hs) {
  if (errors.size() != hs.size() || errors.size() < 2)
    throw ArgumentError("eoc needs two sequences of equal length >= 2");
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!(errors[i] > 0.0) || !(hs[i] > 0.0)) throw ArgumentError("eoc needs positive entries");
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (hs[i] == hs[i + 1]) throw ArgumentError("eoc needs distinct mesh sizes");
    r.push_back(std::log(errors[i] / errors[i + 1]) / std::log(hs[i] / hs[i + 1]));
  }
  return r;
}

RateFit exp_rate_fit(const std::vector<double>& errors, const std::vector<double>& dofs,
                     double exponent) {
  if (errors.size() != dofs.size()) throw ArgumentError("fit needs sequences of equal length");
  for (std::size_t i = 0; i < errors.size(); ++i)
    if (!(errors[i] > 0.0) || !(dofs[i] > 0.0)) throw ArgumentError("fit needs positive entries");
  RateFit fit;
  const std::size_t n = errors.size();
  if (n == 0) {
    fit.degenerate = true;
    return fit;
  }
  std::vector<double> xs(n), ys(n);
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = std::pow(dofs[i], exponent);
    ys[i] = std::log(errors[i]);
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  const double xscale = std::max(1.0, std::abs(mx));
  const double yscale = std::max(1.0, std::abs(my));
  const bool flat_x = sxx <= 1e-24 * xscale * xscale;
  const bool flat_y = syy <= 1e-24 * yscale * yscale;
  fit.degenerate = n < 3 || flat_x || flat_y;
  if (flat_x) {
    fit.intercept = my;
    return fit;
  }
  fit.slope = flat_y ? 0.0 : sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.r2 = flat_y ? 1.0 : sxy * sxy / (sxx * syy);
  return fit;
}

const char* ErrorTable::header() { return "level,h,tau,p,q,dof_x,dof_t,err_X,err_E,err_H1_T,eoc_X,eoc_H1T"; }

namespace {

std::vector<double> column_eoc(const std::vector<ErrorRow>& rows, double ErrorRow::*field) {
  std::vector<double> r;
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    const double a = rows[i].*field, b = rows[i + 1].*field;
    if (a > 0.0 && b > 0.0 && rows[i].h != rows[i + 1].h)
      r.push_back(std::log(a / b) / std::log(rows[i].h / rows[i + 1].h));
    else
      r.push_back(std::nan(""));
  }
  return r;
}

std::string fmt(double v) {
  if (std::isnan(v)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

std::vector<double> ErrorTable::eoc_X() const { return column_eoc(rows, &ErrorRow::err_X); }
std::vector<double> ErrorTable::eoc_H1T() const { return column_eoc(rows, &ErrorRow::err_H1_T); }

void ErrorTable::write_csv(std::ostream& out) const {
  out << header() << '\n';
  const std::vector<double> ex = eoc_X();
  const std::vector<double> eh = eoc_H1T();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const ErrorRow& r = rows[i];
    out << r.level << ',' << fmt(r.h) << ',' << fmt(r.tau) << ',' << r.p << ',' << r.q << ','
        << r.dof_x << ',' << r.dof_t << ',' << fmt(r.err_X) << ',' << fmt(r.err_E) << ','
        << fmt(r.err_H1_T) << ',' << (i > 0 ? fmt(ex[i - 1]) : "") << ','
        << (i > 0 ? fmt(eh[i - 1]) : "") << '\n';
  }
}

}  // namespace sthjb
