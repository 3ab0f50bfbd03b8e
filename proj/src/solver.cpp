#include "sthjb/solver.hpp"

#include <Eigen/UmfPackSupport>
#include <cmath>
#include <iomanip>
#include <limits>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "sthjb/errors.hpp"

namespace sthjb {

void SolverConfig::validate() const {
  if (!(newton_tol > 0.0)) throw ConfigError("newton_tol must be positive");
  if (max_newton_iters < 1) throw ConfigError("max_newton_iters must be at least 1");
}

Discretisation::Discretisation(HJBProblem problem, DGSpace space, PenaltyParams penalty)
    : problem_(std::move(problem)), space_(std::move(space)), penalty_(penalty) {
  penalties_ = build_penalty_table(space_, penalty_, problem_.lambda);
  ops_ = assemble_spatial_operators(space_, penalties_, problem_.lambda);
  tables_ = tabulate_all_elements(space_);
}

SlabSystem Discretisation::slab(const TimePartition& partition, int n) const {
  return SlabSystem(problem_, space_, ops_, tables_, partition.t[n], partition.tau(n), partition.q[n]);
}

namespace {

class UmfPack : public Eigen::UmfPackLU<SparseMatrix> {
 public:
  /// Raw UMFPACK status of the last numeric factorization.
  int status() const { return m_fact_errorCode; }
};

/// Frozen-policy matrix M stored as S M S with S = diag(|M_ii|^{-1/2}),
/// factorized on demand.
class FrozenSystem {
 public:
  explicit FrozenSystem(int slab) : slab_(slab) {}

  void release() { scaled_ = SparseMatrix(); }

  void set(SparseMatrix&& m) {
    scale_.resize(m.rows());
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      const double d = std::abs(m.coeff(i, i));
      scale_[i] = d > 0.0 ? 1.0 / std::sqrt(d) : 1.0;
    }
    for (int c = 0; c < m.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(m, c); it; ++it) it.valueRef() *= scale_[it.row()] * scale_[c];
    scaled_ = std::move(m);
    factorized_ = false;
  }

  /// M u and |M| |u|.
  Eigen::VectorXd apply(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd y = scaled_ * u.cwiseQuotient(scale_);
    return y.cwiseQuotient(scale_);
  }
  Eigen::VectorXd apply_abs(const Eigen::VectorXd& u) const {
    const Eigen::VectorXd x = u.cwiseAbs().cwiseQuotient(scale_);
    Eigen::VectorXd y = Eigen::VectorXd::Zero(u.size());
    for (int c = 0; c < scaled_.outerSize(); ++c)
      for (SparseMatrix::InnerIterator it(scaled_, c); it; ++it) y[it.row()] += std::abs(it.value()) * x[c];
    return y.cwiseQuotient(scale_);
  }

  Eigen::VectorXd solve(const Eigen::VectorXd& b, const std::vector<double>& history) {
    if (!factorized_) factorize(history);
    const Eigen::VectorXd sb = scale_.cwiseProduct(b);
    const Eigen::VectorXd y = lu_.solve(sb);
    return scale_.cwiseProduct(y);
  }

 private:
  void factorize(const std::vector<double>& history) {
    if (!analysed_) {
      lu_.analyzePattern(scaled_);
      analysed_ = true;
    }
    lu_.factorize(scaled_);
    // Determinant under/overflow (2, 3) is only a warning.
    const int code = lu_.status();
    if (code == 1) throw SolverError("singular slab matrix in slab " + std::to_string(slab_), slab_, history);
    if (code < 0)
      throw SolverError("sparse factorization failed in slab " + std::to_string(slab_) + " (UMFPACK status " +
                            std::to_string(code) + ")",
                        slab_, history);
    factorized_ = true;
  }

  int slab_;
  bool analysed_ = false;
  bool factorized_ = false;
  Eigen::VectorXd scale_;
  SparseMatrix scaled_;
  UmfPack lu_;
};

}  // namespace

SlabResult solve_slab(const SlabSystem& system, const Eigen::VectorXd& rhs,
                      const PolicyField& initial_policy, const SolverConfig& config, int slab) {
  config.validate();
  SlabResult out;
  SlabStats& st = out.stats;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(system.size());

  FrozenSystem frozen(slab);
  Eigen::VectorXd load;
  PolicyField policy = initial_policy;
  auto freeze = [&] {
    frozen.release();
    SparseMatrix m;
    system.assemble(policy, m, load);
    frozen.set(std::move(m));
  };
  freeze();
  int increases = 0;
  double last = std::numeric_limits<double>::infinity();

  for (int it = 1; it <= config.max_newton_iters; ++it) {
    u -= frozen.solve(frozen.apply(u) + load - rhs, st.history);
    if (!u.allFinite())
      throw SolverError("non-finite iterate in slab " + std::to_string(slab), slab, st.history);

    PolicyField next = system.policy(u);
    if (!(next == policy)) {
      policy = std::move(next);
      freeze();
    }
    const double scale = (rhs - load).norm() + frozen.apply_abs(u).norm();
    const double r = (frozen.apply(u) + load - rhs).norm();
    const double rel = scale > 0.0 ? r / scale : 0.0;
    st.history.push_back(rel);
    st.iterations = it;
    st.residual = rel;
    if (rel <= config.newton_tol) {
      out.coeffs = std::move(u);
      return out;
    }
    increases = rel > last ? increases + 1 : 0;
    last = rel;
    if (increases >= 3 && !st.restarted) {
      st.restarted = true;
      increases = 0;
      last = std::numeric_limits<double>::infinity();
      u.setZero();
      policy = initial_policy;
      freeze();
    }
  }
  std::ostringstream msg;
  msg << "policy iteration did not converge in slab " << slab << " after "
      << config.max_newton_iters << " iterations (relative residual " << st.residual << ")";
  throw SolverError(msg.str(), slab, st.history);
}

SolutionHistory march(const Discretisation& disc, const TimePartition& partition,
                      const SolverConfig& config) {
  config.validate();
  const HJBProblem& problem = disc.problem();
  const int dim = disc.space().dim();
  SolutionHistory h;
  h.partition = partition;
  Eigen::VectorXd prev;
  for (int n = 0; n < partition.n_intervals(); ++n) {
    const SlabSystem sys = disc.slab(partition, n);
    Eigen::VectorXd rhs;
    PolicyField guess;
    if (n == 0) {
      rhs = sys.rhs_from_functional(
          a_h_load(disc.space(), disc.penalties(), problem.lambda, problem.initial));
      guess = sys.policy_from_initial(problem.initial);
    } else {
      rhs = sys.rhs_from_trace(prev);
      Eigen::VectorXd constant = Eigen::VectorXd::Zero(sys.size());
      constant.head(dim) = prev;
      guess = sys.policy(constant);
    }
    SlabResult r;
    try {
      r = solve_slab(sys, rhs, guess, config, n + 1);
    } catch (const SolverError& e) {
      throw SolverError(std::string(e.what()) + " at t = " + std::to_string(partition.t[n + 1]),
                        n + 1, e.residuals());
    }
    prev = sys.end_trace(r.coeffs);
    h.end_traces.push_back(prev);
    h.stats.push_back(std::move(r.stats));
    h.u.blocks.push_back(std::move(r.coeffs));
  }
  return h;
}

std::uint64_t space_hash(const DGSpace& space) {
  std::uint64_t hash = 1469598103934665603ULL;
  auto mix = [&hash](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      hash ^= p[i];
      hash *= 1099511628211ULL;
    }
  };
  const Mesh2D& mesh = space.mesh();
  for (int k = 0; k < mesh.n_elements(); ++k) {
    const Cell& c = mesh.cell(k);
    const double box[4] = {c.x0, c.y0, c.x1, c.y1};
    mix(box, sizeof box);
    const int p = space.degree(k);
    mix(&p, sizeof p);
  }
  return hash;
}

void write_checkpoint(std::ostream& out, const DGSpace& space, const SolutionHistory& history) {
  const int dim = space.dim();
  out << "sthjb-checkpoint " << std::hex << space_hash(space) << std::dec << ' '
      << history.u.blocks.size() << '\n';
  out << std::setprecision(17);
  for (std::size_t n = 0; n < history.u.blocks.size(); ++n) {
    const Eigen::VectorXd& b = history.u.blocks[n];
    out << n + 1 << ' ' << history.partition.q[n] << ' ' << dim << '\n';
    for (Eigen::Index i = 0; i < b.size(); ++i) out << b[i] << (i + 1 == b.size() ? '\n' : ' ');
  }
}

SpaceTimeFunction read_checkpoint(std::istream& in, const DGSpace& space) {
  std::string tag;
  std::uint64_t hash = 0;
  std::size_t n_slabs = 0;
  in >> tag >> std::hex >> hash >> std::dec >> n_slabs;
  if (!in || tag != "sthjb-checkpoint") throw ConfigError("not a checkpoint file");
  if (hash != space_hash(space)) throw ConfigError("checkpoint was written for a different space");
  SpaceTimeFunction u;
  for (std::size_t s = 0; s < n_slabs; ++s) {
    std::size_t n = 0;
    int q = 0, dim = 0;
    in >> n >> q >> dim;
    if (!in || n != s + 1 || q < 0 || dim != space.dim())
      throw ConfigError("malformed checkpoint block " + std::to_string(s + 1));
    Eigen::VectorXd b((q + 1) * dim);
    for (Eigen::Index i = 0; i < b.size(); ++i) in >> b[i];
    if (!in) throw ConfigError("truncated checkpoint block " + std::to_string(s + 1));
    u.blocks.push_back(std::move(b));
  }
  return u;
}

}  // namespace sthjb
