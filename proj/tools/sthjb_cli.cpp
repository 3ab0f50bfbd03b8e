#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "sthjb/errors.hpp"
#include "sthjb/experiments.hpp"
#include "sthjb/parallel.hpp"

using namespace sthjb;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<int> threads;
  bool allow_large = false;
};

RunConfig resolve(const Options& o) {
  RunConfig c;
  if (!o.config_path.empty()) c = load_config(o.config_path);
  if (o.out_dir) c.out_dir = *o.out_dir;
  if (o.threads) c.threads = *o.threads;
  if (o.allow_large) c.allow_large = true;
  c.validate();
  set_thread_count(c.threads);
  return c;
}

fs::path prepare_out(const RunConfig& c) {
  const fs::path dir(c.out_dir);
  fs::create_directories(dir);
  std::ofstream(dir / "config.ini") << normalized(c);
  return dir;
}

template <class Writer>
void write_file(const fs::path& path, Writer&& write) {
  std::ofstream f(path);
  if (!f) throw ConfigError("cannot write " + path.string());
  write(f);
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

int cmd_verify_cordes(const Options& o) {
  const RunConfig c = resolve(o);
  const HJBProblem problem = problem_from(c);
  try {
    const CordesReport r = verify_cordes(problem);
    std::cout << "problem " << problem.key << " controls " << problem.n_controls << " omega "
              << fmt(problem.omega) << '\n'
              << "epsilon_min = " << fmt(r.epsilon) << " (raw " << fmt(r.epsilon_raw) << ")\n"
              << "witness x = (" << fmt(r.witness_x.x) << ", " << fmt(r.witness_x.y) << ") t = "
              << fmt(r.witness_t) << " control = " << r.witness_control << '\n'
              << "samples = " << r.samples << '\n';
  } catch (const CordesViolation& e) {
    std::cerr << "Cordes condition violated: " << e.what() << '\n';
    return 1;
  } catch (const DataError& e) {
    std::cerr << "coefficient data rejected: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

int cmd_solve(const Options& o) {
  const RunConfig c = resolve(o);
  const fs::path dir = prepare_out(c);
  const HJBProblem problem = problem_from(c);
  const double T = final_time_from(c, problem);
  const TimePartition partition = partition_from(c, c.intervals, T);
  const Discretisation disc(problem, space_from(c, mesh_from(c, c.mesh_level)), c.penalty);
  const SolutionHistory h = march(disc, partition, c.solver);

  write_file(dir / "solution.chk", [&](std::ostream& f) { write_checkpoint(f, disc.space(), h); });
  std::ofstream summary(dir / "summary.txt");
  auto both = [&](const std::string& line) {
    std::cout << line << '\n';
    summary << line << '\n';
  };
  both("problem " + problem.key + " dof_x " + std::to_string(disc.space().dim()) + " dof_t " +
       std::to_string(partition.temporal_dofs()) + " slabs " + std::to_string(partition.n_intervals()));
  for (std::size_t n = 0; n < h.stats.size(); ++n)
    both("slab " + std::to_string(n + 1) + " t " + fmt(partition.t[n + 1]) + " iterations " +
         std::to_string(h.stats[n].iterations) + " residual " + fmt(h.stats[n].residual) +
         (h.stats[n].restarted ? " restarted" : ""));
  if (problem.exact || problem.key == "exp2-heat") {
    const ExactFn ref = reference_for(problem);
    const double eX = norm_X(disc.space(), partition, problem.omega, &h.u, &ref) /
                      norm_X(disc.space(), partition, problem.omega, nullptr, &ref);
    const double eE = norm_E(disc, partition, &h.u, &ref) / norm_E(disc, partition, nullptr, &ref);
    both("err_X " + fmt(eX) + " err_E " + fmt(eE) + (eE <= 1e-8 ? " exact" : ""));
  }
  return 0;
}

int cmd_convergence(const Options& o) {
  const RunConfig c = resolve(o);
  const fs::path dir = prepare_out(c);
  std::cerr << "level,h,dof_x,dof_t,err_X,err_E,err_H1_T\n";
  const ErrorTable t = run_convergence(c, [](const ErrorRow& r) {
    std::cerr << r.level << ',' << fmt(r.h) << ',' << r.dof_x << ',' << r.dof_t << ',' << fmt(r.err_X)
              << ',' << fmt(r.err_E) << ',' << fmt(r.err_H1_T) << std::endl;
  });
  write_file(dir / "convergence.csv", [&](std::ostream& f) { t.write_csv(f); });
  t.write_csv(std::cout);
  std::vector<double> lh, lx, lh1;
  for (const ErrorRow& r : t.rows) {
    lh.push_back(std::log(r.h));
    lx.push_back(std::log(r.err_X));
    lh1.push_back(std::log(r.err_H1_T));
  }
  write_file(dir / "convergence_X.dat", [&](std::ostream& f) { write_plot_data(f, lh, lx); });
  write_file(dir / "convergence_H1T.dat", [&](std::ostream& f) { write_plot_data(f, lh, lh1); });
  bool exact = !t.rows.empty();
  for (const ErrorRow& r : t.rows) exact = exact && r.err_E <= 1e-8;
  if (exact) std::cout << "exact\n";
  return 0;
}

int cmd_tauq(const Options& o) {
  const RunConfig c = resolve(o);
  const fs::path dir = prepare_out(c);
  const TauqResult r = run_tauq(c, [](const TauqRow& row) {
    std::cerr << "N " << row.n_intervals << " dof_x " << row.dof_x << " dof_t " << row.dof_t << " err_X "
              << fmt(row.err_X) << " err_L2H1 " << fmt(row.err_L2H1) << std::endl;
  });
  write_file(dir / "tauq.csv", [&](std::ostream& f) { write_tauq_csv(f, r); });
  write_tauq_csv(std::cout, r);
  std::vector<double> s, lx, lh;
  for (const TauqRow& row : r.rows) {
    s.push_back(std::sqrt(static_cast<double>(row.dof_t)));
    lx.push_back(std::log(row.err_X));
    lh.push_back(std::log(row.err_L2H1));
  }
  write_file(dir / "tauq_X.dat", [&](std::ostream& f) { write_plot_data(f, s, lx); });
  write_file(dir / "tauq_L2H1.dat", [&](std::ostream& f) { write_plot_data(f, s, lh); });
  auto report = [](const char* name, const RateFit& f) {
    std::cout << "fit " << name << " slope " << fmt(f.slope) << " r2 " << fmt(f.r2)
              << (f.degenerate ? " degenerate" : "") << '\n';
  };
  report("err_X", r.fit_X);
  report("err_L2H1", r.fit_L2H1);
  if (r.nonmonotone_steps > 0)
    std::cout << "nonmonotone steps in err_X: " << r.nonmonotone_steps
              << (r.monotone_ok() ? " (within tolerance)" : " (exceeds tolerance)") << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Space-time DG solver for parabolic HJB equations"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "INI run manifest")->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "output directory");
    sub->add_option("--threads", o.threads, "worker threads (0 = auto)");
  };
  CLI::App* verify = app.add_subcommand("verify-cordes", "sampled Cordes slack of the problem");
  CLI::App* solve = app.add_subcommand("solve", "one run; writes a checkpoint and summary");
  CLI::App* conv = app.add_subcommand("convergence", "h-refinement sweep with EOC table");
  CLI::App* tauq = app.add_subcommand("tauq", "geometric tau-q sweep with exponential fit");
  for (CLI::App* sub : {verify, solve, conv, tauq}) add_common(sub);
  conv->add_flag("--allow-large", o.allow_large, "lift the desk-scale level cap");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*verify) return cmd_verify_cordes(o);
    if (*solve) return cmd_solve(o);
    if (*conv) return cmd_convergence(o);
    return cmd_tauq(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ArgumentError& e) {
    std::cerr << "argument error: " << e.what() << '\n';
    return 2;
  } catch (const SolverError& e) {
    std::cerr << "solver failed: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
