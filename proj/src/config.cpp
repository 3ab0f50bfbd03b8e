#include "sthjb/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sthjb/errors.hpp"

namespace sthjb {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>>& schema() {
  static const std::map<std::string, std::set<std::string>> s = {
      {"problem", {"key", "controls", "omega", "lambda", "final_time"}},
      {"mesh", {"kind", "level"}},
      {"degree", {"kind", "p", "slope"}},
      {"time", {"partition", "intervals", "sigma", "q_rule", "q"}},
      {"penalty", {"c_s", "sigma"}},
      {"solver", {"newton_tol", "max_newton_iters"}},
      {"sweep", {"min", "max", "refine_time", "grade_with_n", "allow_large"}},
      {"output", {"dir", "threads"}},
  };
  return s;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::string source) : tree_(tree), source_(std::move(source)) {}

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw ConfigError(source_ + ": " + key + ": " + what);
  }

  const std::string* raw(const std::string& key) const {
    const auto node = tree_.get_child_optional(pt::ptree::path_type(key, '.'));
    return node ? &node->data() : nullptr;
  }

  void get(const std::string& key, std::string& out) const {
    if (const std::string* v = raw(key)) out = *v;
  }

  void get(const std::string& key, int& out) const {
    const std::string* v = raw(key);
    if (!v) return;
    int x = 0;
    const auto [ptr, ec] = std::from_chars(v->data(), v->data() + v->size(), x);
    if (ec != std::errc() || ptr != v->data() + v->size()) fail(key, "expected an integer, got '" + *v + "'");
    out = x;
  }

  void get(const std::string& key, double& out) const {
    const std::string* v = raw(key);
    if (!v) return;
    std::istringstream is(*v);
    double x = 0.0;
    is >> x;
    if (!is || !is.eof()) fail(key, "expected a number, got '" + *v + "'");
    out = x;
  }

  void get(const std::string& key, bool& out) const {
    const std::string* v = raw(key);
    if (!v) return;
    if (*v == "true") out = true;
    else if (*v == "false") out = false;
    else fail(key, "expected true or false, got '" + *v + "'");
  }

  template <class E>
  void get_enum(const std::string& key, E& out, std::initializer_list<std::pair<const char*, E>> names) const {
    const std::string* v = raw(key);
    if (!v) return;
    for (const auto& [name, value] : names)
      if (*v == name) {
        out = value;
        return;
      }
    std::string allowed;
    for (const auto& n : names) allowed += std::string(allowed.empty() ? "" : "|") + n.first;
    fail(key, "expected " + allowed + ", got '" + *v + "'");
  }

 private:
  const pt::ptree& tree_;
  std::string source_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const char* name(MeshKind k) { return k == MeshKind::uniform ? "uniform" : "graded"; }
const char* name(DegreeKind k) { return k == DegreeKind::constant ? "constant" : "graded"; }
const char* name(PartitionKind k) { return k == PartitionKind::uniform ? "uniform" : "geometric"; }
const char* name(DegreeRule k) { return k == DegreeRule::constant ? "constant" : "linear"; }
const char* name(bool b) { return b ? "true" : "false"; }

}  // namespace

void RunConfig::validate() const {
  bool known = false;
  for (const std::string& k : problem_keys()) known = known || k == problem;
  if (!known) throw ConfigError("problem.key: unknown problem '" + problem + "'");
  if (controls < 1) throw ConfigError("problem.controls must be >= 1");
  if (!(omega > 0.0)) throw ConfigError("problem.omega must be positive");
  if (!(lambda >= 0.0)) throw ConfigError("problem.lambda must be nonnegative");
  if (!(final_time >= 0.0)) throw ConfigError("problem.final_time must be nonnegative");
  if (mesh_level < 1 || mesh_level > 10) throw ConfigError("mesh.level must be in 1..10");
  if (p < 2) throw ConfigError("degree.p must be >= 2");
  if (p_slope < 0) throw ConfigError("degree.slope must be >= 0");
  if (intervals < 1) throw ConfigError("time.intervals must be >= 1");
  if (!(time_sigma > 0.0 && time_sigma < 1.0)) throw ConfigError("time.sigma must lie in (0,1)");
  if (q < 1) throw ConfigError("time.q must be >= 1");
  if (!(penalty.c_s > 0.0)) throw ConfigError("penalty.c_s must be positive");
  if (!(penalty.sigma >= 1.0)) throw ConfigError("penalty.sigma must be >= 1");
  try {
    solver.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(std::string("solver.") + e.what());
  }
  if (sweep_min < 1 || sweep_max < sweep_min) throw ConfigError("sweep: need 1 <= min <= max");
  if (threads < 0) throw ConfigError("output.threads must be >= 0");
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  pt::ptree tree;
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    const auto it = schema().find(section);
    if (it == schema().end()) {
      if (body.empty()) throw ConfigError(source + ": key '" + section + "' outside a section");
      throw ConfigError(source + ": unknown section [" + section + "]");
    }
    for (const auto& entry : body)
      if (!it->second.count(entry.first))
        throw ConfigError(source + ": unknown key '" + entry.first + "' in [" + section + "]");
  }
  const Reader r(tree, source);
  RunConfig c;
  r.get("problem.key", c.problem);
  r.get("problem.controls", c.controls);
  r.get("problem.omega", c.omega);
  r.get("problem.lambda", c.lambda);
  r.get("problem.final_time", c.final_time);
  r.get_enum("mesh.kind", c.mesh, {{"uniform", MeshKind::uniform}, {"graded", MeshKind::graded}});
  r.get("mesh.level", c.mesh_level);
  r.get_enum("degree.kind", c.degree, {{"constant", DegreeKind::constant}, {"graded", DegreeKind::graded}});
  r.get("degree.p", c.p);
  r.get("degree.slope", c.p_slope);
  r.get_enum("time.partition", c.partition,
             {{"uniform", PartitionKind::uniform}, {"geometric", PartitionKind::geometric}});
  r.get("time.intervals", c.intervals);
  r.get("time.sigma", c.time_sigma);
  r.get_enum("time.q_rule", c.q_rule, {{"constant", DegreeRule::constant}, {"linear", DegreeRule::linear}});
  r.get("time.q", c.q);
  r.get("penalty.c_s", c.penalty.c_s);
  r.get("penalty.sigma", c.penalty.sigma);
  r.get("solver.newton_tol", c.solver.newton_tol);
  r.get("solver.max_newton_iters", c.solver.max_newton_iters);
  r.get("sweep.min", c.sweep_min);
  r.get("sweep.max", c.sweep_max);
  r.get("sweep.refine_time", c.refine_time);
  r.get("sweep.grade_with_n", c.grade_with_n);
  r.get("sweep.allow_large", c.allow_large);
  r.get("output.dir", c.out_dir);
  r.get("output.threads", c.threads);
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  return parse_config(in, path);
}

std::string normalized(const RunConfig& c) {
  std::ostringstream o;
  o << "[problem]\n"
    << "key = " << c.problem << '\n'
    << "controls = " << c.controls << '\n'
    << "omega = " << num(c.omega) << '\n'
    << "lambda = " << num(c.lambda) << '\n'
    << "final_time = " << num(c.final_time) << "\n\n"
    << "[mesh]\n"
    << "kind = " << name(c.mesh) << '\n'
    << "level = " << c.mesh_level << "\n\n"
    << "[degree]\n"
    << "kind = " << name(c.degree) << '\n'
    << "p = " << c.p << '\n'
    << "slope = " << c.p_slope << "\n\n"
    << "[time]\n"
    << "partition = " << name(c.partition) << '\n'
    << "intervals = " << c.intervals << '\n'
    << "sigma = " << num(c.time_sigma) << '\n'
    << "q_rule = " << name(c.q_rule) << '\n'
    << "q = " << c.q << "\n\n"
    << "[penalty]\n"
    << "c_s = " << num(c.penalty.c_s) << '\n'
    << "sigma = " << num(c.penalty.sigma) << "\n\n"
    << "[solver]\n"
    << "newton_tol = " << num(c.solver.newton_tol) << '\n'
    << "max_newton_iters = " << c.solver.max_newton_iters << "\n\n"
    << "[sweep]\n"
    << "min = " << c.sweep_min << '\n'
    << "max = " << c.sweep_max << '\n'
    << "refine_time = " << name(c.refine_time) << '\n'
    << "grade_with_n = " << name(c.grade_with_n) << '\n'
    << "allow_large = " << name(c.allow_large) << "\n\n"
    << "[output]\n"
    << "dir = " << c.out_dir << '\n'
    << "threads = " << c.threads << '\n';
  return o.str();
}

}  // namespace sthjb
