#include "sthjb/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <ostream>
#include <string>

#include "sthjb/errors.hpp"

namespace sthjb {

namespace {

constexpr int kMaxUniformLevel = 10;

struct Segment {
  double lo, hi;
  int cell;
};

// One family of parallel lines. `before` holds cells whose max side lies on
// the line, `after` cells whose min side does.
struct LineSides {
  std::vector<Segment> before;
  std::vector<Segment> after;
};

void match_line(double coord, LineSides& sides, bool vertical, std::vector<Face>& faces) {
  auto by_lo = [](const Segment& a, const Segment& b) { return a.lo < b.lo; };
  std::sort(sides.before.begin(), sides.before.end(), by_lo);
  std::sort(sides.after.begin(), sides.after.end(), by_lo);

  const Point plus = vertical ? Point{1.0, 0.0} : Point{0.0, 1.0};
  const Point minus = {-plus.x, -plus.y};
  auto endpoint = [&](double along) {
    return vertical ? Point{coord, along} : Point{along, coord};
  };

  if (coord == 0.0 || coord == 1.0) {
    if (coord == 0.0 && !sides.before.empty())
      throw StructuralError("cell extends outside the unit square");
    if (coord == 1.0 && !sides.after.empty())
      throw StructuralError("cell extends outside the unit square");
    const auto& segs = coord == 0.0 ? sides.after : sides.before;
    double covered = 0.0;
    for (const auto& s : segs) {
      Face f;
      f.kind = FaceKind::boundary;
      f.normal = coord == 0.0 ? minus : plus;
      f.k_ext = s.cell;
      f.k_int = -1;
      f.a = endpoint(s.lo);
      f.b = endpoint(s.hi);
      f.length = s.hi - s.lo;
      covered += f.length;
      faces.push_back(f);
    }
    if (std::abs(covered - 1.0) > 1e-12)
      throw StructuralError("boundary line " + std::to_string(coord) + " not fully covered");
    return;
  }

  std::vector<int> pieces_before(sides.before.size(), 0);
  std::vector<int> pieces_after(sides.after.size(), 0);
  double overlap_total = 0.0;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < sides.before.size() && j < sides.after.size()) {
    const Segment& l = sides.before[i];
    const Segment& r = sides.after[j];
    const double lo = std::max(l.lo, r.lo);
    const double hi = std::min(l.hi, r.hi);
    if (hi > lo) {
      const bool full_left = lo == l.lo && hi == l.hi;
      const bool full_right = lo == r.lo && hi == r.hi;
      if (!full_left && !full_right)
        throw StructuralError("facet overlap is not a full side of either neighbour");
      Face f;
      f.kind = FaceKind::interior;
      f.normal = plus;
      f.k_ext = l.cell;
      f.k_int = r.cell;
      f.a = endpoint(lo);
      f.b = endpoint(hi);
      f.length = hi - lo;
      overlap_total += f.length;
      faces.push_back(f);
      ++pieces_before[i];
      ++pieces_after[j];
    }
    if (l.hi < r.hi) {
      ++i;
    } else if (r.hi < l.hi) {
      ++j;
    } else {
      ++i;
      ++j;
    }
  }
  double len_before = 0.0;
  double len_after = 0.0;
  for (const auto& s : sides.before) len_before += s.hi - s.lo;
  for (const auto& s : sides.after) len_after += s.hi - s.lo;
  if (std::abs(overlap_total - len_before) > 1e-12 || std::abs(overlap_total - len_after) > 1e-12)
    throw StructuralError("unmatched element side on line " + std::to_string(coord));
  for (int c : pieces_before)
    if (c > 2) throw StructuralError("hanging-node depth exceeds one");
  for (int c : pieces_after)
    if (c > 2) throw StructuralError("hanging-node depth exceeds one");
}

bool touches_boundary(const Cell& c) {
  return c.x0 == 0.0 || c.y0 == 0.0 || c.x1 == 1.0 || c.y1 == 1.0;
}

void split(const Cell& c, std::vector<Cell>& out) {
  const double xm = 0.5 * (c.x0 + c.x1);
  const double ym = 0.5 * (c.y0 + c.y1);
  out.push_back({c.x0, c.y0, xm, ym, c.level + 1});
  out.push_back({xm, c.y0, c.x1, ym, c.level + 1});
  out.push_back({c.x0, ym, xm, c.y1, c.level + 1});
  out.push_back({xm, ym, c.x1, c.y1, c.level + 1});
}

}  // namespace

std::vector<Face> extract_faces(std::span<const Cell> cells) {
  std::map<double, LineSides> vertical;
  std::map<double, LineSides> horizontal;
  for (int k = 0; k < static_cast<int>(cells.size()); ++k) {
    const Cell& c = cells[k];
    vertical[c.x1].before.push_back({c.y0, c.y1, k});
    vertical[c.x0].after.push_back({c.y0, c.y1, k});
    horizontal[c.y1].before.push_back({c.x0, c.x1, k});
    horizontal[c.y0].after.push_back({c.x0, c.x1, k});
  }
  std::vector<Face> faces;
  for (auto& [x, sides] : vertical) match_line(x, sides, true, faces);
  for (auto& [y, sides] : horizontal) match_line(y, sides, false, faces);
  return faces;
}

Mesh2D::Mesh2D(std::vector<Cell> cells) : cells_(std::move(cells)) {
  if (cells_.empty()) throw StructuralError("mesh has no cells");
  double area_sum = 0.0;
  std::map<std::pair<double, double>, int> vertex_ids;
  auto vertex = [&](double x, double y) {
    auto [it, inserted] = vertex_ids.try_emplace({x, y}, static_cast<int>(vertices_.size()));
    if (inserted) vertices_.push_back({x, y});
    return it->second;
  };
  for (const Cell& c : cells_) {
    if (!(c.x1 > c.x0 && c.y1 > c.y0))
      throw StructuralError("degenerate cell");
    if (c.x0 < 0.0 || c.y0 < 0.0 || c.x1 > 1.0 || c.y1 > 1.0)
      throw StructuralError("cell outside the unit square");
    area_sum += (c.x1 - c.x0) * (c.y1 - c.y0);
    corners_.push_back({vertex(c.x0, c.y0), vertex(c.x1, c.y0), vertex(c.x1, c.y1),
                        vertex(c.x0, c.y1)});
    diameters_.push_back(std::hypot(c.x1 - c.x0, c.y1 - c.y0));
  }
  if (std::abs(area_sum - 1.0) > 1e-12) throw StructuralError("cells do not tile the unit square");
  faces_ = extract_faces(cells_);
}

Point Mesh2D::centroid(int k) const {
  const Cell& c = cells_[k];
  return {0.5 * (c.x0 + c.x1), 0.5 * (c.y0 + c.y1)};
}

double Mesh2D::h() const { return *std::max_element(diameters_.begin(), diameters_.end()); }

int Mesh2D::n_interior_faces() const {
  return static_cast<int>(
      std::count_if(faces_.begin(), faces_.end(), [](const Face& f) { return f.interior(); }));
}

int Mesh2D::n_boundary_faces() const {
  return static_cast<int>(faces_.size()) - n_interior_faces();
}

int Mesh2D::faces_of_element(int k) const {
  return static_cast<int>(std::count_if(faces_.begin(), faces_.end(), [k](const Face& f) {
    return f.k_ext == k || f.k_int == k;
  }));
}

Mesh2D build_uniform_quad_mesh(int k) {
  if (k < 1) throw ConfigError("uniform mesh level must be >= 1");
  if (k > kMaxUniformLevel)
    throw ConfigError("uniform mesh level " + std::to_string(k) + " exceeds the memory guard");
  const int n = 1 << k;
  const double w = 1.0 / n;
  std::vector<Cell> cells;
  cells.reserve(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      cells.push_back({i * w, j * w, (i + 1) * w, (j + 1) * w, k - 1});
  return Mesh2D(std::move(cells));
}

Mesh2D build_graded_quad_mesh(int levels) {
  if (levels < 1) throw ConfigError("graded mesh levels must be >= 1");
  if (levels > kMaxUniformLevel) throw ConfigError("graded mesh levels exceed the memory guard");
  std::vector<Cell> cells = {
      {0.0, 0.0, 0.5, 0.5, 0}, {0.5, 0.0, 1.0, 0.5, 0}, {0.0, 0.5, 0.5, 1.0, 0}, {0.5, 0.5, 1.0, 1.0, 0}};
  for (int pass = 1; pass < levels; ++pass) {
    std::vector<Cell> next;
    for (const Cell& c : cells) {
      if (touches_boundary(c))
        split(c, next);
      else
        next.push_back(c);
    }
    cells = std::move(next);
  }
  return Mesh2D(std::move(cells));
}

PenaltyGeometry face_penalty_geometry(const Mesh2D& mesh, const Face& face,
                                      std::span<const int> degrees) {
  if (face.interior()) {
    return {std::min(mesh.diameter(face.k_ext), mesh.diameter(face.k_int)),
            std::max(degrees[face.k_ext], degrees[face.k_int])};
  }
  return {mesh.diameter(face.k_ext), degrees[face.k_ext]};
}

void write_mesh_dump(std::ostream& out, const Mesh2D& mesh) {
  const auto old_precision = out.precision(17);
  for (int k = 0; k < mesh.n_elements(); ++k) {
    const Cell& c = mesh.cell(k);
    out << k << ' ' << c.x0 << ' ' << c.y0 << ' ' << c.x1 << ' ' << c.y1 << ' ' << c.level << '\n';
  }
  int id = 0;
  for (const Face& f : mesh.faces()) {
    out << id++ << ' ' << (f.interior() ? "interior" : "boundary") << ' ' << f.k_ext << ' '
        << f.k_int << ' ' << f.normal.x << ' ' << f.normal.y << ' ' << f.a.x << ' ' << f.a.y
        << ' ' << f.b.x << ' ' << f.b.y << '\n';
  }
  out.precision(old_precision);
}

}  // namespace sthjb
