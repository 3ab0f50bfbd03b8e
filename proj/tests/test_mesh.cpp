#include <doctest.h>

#include <cmath>
#include <sstream>

#include "sthjb/errors.hpp"
#include "sthjb/mesh.hpp"

using namespace sthjb;

namespace {

double total_area(const Mesh2D& m) {
  double a = 0.0;
  for (int k = 0; k < m.n_elements(); ++k) a += m.area(k);
  return a;
}

void check_faces(const Mesh2D& m) {
  for (const Face& f : m.faces()) {
    CHECK(std::hypot(f.normal.x, f.normal.y) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(f.length > 0.0);
    const Point mid{0.5 * (f.a.x + f.b.x), 0.5 * (f.a.y + f.b.y)};
    const Point c = m.centroid(f.k_ext);
    // outward for k_ext: the centroid lies behind the face
    CHECK((mid.x - c.x) * f.normal.x + (mid.y - c.y) * f.normal.y > 0.0);
    if (f.interior()) {
      CHECK((f.normal.x > 0.0 || f.normal.y > 0.0));
      const Point ci = m.centroid(f.k_int);
      CHECK((mid.x - ci.x) * f.normal.x + (mid.y - ci.y) * f.normal.y < 0.0);
    }
  }
}

}  // namespace

TEST_CASE("uniform k=1 has 4 elements, 4 interior and 8 boundary faces") {
  const Mesh2D m = build_uniform_quad_mesh(1);
  CHECK(m.n_elements() == 4);
  CHECK(m.n_interior_faces() == 4);
  CHECK(m.n_boundary_faces() == 8);
  CHECK(m.faces().size() == 12);
  for (int k = 0; k < 4; ++k) CHECK(m.diameter(k) == doctest::Approx(std::sqrt(2.0) / 2));
  check_faces(m);
}

TEST_CASE("uniform k=2 has 16 elements of width 0.25") {
  const Mesh2D m = build_uniform_quad_mesh(2);
  CHECK(m.n_elements() == 16);
  for (int k = 0; k < m.n_elements(); ++k) {
    CHECK(m.width(k) == 0.25);
    CHECK(m.height(k) == 0.25);
  }
  CHECK(m.h() == doctest::Approx(0.25 * std::sqrt(2.0)));
  CHECK(std::abs(total_area(m) - 1.0) < 1e-12);
  check_faces(m);
}

TEST_CASE("single element has 4 boundary faces and no interior ones") {
  const Mesh2D m({Cell{0.0, 0.0, 1.0, 1.0, 0}});
  CHECK(m.n_interior_faces() == 0);
  CHECK(m.n_boundary_faces() == 4);
  check_faces(m);
}

TEST_CASE("graded meshes") {
  CHECK(build_graded_quad_mesh(1).n_elements() == 4);

  const Mesh2D m2 = build_graded_quad_mesh(2);
  CHECK(m2.n_elements() == 16);
  for (const Face& f : m2.faces())
    if (f.interior()) CHECK(m2.width(f.k_ext) == m2.width(f.k_int));

  const Mesh2D m3 = build_graded_quad_mesh(3);
  CHECK(m3.n_elements() == 4 + 12 * 4);
  int hanging = 0;
  for (const Face& f : m3.faces()) {
    if (!f.interior()) continue;
    const double wa = m3.width(f.k_ext), wb = m3.width(f.k_int);
    CHECK(std::max(wa, wb) / std::min(wa, wb) <= 2.0);
    if (wa != wb) {
      ++hanging;
      // the face is the fine side
      CHECK(f.length == doctest::Approx(std::min(wa, wb)));
    }
  }
  // each of the 4 interior cells has 2 coarse sides facing the ring, split in 2
  CHECK(hanging == 16);

  for (int levels = 1; levels <= 5; ++levels) {
    const Mesh2D m = build_graded_quad_mesh(levels);
    CHECK(std::abs(total_area(m) - 1.0) < 1e-12);
    for (int k = 0; k < m.n_elements(); ++k) CHECK(m.faces_of_element(k) <= 6);
    check_faces(m);
  }
}

TEST_CASE("face extraction is deterministic") {
  const Mesh2D a = build_graded_quad_mesh(4);
  const Mesh2D b = build_graded_quad_mesh(4);
  std::ostringstream da, db;
  write_mesh_dump(da, a);
  write_mesh_dump(db, b);
  CHECK(da.str() == db.str());
  CHECK(da.str().find("boundary") != std::string::npos);
}

TEST_CASE("penalty geometry takes min h and max p on interior faces") {
  const Mesh2D m({Cell{0.0, 0.0, 0.5, 1.0, 0}, Cell{0.5, 0.0, 1.0, 1.0, 0}});
  const std::vector<int> p{2, 3};
  for (const Face& f : m.faces()) {
    const PenaltyGeometry g = face_penalty_geometry(m, f, p);
    if (f.interior()) {
      CHECK(g.h_tilde == doctest::Approx(std::hypot(0.5, 1.0)));
      CHECK(g.p_tilde == 3);
    } else {
      CHECK(g.h_tilde == m.diameter(f.k_ext));
      CHECK(g.p_tilde == p[f.k_ext]);
    }
  }

  const Mesh2D g3 = build_graded_quad_mesh(3);
  std::vector<int> deg(g3.n_elements());
  for (int k = 0; k < g3.n_elements(); ++k) deg[k] = g3.cell(k).level == 1 ? 2 : 3;
  for (const Face& f : g3.faces()) {
    if (!f.interior() || g3.width(f.k_ext) == g3.width(f.k_int)) continue;
    const PenaltyGeometry g = face_penalty_geometry(g3, f, deg);
    CHECK(g.h_tilde == std::min(g3.diameter(f.k_ext), g3.diameter(f.k_int)));
    CHECK(g.p_tilde == 3);
  }
}

TEST_CASE("equal neighbours give their common h and p") {
  const Mesh2D m = build_uniform_quad_mesh(2);
  const std::vector<int> p(m.n_elements(), 4);
  for (const Face& f : m.faces()) {
    const PenaltyGeometry g = face_penalty_geometry(m, f, p);
    CHECK(g.h_tilde == doctest::Approx(0.25 * std::sqrt(2.0)));
    CHECK(g.p_tilde == 4);
  }
}

TEST_CASE("invalid tilings are rejected") {
  CHECK_THROWS_AS(Mesh2D({Cell{0.0, 0.0, 0.5, 1.0, 0}}), StructuralError);
  CHECK_THROWS_AS(Mesh2D({Cell{0.0, 0.0, 1.0, 1.0, 0}, Cell{0.0, 0.0, 0.5, 0.5, 1}}), StructuralError);
  // a 4:1 size jump is deeper than one hanging node
  std::vector<Cell> cells{{0.0, 0.0, 0.5, 1.0, 1}};
  for (int j = 0; j < 4; ++j) {
    const double y0 = j * 0.25;
    cells.push_back({0.5, y0, 0.75, y0 + 0.25, 2});
    cells.push_back({0.75, y0, 1.0, y0 + 0.25, 2});
  }
  CHECK_THROWS_AS(Mesh2D{cells}, StructuralError);
  CHECK_THROWS_AS(build_uniform_quad_mesh(0), ConfigError);
}
