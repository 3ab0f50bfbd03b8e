#pragma once

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

namespace sthjb {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Axis-aligned rectangle [x0,x1] x [y0,y1] with its refinement level.
struct Cell {
  double x0, y0, x1, y1;
  int level = 0;
};

enum class FaceKind { interior, boundary };

/// A flat mesh facet. For interior faces the normal points in +x or +y and is
/// outward for k_ext, inward for k_int. Boundary faces carry the outward
/// normal of their single element k_ext (k_int == -1).
struct Face {
  FaceKind kind = FaceKind::boundary;
  Point normal;
  int k_ext = -1;
  int k_int = -1;
  Point a;
  Point b;
  double length = 0.0;

  bool interior() const { return kind == FaceKind::interior; }
  /// Unit tangent, the normal rotated by +90 degrees.
  Point tangent() const { return {-normal.y, normal.x}; }
};

struct PenaltyGeometry {
  double h_tilde;
  int p_tilde;
};

/// Quadrilateral mesh of the unit square made of axis-aligned rectangles,
/// at most 1-irregular. Immutable once built.
class Mesh2D {
 public:
  /// Builds a mesh from cells; validates the tiling and extracts faces.
  explicit Mesh2D(std::vector<Cell> cells);

  int n_elements() const { return static_cast<int>(cells_.size()); }
  const Cell& cell(int k) const { return cells_[k]; }
  std::span<const Cell> cells() const { return cells_; }
  std::span<const Point> vertices() const { return vertices_; }
  const std::array<int, 4>& corners(int k) const { return corners_[k]; }
  std::span<const Face> faces() const { return faces_; }

  /// h_K, the diagonal of the rectangle.
  double diameter(int k) const { return diameters_[k]; }
  double width(int k) const { return cells_[k].x1 - cells_[k].x0; }
  double height(int k) const { return cells_[k].y1 - cells_[k].y0; }
  double area(int k) const { return width(k) * height(k); }
  Point centroid(int k) const;
  /// Max over elements of h_K.
  double h() const;

  int n_interior_faces() const;
  int n_boundary_faces() const;
  /// Number of faces on the boundary of element k.
  int faces_of_element(int k) const;

 private:
  std::vector<Cell> cells_;
  std::vector<Point> vertices_;
  std::vector<std::array<int, 4>> corners_;
  std::vector<double> diameters_;
  std::vector<Face> faces_;
};

/// Regular 2^k x 2^k subdivision of (0,1)^2.
Mesh2D build_uniform_quad_mesh(int k);

/// Start from the 2x2 partition and split every element touching the
/// boundary, levels-1 times.
Mesh2D build_graded_quad_mesh(int levels);

/// Fine-side facets of the cell tiling with the deterministic normal
/// convention. Throws StructuralError on gaps, overlaps or hanging-node depth > 1.
std::vector<Face> extract_faces(std::span<const Cell> cells);

/// (h~_F, p~_F): min/max over the two neighbours for interior faces.
PenaltyGeometry face_penalty_geometry(const Mesh2D& mesh, const Face& face,
                                      std::span<const int> degrees);

/// Debug dump: "id x0 y0 x1 y1 level" per element, then
/// "id kind kext kint nx ny x0 y0 x1 y1" per face.
void write_mesh_dump(std::ostream& out, const Mesh2D& mesh);

}  // namespace sthjb
