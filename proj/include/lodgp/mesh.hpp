#pragma once

#include "lodgp/common.hpp"

#include <array>
#include <vector>

namespace lodgp
{

/// Uniform simplicial mesh of an axis-aligned box.
///
/// Vertices are numbered lexicographically by grid index with x running
/// fastest. Simplices are numbered cell by cell in the same order; each cell
/// holds 1 (1d), 2 (2d) or 6 (3d) simplices. Interior vertices carry the
/// degrees of freedom, numbered in increasing vertex order.
struct SimplicialMesh
{
   int dim = 0;
   Point lower{0.0, 0.0, 0.0};
   Point upper{0.0, 0.0, 0.0};
   std::array<int, 3> cells{1, 1, 1};

   std::vector<Point> vertices;
   std::vector<std::array<int, 4>> simplices;   // first dim+1 entries used
   std::vector<char> boundary_vertex_flags;
   double mesh_size = 0.0;                       // longest edge
   std::vector<std::vector<int>> element_adjacency;
   std::vector<std::vector<int>> vertex_simplices;

   std::vector<int> dof_of_vertex;               // -1 on the boundary
   std::vector<int> vertex_of_dof;

   int num_vertices() const { return static_cast<int>(vertices.size()); }
   int num_simplices() const { return static_cast<int>(simplices.size()); }
   int num_dofs() const { return static_cast<int>(vertex_of_dof.size()); }
   int nodes_per_simplex() const { return dim + 1; }

   /// Grid spacing along axis a.
   double cell_width(int a) const { return (upper[a] - lower[a]) / cells[a]; }

   double volume(int s) const;
   double box_volume() const;
   Point barycenter(int s) const;

   /// Barycentric coordinates of p with respect to simplex s.
   std::array<double, 4> barycentric(int s, const Point &p) const;

   /// Index of a simplex containing p (points outside the box are clamped).
   int locate(const Point &p) const;
};

/// Coarse mesh, its uniform refinement and the fine-to-coarse parent map.
struct MeshPair
{
   SimplicialMesh coarse;
   SimplicialMesh fine;
   int refinement_factor = 1;
   std::vector<int> parent_map;                  // fine simplex -> coarse simplex
   std::vector<std::vector<int>> children;       // coarse simplex -> fine simplices
   std::vector<int> fine_vertex_of_coarse;       // coarse vertex -> fine vertex
};

SimplicialMesh build_box_mesh(int dim, const Point &lower, const Point &upper,
                              const std::array<int, 3> &cells_per_axis);

MeshPair refine_uniform(const SimplicialMesh &coarse, int factor);

/// ℓ-layer patch S_ℓ(K), sorted ascending.
std::vector<int> patch(const SimplicialMesh &mesh, int K, int ell);

/// Simplices containing vertex j; j must be interior.
std::vector<int> node_patch_support(const SimplicialMesh &mesh, int j);

} // namespace lodgp
