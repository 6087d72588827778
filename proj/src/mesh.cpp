#include "lodgp/mesh.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lodgp
{

namespace
{

constexpr int kPerms3[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                               {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
constexpr int kPerms2[2][2] = {{0, 1}, {1, 0}};

int simplices_per_cell(int dim)
{
   return dim == 1 ? 1 : (dim == 2 ? 2 : 6);
}

double signed_measure(const SimplicialMesh &m, int s)
{
   const auto &S = m.simplices[s];
   const Point &a = m.vertices[S[0]];
   if (m.dim == 1) { return m.vertices[S[1]][0] - a[0]; }
   double e[3][3] = {};
   for (int r = 0; r < m.dim; ++r)
   {
      for (int c = 0; c < m.dim; ++c) { e[r][c] = m.vertices[S[r + 1]][c] - a[c]; }
   }
   if (m.dim == 2) { return 0.5 * (e[0][0] * e[1][1] - e[0][1] * e[1][0]); }
   const double det = e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1]) -
                      e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0]) +
                      e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0]);
   return det / 6.0;
}

} // namespace

double SimplicialMesh::volume(int s) const
{
   return std::abs(signed_measure(*this, s));
}

double SimplicialMesh::box_volume() const
{
   double v = 1.0;
   for (int a = 0; a < dim; ++a) { v *= upper[a] - lower[a]; }
   return v;
}

Point SimplicialMesh::barycenter(int s) const
{
   Point c{0.0, 0.0, 0.0};
   for (int v = 0; v <= dim; ++v)
   {
      for (int a = 0; a < 3; ++a) { c[a] += vertices[simplices[s][v]][a]; }
   }
   for (int a = 0; a < 3; ++a) { c[a] /= dim + 1; }
   return c;
}

std::array<double, 4> SimplicialMesh::barycentric(int s, const Point &p) const
{
   const auto &S = simplices[s];
   const Point &x0 = vertices[S[0]];
   Eigen::Matrix3d T = Eigen::Matrix3d::Identity();
   Eigen::Vector3d r = Eigen::Vector3d::Zero();
   for (int c = 0; c < dim; ++c)
   {
      for (int a = 0; a < dim; ++a) { T(a, c) = vertices[S[c + 1]][a] - x0[a]; }
   }
   for (int a = 0; a < dim; ++a) { r(a) = p[a] - x0[a]; }
   const Eigen::Vector3d l = T.partialPivLu().solve(r);
   std::array<double, 4> lam{0.0, 0.0, 0.0, 0.0};
   double rest = 1.0;
   for (int c = 0; c < dim; ++c)
   {
      lam[c + 1] = l(c);
      rest -= l(c);
   }
   lam[0] = rest;
   return lam;
}

int SimplicialMesh::locate(const Point &p) const
{
   std::array<int, 3> c{0, 0, 0};
   std::array<double, 3> u{0.0, 0.0, 0.0};
   for (int a = 0; a < dim; ++a)
   {
      const double t = (p[a] - lower[a]) / cell_width(a);
      int ci = static_cast<int>(std::floor(t));
      ci = std::clamp(ci, 0, cells[a] - 1);
      c[a] = ci;
      u[a] = std::clamp(t - ci, 0.0, 1.0);
   }
   const int cell = c[0] + cells[0] * (c[1] + cells[1] * c[2]);
   int local = 0;
   if (dim == 2)
   {
      local = u[0] >= u[1] ? 0 : 1;
   }
   else if (dim == 3)
   {
      for (int k = 0; k < 6; ++k)
      {
         const auto &P = kPerms3[k];
         if (u[P[0]] >= u[P[1]] && u[P[1]] >= u[P[2]])
         {
            local = k;
            break;
         }
      }
   }
   return cell * simplices_per_cell(dim) + local;
}

SimplicialMesh build_box_mesh(int dim, const Point &lower, const Point &upper,
                              const std::array<int, 3> &cells_per_axis)
{
   if (dim < 1 || dim > 3) { throw InvalidDomainError("dimension must be 1, 2 or 3"); }
   SimplicialMesh m;
   m.dim = dim;
   for (int a = 0; a < dim; ++a)
   {
      if (!(upper[a] > lower[a]))
      {
         throw InvalidDomainError("box has zero or negative width along axis " +
                                  std::to_string(a));
      }
      if (cells_per_axis[a] < 1)
      {
         throw InvalidDomainError("cells_per_axis must be >= 1");
      }
      m.lower[a] = lower[a];
      m.upper[a] = upper[a];
      m.cells[a] = cells_per_axis[a];
   }

   const int nx = m.cells[0] + 1;
   const int ny = dim >= 2 ? m.cells[1] + 1 : 1;
   const int nz = dim == 3 ? m.cells[2] + 1 : 1;
   auto vid = [&](int i, int j, int k) { return i + nx * (j + ny * k); };

   m.vertices.resize(static_cast<std::size_t>(nx) * ny * nz);
   m.boundary_vertex_flags.assign(m.vertices.size(), 0);
   for (int k = 0; k < nz; ++k)
   {
      for (int j = 0; j < ny; ++j)
      {
         for (int i = 0; i < nx; ++i)
         {
            const int idx[3] = {i, j, k};
            Point x{0.0, 0.0, 0.0};
            bool bnd = false;
            for (int a = 0; a < dim; ++a)
            {
               // Endpoints are set exactly so that coarse and fine grids share coordinates.
               x[a] = idx[a] == m.cells[a]
                         ? m.upper[a]
                         : m.lower[a] + idx[a] * (m.upper[a] - m.lower[a]) / m.cells[a];
               bnd = bnd || idx[a] == 0 || idx[a] == m.cells[a];
            }
            m.vertices[vid(i, j, k)] = x;
            m.boundary_vertex_flags[vid(i, j, k)] = bnd ? 1 : 0;
         }
      }
   }

   const int cx = m.cells[0];
   const int cy = dim >= 2 ? m.cells[1] : 1;
   const int cz = dim == 3 ? m.cells[2] : 1;
   m.simplices.reserve(static_cast<std::size_t>(cx) * cy * cz * simplices_per_cell(dim));
   for (int k = 0; k < cz; ++k)
   {
      for (int j = 0; j < cy; ++j)
      {
         for (int i = 0; i < cx; ++i)
         {
            if (dim == 1)
            {
               m.simplices.push_back({vid(i, 0, 0), vid(i + 1, 0, 0), -1, -1});
            }
            else if (dim == 2)
            {
               for (const auto &P : kPerms2)
               {
                  int g[2] = {i, j};
                  std::array<int, 4> s{vid(i, j, 0), -1, -1, -1};
                  g[P[0]] += 1;
                  s[1] = vid(g[0], g[1], 0);
                  s[2] = vid(i + 1, j + 1, 0);
                  m.simplices.push_back(s);
               }
            }
            else
            {
               for (const auto &P : kPerms3)
               {
                  int g[3] = {i, j, k};
                  std::array<int, 4> s{vid(i, j, k), -1, -1, -1};
                  g[P[0]] += 1;
                  s[1] = vid(g[0], g[1], g[2]);
                  g[P[1]] += 1;
                  s[2] = vid(g[0], g[1], g[2]);
                  s[3] = vid(i + 1, j + 1, k + 1);
                  m.simplices.push_back(s);
               }
            }
         }
      }
   }
   for (int s = 0; s < m.num_simplices(); ++s)
   {
      if (dim > 1 && signed_measure(m, s) < 0.0)
      {
         std::swap(m.simplices[s][dim - 1], m.simplices[s][dim]);
      }
   }

   double h = 0.0;
   for (const auto &S : m.simplices)
   {
      for (int a = 0; a <= dim; ++a)
      {
         for (int b = a + 1; b <= dim; ++b)
         {
            double e = 0.0;
            for (int c = 0; c < dim; ++c)
            {
               const double d = m.vertices[S[a]][c] - m.vertices[S[b]][c];
               e += d * d;
            }
            h = std::max(h, std::sqrt(e));
         }
      }
   }
   m.mesh_size = h;

   m.vertex_simplices.assign(m.vertices.size(), {});
   for (int s = 0; s < m.num_simplices(); ++s)
   {
      for (int a = 0; a <= dim; ++a) { m.vertex_simplices[m.simplices[s][a]].push_back(s); }
   }
   m.element_adjacency.assign(m.simplices.size(), {});
   for (int s = 0; s < m.num_simplices(); ++s)
   {
      auto &adj = m.element_adjacency[s];
      for (int a = 0; a <= dim; ++a)
      {
         const auto &vs = m.vertex_simplices[m.simplices[s][a]];
         adj.insert(adj.end(), vs.begin(), vs.end());
      }
      std::sort(adj.begin(), adj.end());
      adj.erase(std::unique(adj.begin(), adj.end()), adj.end());
      adj.erase(std::find(adj.begin(), adj.end(), s));
   }

   m.dof_of_vertex.assign(m.vertices.size(), -1);
   for (int v = 0; v < m.num_vertices(); ++v)
   {
      if (!m.boundary_vertex_flags[v])
      {
         m.dof_of_vertex[v] = static_cast<int>(m.vertex_of_dof.size());
         m.vertex_of_dof.push_back(v);
      }
   }
   return m;
}

MeshPair refine_uniform(const SimplicialMesh &coarse, int factor)
{
   if (factor < 1) { throw InvalidDomainError("refinement factor must be >= 1"); }
   MeshPair pair;
   pair.coarse = coarse;
   pair.refinement_factor = factor;
   std::array<int, 3> cells = coarse.cells;
   for (int a = 0; a < coarse.dim; ++a) { cells[a] *= factor; }
   pair.fine = build_box_mesh(coarse.dim, coarse.lower, coarse.upper, cells);

   const SimplicialMesh &fine = pair.fine;
   pair.parent_map.resize(fine.simplices.size());
   pair.children.assign(coarse.simplices.size(), {});
   for (int s = 0; s < fine.num_simplices(); ++s)
   {
      const int K = coarse.locate(fine.barycenter(s));
      pair.parent_map[s] = K;
      pair.children[K].push_back(s);
   }

   const int cnx = coarse.cells[0] + 1;
   const int cny = coarse.dim >= 2 ? coarse.cells[1] + 1 : 1;
   const int fnx = fine.cells[0] + 1;
   const int fny = fine.dim >= 2 ? fine.cells[1] + 1 : 1;
   pair.fine_vertex_of_coarse.resize(coarse.vertices.size());
   for (int v = 0; v < coarse.num_vertices(); ++v)
   {
      const int i = v % cnx;
      const int j = (v / cnx) % cny;
      const int k = v / (cnx * cny);
      pair.fine_vertex_of_coarse[v] = i * factor + fnx * (j * factor + fny * k * factor);
   }
   return pair;
}

std::vector<int> patch(const SimplicialMesh &mesh, int K, int ell)
{
   if (K < 0 || K >= mesh.num_simplices()) { throw IndexOutOfRangeError("simplex index out of range"); }
   std::vector<char> in(mesh.simplices.size(), 0);
   std::vector<int> frontier{K};
   std::vector<int> result{K};
   in[K] = 1;
   for (int layer = 0; layer < ell && !frontier.empty(); ++layer)
   {
      std::vector<int> next;
      for (int s : frontier)
      {
         for (int t : mesh.element_adjacency[s])
         {
            if (!in[t])
            {
               in[t] = 1;
               next.push_back(t);
               result.push_back(t);
            }
         }
      }
      frontier.swap(next);
   }
   std::sort(result.begin(), result.end());
   return result;
}

std::vector<int> node_patch_support(const SimplicialMesh &mesh, int j)
{
   if (j < 0 || j >= mesh.num_vertices()) { throw IndexOutOfRangeError("vertex index out of range"); }
   if (mesh.boundary_vertex_flags[j]) { throw NoDofError("vertex " + std::to_string(j) + " lies on the boundary"); }
   return mesh.vertex_simplices[j];
}

} // namespace lodgp
