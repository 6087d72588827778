#include "lodgp/lod_cache.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace lodgp
{

namespace
{

constexpr char kMagic[8] = {'L', 'O', 'D', 'G', 'P', 'C', '0', '1'};

template <class T>
void put(std::ostream &os, const T &v)
{
   os.write(reinterpret_cast<const char *>(&v), sizeof(T));
}

template <class T>
void put_array(std::ostream &os, const T *data, std::uint64_t n)
{
   put(os, n);
   if (n > 0) { os.write(reinterpret_cast<const char *>(data), static_cast<std::streamsize>(n * sizeof(T))); }
}

template <class T>
T get(std::istream &is)
{
   T v{};
   if (!is.read(reinterpret_cast<char *>(&v), sizeof(T))) { throw CacheError("truncated cache file"); }
   return v;
}

template <class T>
std::vector<T> get_array(std::istream &is, std::uint64_t limit)
{
   const auto n = get<std::uint64_t>(is);
   if (n > limit) { throw CacheError("cache array size out of range"); }
   std::vector<T> v(n);
   if (n > 0 && !is.read(reinterpret_cast<char *>(v.data()), static_cast<std::streamsize>(n * sizeof(T))))
   {
      throw CacheError("truncated cache file");
   }
   return v;
}

void put_sparse(std::ostream &os, const SparseMatrix &A)
{
   put<std::int64_t>(os, A.rows());
   put<std::int64_t>(os, A.cols());
   put_array(os, A.outerIndexPtr(), static_cast<std::uint64_t>(A.outerSize() + 1));
   put_array(os, A.innerIndexPtr(), static_cast<std::uint64_t>(A.nonZeros()));
   put_array(os, A.valuePtr(), static_cast<std::uint64_t>(A.nonZeros()));
}

SparseMatrix get_sparse(std::istream &is, std::uint64_t limit)
{
   const auto rows = get<std::int64_t>(is);
   const auto cols = get<std::int64_t>(is);
   if (rows < 0 || cols < 0 || static_cast<std::uint64_t>(rows) > limit || static_cast<std::uint64_t>(cols) > limit)
   {
      throw CacheError("cache matrix dimensions out of range");
   }
   const auto outer = get_array<int>(is, limit);
   const auto inner = get_array<int>(is, limit);
   const auto vals = get_array<double>(is, limit);
   if (outer.size() != static_cast<std::size_t>(rows + 1) || inner.size() != vals.size() ||
       outer.back() != static_cast<int>(inner.size()))
   {
      throw CacheError("inconsistent cached sparse matrix");
   }
   SparseMatrix A(rows, cols);
   A.resizeNonZeros(static_cast<Eigen::Index>(vals.size()));
   std::memcpy(A.outerIndexPtr(), outer.data(), outer.size() * sizeof(int));
   if (!inner.empty())
   {
      std::memcpy(A.innerIndexPtr(), inner.data(), inner.size() * sizeof(int));
      std::memcpy(A.valuePtr(), vals.data(), vals.size() * sizeof(double));
   }
   return A;
}

std::string fmt(double v)
{
   char buf[32];
   std::snprintf(buf, sizeof buf, "%.17g", v);
   return buf;
}

} // namespace

std::string cache_key(const MeshPair &pair, const BilinearFormChoice &form, int ell,
                      const QuadratureRule &tensor_rule)
{
   const SimplicialMesh &C = pair.coarse;
   std::ostringstream os;
   os << "dim=" << C.dim;
   for (int a = 0; a < C.dim; ++a)
   {
      os << ";box" << a << "=" << fmt(C.lower[a]) << ":" << fmt(C.upper[a]) << ";cells" << a << "=" << C.cells[a];
   }
   os << ";factor=" << pair.refinement_factor << ";ell=" << ell << ";form=" << form.label
      << ";diffusion=" << fmt(form.diffusion_factor) << ";vdeg=" << form.potential_degree
      << ";tensor_degree=" << tensor_rule.degree_exact << ";tensor_points=" << tensor_rule.size();
   return os.str();
}

std::string cache_file_name(const std::string &key)
{
   std::uint64_t h = 14695981039346656037ULL;
   for (unsigned char c : key)
   {
      h ^= c;
      h *= 1099511628211ULL;
   }
   char buf[17];
   std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
   return std::string(buf) + ".lodc";
}

void save_lod_space(const LodSpace &lod, const std::string &key, const std::string &path)
{
   const std::string tmp = path + ".tmp";
   {
      std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
      if (!os) { throw CacheError("cannot write cache file " + tmp); }
      os.write(kMagic, sizeof kMagic);
      put<std::uint32_t>(os, kCacheVersion);
      put_array(os, key.data(), key.size());
      put_sparse(os, lod.P);
      put_sparse(os, lod.Q);
      put_sparse(os, lod.Phi);
      const TriTensor &w = lod.omega;
      put<std::int64_t>(os, w.n);
      put_array(os, w.Iptr.data(), w.Iptr.size());
      put_array(os, w.J.data(), w.J.size());
      put_array(os, w.K.data(), w.K.size());
      put_array(os, w.V.data(), w.V.size());
      if (!os) { throw CacheError("failed writing cache file " + tmp); }
   }
   std::filesystem::rename(tmp, path);
}

std::optional<LodSpace> load_lod_space(std::shared_ptr<const MeshPair> pair, const BilinearFormChoice &form,
                                       int ell, const std::string &key, const std::string &path)
{
   std::ifstream is(path, std::ios::binary);
   if (!is) { return std::nullopt; }
   char magic[8];
   if (!is.read(magic, sizeof magic) || std::memcmp(magic, kMagic, sizeof magic) != 0)
   {
      throw CacheError("bad cache magic in " + path);
   }
   if (get<std::uint32_t>(is) != kCacheVersion) { throw CacheError("unsupported cache version in " + path); }
   const auto kbytes = get_array<char>(is, 1 << 20);
   if (std::string(kbytes.begin(), kbytes.end()) != key) { return std::nullopt; }

   const std::uint64_t limit = std::uint64_t(1) << 40;
   LodSpace L;
   L.pair = std::move(pair);
   L.ell = ell;
   L.form = form;
   L.P = get_sparse(is, limit);
   L.Q = get_sparse(is, limit);
   L.Phi = get_sparse(is, limit);
   const int NH = L.pair->coarse.num_dofs();
   const int Nh = L.pair->fine.num_dofs();
   for (const SparseMatrix *A : {&L.P, &L.Q, &L.Phi})
   {
      if (A->rows() != NH || A->cols() != Nh) { throw CacheError("cached matrix does not fit the mesh pair"); }
   }
   TriTensor &w = L.omega;
   w.n = static_cast<int>(get<std::int64_t>(is));
   w.Iptr = get_array<std::int64_t>(is, limit);
   w.J = get_array<int>(is, limit);
   w.K = get_array<int>(is, limit);
   w.V = get_array<double>(is, limit);
   if (w.n != NH || w.Iptr.size() != static_cast<std::size_t>(NH + 1) || w.J.size() != w.K.size() ||
       w.J.size() != w.V.size() || w.Iptr.back() != static_cast<std::int64_t>(w.J.size()))
   {
      throw CacheError("inconsistent cached tensor");
   }
   fill_fine_matrices(L);
   fill_lod_matrices(L);
   return L;
}

LodSpace build_or_load_lod_space(std::shared_ptr<const MeshPair> pair, const BilinearFormChoice &form,
                                 int ell, const QuadratureRule &tensor_rule, const std::string &dir,
                                 bool *loaded)
{
   if (loaded) { *loaded = false; }
   if (dir.empty()) { return build_lod_space(pair, form, ell, tensor_rule); }
   const std::string key = cache_key(*pair, form, ell, tensor_rule);
   std::filesystem::create_directories(dir);
   const std::string path = (std::filesystem::path(dir) / cache_file_name(key)).string();
   if (auto hit = load_lod_space(pair, form, ell, key, path))
   {
      if (loaded) { *loaded = true; }
      return std::move(*hit);
   }
   LodSpace L = build_lod_space(pair, form, ell, tensor_rule);
   save_lod_space(L, key, path);
   return L;
}

} // namespace lodgp
