#pragma once

#include "lodgp/lod.hpp"

#include <optional>
#include <string>

namespace lodgp
{

/// Binary cache of P, Q, Phi and omega. A file starts with the magic
/// "LODGPC01", a format version and the full key string; loading verifies
/// all three and recomputes the Galerkin matrices from Phi.
inline constexpr std::uint32_t kCacheVersion = 1;

/// Key covering the domain, mesh sizes, ell, form label and tensor rule.
std::string cache_key(const MeshPair &pair, const BilinearFormChoice &form, int ell,
                      const QuadratureRule &tensor_rule);

/// 64-bit FNV-1a of the key, as 16 hex digits.
std::string cache_file_name(const std::string &key);

void save_lod_space(const LodSpace &lod, const std::string &key, const std::string &path);

/// Empty when the file does not exist or belongs to another key; throws
/// CacheError on a corrupt or truncated file.
std::optional<LodSpace> load_lod_space(std::shared_ptr<const MeshPair> pair, const BilinearFormChoice &form,
                                       int ell, const std::string &key, const std::string &path);

/// Loads from `dir` when present, otherwise builds and stores. An empty
/// directory disables the cache.
LodSpace build_or_load_lod_space(std::shared_ptr<const MeshPair> pair, const BilinearFormChoice &form,
                                 int ell, const QuadratureRule &tensor_rule, const std::string &dir,
                                 bool *loaded = nullptr);

} // namespace lodgp
