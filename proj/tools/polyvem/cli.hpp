#pragma once

#include "polyvem/mesh.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace polyvem::cli {

/// Exit codes of the command-line tool.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitNumerical = 2;

/// Parses "0.125", "1/8" or "4/10".
[[nodiscard]] double parse_length(const std::string& text);

/// --mesh argument: "family:h[:seed=S]" (seed may also be given bare) or a
/// path to a mesh JSON file.
struct MeshRef {
  std::optional<std::filesystem::path> path;
  MeshFamily family = MeshFamily::voronoi;
  double h = 0.25;
  std::uint64_t seed = 1;
};
[[nodiscard]] MeshRef parse_mesh_ref(const std::string& text);
[[nodiscard]] PolyMesh resolve_mesh(const MeshRef& ref);

/// Log-log plot of the error columns of a convergence CSV produced by
/// convergence_csv.
[[nodiscard]] std::string convergence_svg(const std::string& csv);

/// Runs the tool. Everything the caller would print goes to `out` / `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace polyvem::cli
