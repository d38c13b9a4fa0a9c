#include "polyvem/errors.hpp"
#include "polyvem/mesh.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace polyvem {

namespace {

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

// One vertex or cell per line so that diffs stay readable.
std::string mesh_to_json(const PolyMesh& mesh) {
  std::ostringstream out;
  out << "{\n\"vertices\": [\n";
  const auto vertices = mesh.vertices();
  for (std::size_t i = 0; i < vertices.size(); ++i) {
    out << "[" << format_double(vertices[i].x()) << ", " << format_double(vertices[i].y()) << "]";
    out << (i + 1 < vertices.size() ? ",\n" : "\n");
  }
  out << "],\n\"cells\": [\n";
  const auto cells = mesh.cells();
  for (std::size_t c = 0; c < cells.size(); ++c) {
    out << "[";
    for (std::size_t i = 0; i < cells[c].size(); ++i) out << (i ? ", " : "") << cells[c][i];
    out << "]" << (c + 1 < cells.size() ? ",\n" : "\n");
  }
  out << "]\n}\n";
  return out.str();
}

PolyMesh mesh_from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("mesh file is not valid JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("vertices") || !doc.contains("cells"))
    throw ParseError("mesh file must be an object with \"vertices\" and \"cells\"");
  const auto& jv = doc["vertices"];
  const auto& jc = doc["cells"];
  if (!jv.is_array() || !jc.is_array()) throw ParseError("\"vertices\" and \"cells\" must be arrays");

  std::vector<Vec2> vertices;
  vertices.reserve(jv.size());
  for (std::size_t i = 0; i < jv.size(); ++i) {
    const auto& p = jv[i];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw ParseError("vertex " + std::to_string(i) + " must be a pair of numbers");
    vertices.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  std::vector<std::vector<int>> cells;
  cells.reserve(jc.size());
  for (std::size_t c = 0; c < jc.size(); ++c) {
    const auto& cell = jc[c];
    if (!cell.is_array()) throw ParseError("cell " + std::to_string(c) + " must be an array of vertex indices");
    std::vector<int> ids;
    for (const auto& v : cell) {
      if (!v.is_number_integer()) throw ParseError("cell " + std::to_string(c) + " has a non-integer vertex index");
      const auto id = v.get<long long>();
      if (id < 0 || id >= static_cast<long long>(vertices.size()))
        throw TopologyError("cell " + std::to_string(c) + " references vertex index " + std::to_string(id) +
                            " out of range [0, " + std::to_string(vertices.size()) + ")");
      ids.push_back(static_cast<int>(id));
    }
    cells.push_back(std::move(ids));
  }
  return PolyMesh(std::move(vertices), std::move(cells));
}

void save_mesh(const PolyMesh& mesh, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path.string() + "' for writing");
  out << mesh_to_json(mesh);
  if (!out) throw ParseError("failed writing '" + path.string() + "'");
}

PolyMesh load_mesh(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open mesh file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return mesh_from_json(buf.str());
}

}  // namespace polyvem
