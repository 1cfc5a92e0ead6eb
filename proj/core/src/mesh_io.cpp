//
// Project     : gcah2
// Module      : mesh_io.cpp
// Description : reading and writing the mesh text format
//

#include "gcah2/mesh_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>

namespace gcah2 {

namespace {

// 17 significant digits round-trip every double
void put(std::ostream& out, double x) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof(buf), x, std::chars_format::general, 17);
  out.write(buf, res.ptr - buf);
}

void put(std::ostream& out, const Vec3& x) {
  put(out, x[0]);
  out << ' ';
  put(out, x[1]);
  out << ' ';
  put(out, x[2]);
  out << '\n';
}

void write_plane_part(std::ostream& out, const TriangleMesh& mesh) {
  out << mesh.vertex_count() << ' ' << mesh.triangle_count() << ' ' << mesh.edge_count() << '\n';
  for (const auto& v : mesh.vertices()) put(out, v);
  for (const auto& t : mesh.triangles()) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  for (const auto& e : mesh.edges()) out << e.a << ' ' << e.b << '\n';
}

//
// line reader: skips blank lines, keeps physical line numbers
//
class LineReader {
 public:
  explicit LineReader(std::istream& in) : in_(in) {}

  // next non-blank line, split into tokens; false at end of input
  bool next(std::vector<std::string>& tokens) {
    std::string line;
    while (std::getline(in_, line)) {
      ++line_;
      tokens.clear();
      std::istringstream ss(line);
      for (std::string tok; ss >> tok;) tokens.push_back(tok);
      if (!tokens.empty()) return true;
    }
    return false;
  }

  std::vector<std::string> expect(std::size_t count, const char* what) {
    std::vector<std::string> tokens;
    if (!next(tokens)) throw ParseError(std::string("unexpected end of file, expected ") + what, line_ + 1);
    if (tokens.size() != count)
      throw ParseError(std::string("expected ") + std::to_string(count) + " fields for " + what + ", got " +
                           std::to_string(tokens.size()),
                       line_);
    return tokens;
  }

  std::size_t line() const { return line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
};

template <typename T>
T parse_number(const std::string& tok, std::size_t line, const char* what) {
  T value{};
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw ParseError(std::string("malformed ") + what + " '" + tok + "'", line);
  return value;
}

Vec3 parse_vec3(const std::vector<std::string>& tok, std::size_t line) {
  return Vec3(parse_number<double>(tok[0], line, "coordinate"), parse_number<double>(tok[1], line, "coordinate"),
              parse_number<double>(tok[2], line, "coordinate"));
}

}  // namespace

void write_mesh(std::ostream& out, const TriangleMesh& mesh) { write_plane_part(out, mesh); }

void write_mesh(std::ostream& out, const CurvedTriangleMesh& mesh) {
  write_plane_part(out, mesh.base());
  for (const auto& m : mesh.midpoints()) put(out, m);
}

void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_mesh(out, mesh);
}

void write_mesh(const std::filesystem::path& path, const CurvedTriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_mesh(out, mesh);
}

AnyMesh read_mesh(std::istream& in) {
  LineReader reader(in);

  const auto header = reader.expect(3, "header 'nv nt ne'");
  const std::size_t header_line = reader.line();
  const auto nv = parse_number<long long>(header[0], header_line, "vertex count");
  const auto nt = parse_number<long long>(header[1], header_line, "triangle count");
  const auto ne = parse_number<long long>(header[2], header_line, "edge count");
  if (nv < 3 || nt < 1 || ne < 3) throw ParseError("counts must be positive (nv >= 3, nt >= 1, ne >= 3)", header_line);
  if (2 * ne != 3 * nt) throw ParseError("edge count inconsistent with a closed triangulation (2 ne != 3 nt)", header_line);

  std::vector<Vec3> vertices(nv);
  for (auto& v : vertices) v = parse_vec3(reader.expect(3, "vertex"), reader.line());

  std::vector<Triangle> triangles(nt);
  std::vector<std::size_t> triangle_line(nt);
  for (long long t = 0; t < nt; ++t) {
    const auto tok = reader.expect(3, "triangle");
    triangle_line[t] = reader.line();
    for (int k = 0; k < 3; ++k) {
      const auto idx = parse_number<long long>(tok[k], reader.line(), "vertex index");
      if (idx < 0 || idx >= nv)
        throw ParseError("vertex index " + std::to_string(idx) + " out of range [0," + std::to_string(nv) + ")",
                         reader.line());
      triangles[t][k] = static_cast<Index>(idx);
    }
  }

  std::vector<Edge> edges(ne);
  std::vector<std::size_t> edge_line(ne);
  for (long long e = 0; e < ne; ++e) {
    const auto tok = reader.expect(2, "edge");
    edge_line[e] = reader.line();
    const auto a = parse_number<long long>(tok[0], reader.line(), "vertex index");
    const auto b = parse_number<long long>(tok[1], reader.line(), "vertex index");
    if (a < 0 || b < 0 || a >= nv || b >= nv) throw ParseError("edge endpoint out of range", reader.line());
    if (a >= b) throw ParseError("edge endpoints must satisfy a < b", reader.line());
    edges[e] = {static_cast<Index>(a), static_cast<Index>(b)};
  }

  std::optional<TriangleMesh> mesh;
  try {
    mesh.emplace(std::move(vertices), std::move(triangles));
  } catch (const MeshError& err) {
    const std::size_t line = err.triangle != none ? triangle_line[err.triangle] : header_line;
    throw ParseError(err.what(), line);
  }

  // file edges must be exactly the derived edges; midpoints follow the file order
  std::vector<Index> edge_map(ne);
  std::vector<char> seen(ne, 0);
  for (long long e = 0; e < ne; ++e) {
    const Index k = mesh->find_edge(edges[e].a, edges[e].b);
    if (k == none) throw ParseError("edge is not an edge of the triangulation", edge_line[e]);
    if (seen[k]) throw ParseError("duplicate edge", edge_line[e]);
    seen[k] = 1;
    edge_map[e] = k;
  }

  std::vector<std::string> tok;
  if (!reader.next(tok)) return std::move(*mesh);

  std::vector<Vec3> midpoints(ne);
  for (long long e = 0; e < ne; ++e) {
    if (e > 0) tok = reader.expect(3, "edge midpoint");
    else if (tok.size() != 3) throw ParseError("expected 3 fields for edge midpoint", reader.line());
    midpoints[edge_map[e]] = parse_vec3(tok, reader.line());
  }
  if (reader.next(tok)) throw ParseError("trailing data after the midpoint section", reader.line());
  return CurvedTriangleMesh(std::move(*mesh), std::move(midpoints));
}

AnyMesh read_mesh(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return read_mesh(in);
}

CurvedTriangleMesh as_curved(const AnyMesh& mesh) {
  if (const auto* curved = std::get_if<CurvedTriangleMesh>(&mesh)) return *curved;
  return to_curved(std::get<TriangleMesh>(mesh), false);
}

bool is_curved(const AnyMesh& mesh) { return std::holds_alternative<CurvedTriangleMesh>(mesh); }

}  // namespace gcah2
