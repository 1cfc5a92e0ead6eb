#pragma once
//
// Project     : gcah2
// Module      : mesh_io.hpp
// Description : text format for plane and curved meshes
//
// Layout (whitespace separated, 0-based indices, one item per line):
//
//   nv nt ne
//   x y z        nv lines
//   i j k        nt lines, counterclockwise w.r.t. the outward normal
//   a b          ne lines, a < b
//   mx my mz     ne lines, curved meshes only
//

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "gcah2/geometry.hpp"

namespace gcah2 {

using AnyMesh = std::variant<TriangleMesh, CurvedTriangleMesh>;

void write_mesh(std::ostream& out, const TriangleMesh& mesh);
void write_mesh(std::ostream& out, const CurvedTriangleMesh& mesh);
void write_mesh(const std::filesystem::path& path, const TriangleMesh& mesh);
void write_mesh(const std::filesystem::path& path, const CurvedTriangleMesh& mesh);

// throws ParseError carrying the offending line number
AnyMesh read_mesh(std::istream& in);
AnyMesh read_mesh(const std::filesystem::path& path);

// plane meshes are lifted to the affine curved representation
CurvedTriangleMesh as_curved(const AnyMesh& mesh);
bool is_curved(const AnyMesh& mesh);

}  // namespace gcah2
