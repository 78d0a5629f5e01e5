#pragma once

#include "nodal/mesh.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace nodal {

std::string sha256_hex(const std::string& bytes);
/// Throws IntegrityError when the file cannot be read.
std::string sha256_file(const std::string& path);

/// Writes text exactly (no locale, no newline translation).
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Canonical JSON text: sorted keys, two-space indent, trailing newline.
std::string dump_json(const nlohmann::json& j);

/// Nodal values on a mesh as `<stem>.csv` (17 significant digits, one row
/// per node with its reduced coordinates and weight) plus `<stem>.json`
/// holding `meta`, the mesh summary and the CSV's SHA-256.
struct FieldFiles {
  std::string csv;
  std::string json;
};
FieldFiles write_field(const std::string& stem, const WeightedMesh& mesh, const Vector& values,
                       const nlohmann::json& meta);

/// Radial profile (r_i, u_i) with the same sidecar layout.
FieldFiles write_profile(const std::string& stem, const std::vector<double>& radii,
                         const std::vector<double>& values, const nlohmann::json& meta);

struct FieldData {
  std::vector<std::vector<double>> columns;
  std::vector<std::string> header;
  nlohmann::json meta;
  const std::vector<double>& column(const std::string& name) const;
};

/// Reads `<stem>.csv` and its sidecar; IntegrityError when the CSV does not
/// match the recorded hash.
FieldData read_field(const std::string& stem);

}  // namespace nodal
