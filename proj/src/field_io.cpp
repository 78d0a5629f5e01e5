#include "nodal/field_io.hpp"

#include "nodal/errors.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

namespace nodal {

std::string sha256_hex(const std::string& bytes) {
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest, &len) != 1)
    throw IntegrityError("SHA-256 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IntegrityError("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string sha256_file(const std::string& path) { return sha256_hex(read_text(path)); }

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw IntegrityError("cannot write " + path);
}

std::string dump_json(const nlohmann::json& j) { return j.dump(2) + "\n"; }

namespace {

void put(std::string& s, double x) {
  char buf[40];
  const int n = std::snprintf(buf, sizeof buf, "%.17g", x);
  s.append(buf, static_cast<std::size_t>(n));
}

FieldFiles finish(const std::string& stem, const std::string& csv, nlohmann::json sidecar) {
  FieldFiles f{stem + ".csv", stem + ".json"};
  write_text(f.csv, csv);
  sidecar["csv_sha256"] = sha256_hex(csv);
  write_text(f.json, dump_json(sidecar));
  return f;
}

}  // namespace

FieldFiles write_field(const std::string& stem, const WeightedMesh& mesh, const Vector& values,
                       const nlohmann::json& meta) {
  if (values.size() != mesh.node_count()) throw DomainError("field does not match the mesh");
  std::string csv = "index,radius,rho,theta,y_norm,weight,dirichlet,value\n";
  for (int i = 0; i < mesh.node_count(); ++i) {
    const auto& p = mesh.points()[static_cast<std::size_t>(i)];
    csv += std::to_string(i);
    for (double x : {p.radius, p.rho, p.theta, p.y_norm, mesh.weights()[i]}) {
      csv += ',';
      put(csv, x);
    }
    csv += mesh.is_dirichlet(i) ? ",1," : ",0,";
    put(csv, values[i]);
    csv += '\n';
  }
  nlohmann::json sidecar;
  sidecar["meta"] = meta;
  sidecar["mesh"] = {{"kind", mesh.is_radial() ? "radial" : "sector3d"},
                     {"N", mesh.dimension()},
                     {"nodes", mesh.node_count()},
                     {"radial_nodes", mesh.radii().size()},
                     {"inner", mesh.inner_radius()},
                     {"outer", mesh.outer_radius()},
                     {"n_fold", mesh.n_fold()},
                     {"n_phi", mesh.n_phi()},
                     {"n_theta", mesh.n_theta()}};
  return finish(stem, csv, std::move(sidecar));
}

FieldFiles write_profile(const std::string& stem, const std::vector<double>& radii,
                         const std::vector<double>& values, const nlohmann::json& meta) {
  if (radii.size() != values.size()) throw DomainError("profile radii and values differ in length");
  std::string csv = "radius,value\n";
  for (std::size_t i = 0; i < radii.size(); ++i) {
    put(csv, radii[i]);
    csv += ',';
    put(csv, values[i]);
    csv += '\n';
  }
  nlohmann::json sidecar;
  sidecar["meta"] = meta;
  sidecar["profile"] = {{"points", radii.size()}};
  return finish(stem, csv, std::move(sidecar));
}

const std::vector<double>& FieldData::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return columns[i];
  throw DomainError("field has no column " + name);
}

FieldData read_field(const std::string& stem) {
  const std::string csv = read_text(stem + ".csv");
  FieldData d;
  nlohmann::json sidecar;
  try {
    sidecar = nlohmann::json::parse(read_text(stem + ".json"));
  } catch (const nlohmann::json::exception& e) {
    throw IntegrityError("unreadable sidecar " + stem + ".json: " + e.what());
  }
  if (!sidecar.contains("csv_sha256") || sidecar["csv_sha256"] != sha256_hex(csv))
    throw IntegrityError("field file " + stem + ".csv does not match its recorded hash");
  d.meta = sidecar["meta"];
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  {
    std::istringstream h(line);
    std::string name;
    while (std::getline(h, name, ',')) d.header.push_back(name);
  }
  d.columns.resize(d.header.size());
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (std::size_t c = 0; c < d.header.size(); ++c) {
      if (!std::getline(row, cell, ',')) throw IntegrityError("short row in " + stem + ".csv");
      double x = 0.0;
      const auto r = std::from_chars(cell.data(), cell.data() + cell.size(), x);
      if (r.ec != std::errc()) throw IntegrityError("malformed number in " + stem + ".csv");
      d.columns[c].push_back(x);
    }
  }
  return d;
}

}  // namespace nodal
