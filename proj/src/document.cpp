#include "parfid/document.hpp"

#include <fstream>
#include <sstream>

namespace parfid {

namespace {

using nlohmann::json;

[[noreturn]] void schema_fail(const std::string& msg) { throw SchemaError("document: " + msg); }

EntryKind parse_kind(const std::string& s, const std::string& name) {
  if (s == "form") return EntryKind::form;
  if (s == "projection") return EntryKind::projection;
  if (s == "operator") return EntryKind::operator_matrix;
  if (s == "vector") return EntryKind::vector;
  schema_fail("matrix '" + name + "' has unknown kind '" + s + "'");
}

Complex parse_complex(const json& j, const std::string& where) {
  if (j.is_number()) return Complex(j.get<double>(), 0.0);
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    schema_fail(where + ": entries must be [re, im] pairs of numbers");
  }
  return Complex(j[0].get<double>(), j[1].get<double>());
}

Matrix parse_matrix(const json& j, Eigen::Index rows, Eigen::Index cols,
                    const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != rows) {
    std::ostringstream os;
    os << where << ": expected " << rows << " rows";
    schema_fail(os.str());
  }
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const json& row = j[i];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
      std::ostringstream os;
      os << where << ": row " << i << " must have " << cols << " entries";
      schema_fail(os.str());
    }
    for (Eigen::Index k = 0; k < cols; ++k) m(i, k) = parse_complex(row[k], where);
  }
  return m;
}

BlockAlgebra parse_algebra(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) schema_fail(where + ": algebra must be a nonempty array");
  std::vector<int> dims;
  for (const json& d : j) {
    if (!d.is_number_integer() || d.get<int>() < 1) {
      schema_fail(where + ": block dimensions must be positive integers");
    }
    dims.push_back(d.get<int>());
  }
  try {
    return BlockAlgebra(dims);
  } catch (const Error& e) {
    schema_fail(where + ": " + e.what());
  }
}

}  // namespace

const char* kind_name(EntryKind kind) {
  switch (kind) {
    case EntryKind::form:
      return "form";
    case EntryKind::projection:
      return "projection";
    case EntryKind::operator_matrix:
      return "operator";
    case EntryKind::vector:
      return "vector";
  }
  return "operator";
}

json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(complex_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

json vector_to_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(complex_to_json(v(i)));
  return out;
}

void MatrixDocument::set_form(const std::string& name, const PositiveForm& form) {
  std::vector<Matrix> blocks;
  for (const HermitianMatrix& d : form.densities()) blocks.push_back(d.matrix());
  entries_[name] = {EntryKind::form, form.algebra(), std::move(blocks)};
}

void MatrixDocument::set_projection(const std::string& name, const BlockProjection& p) {
  entries_[name] = {EntryKind::projection, p.algebra(), p.to_block_matrix().blocks()};
}

void MatrixDocument::set_operator(const std::string& name, const BlockMatrix& x) {
  entries_[name] = {EntryKind::operator_matrix, x.algebra(), x.blocks()};
}

void MatrixDocument::set_vector(const std::string& name, const Vector& v) {
  entries_[name] = {EntryKind::vector, BlockAlgebra({static_cast<int>(v.size())}),
                    {Matrix(v)}};
}

void MatrixDocument::set_trace(const std::string& name, const Trace& tau) {
  traces_[name] = tau.weights();
}

void MatrixDocument::set_scalar(const std::string& name, double value) { scalars_[name] = value; }

const DocumentEntry& MatrixDocument::entry(const std::string& name, EntryKind kind) const {
  const auto it = entries_.find(name);
  if (it == entries_.end()) schema_fail("no matrix named '" + name + "'");
  if (it->second.kind != kind) {
    schema_fail("matrix '" + name + "' is a " + kind_name(it->second.kind) + ", expected a " +
                kind_name(kind));
  }
  return it->second;
}

PositiveForm MatrixDocument::form(const std::string& name) const {
  const DocumentEntry& e = entry(name, EntryKind::form);
  std::vector<HermitianMatrix> dens;
  for (const Matrix& b : e.blocks) dens.push_back(HermitianMatrix(b));
  return PositiveForm(e.algebra, std::move(dens));
}

BlockProjection MatrixDocument::projection(const std::string& name) const {
  const DocumentEntry& e = entry(name, EntryKind::projection);
  return BlockProjection::from_block_matrix(BlockMatrix(e.algebra, e.blocks));
}

BlockMatrix MatrixDocument::op(const std::string& name) const {
  const DocumentEntry& e = entry(name, EntryKind::operator_matrix);
  return BlockMatrix(e.algebra, e.blocks);
}

Vector MatrixDocument::vector(const std::string& name) const {
  return entry(name, EntryKind::vector).blocks[0].col(0);
}

Trace MatrixDocument::trace(const std::string& name) const {
  const auto it = traces_.find(name);
  if (it == traces_.end()) schema_fail("no trace named '" + name + "'");
  return Trace(algebra_, it->second);
}

std::optional<double> MatrixDocument::scalar(const std::string& name) const {
  const auto it = scalars_.find(name);
  if (it == scalars_.end()) return std::nullopt;
  return it->second;
}

json MatrixDocument::to_json() const {
  json j;
  j["schema"] = kSchemaVersion;
  j["algebra"] = algebra_.block_dims();
  json mats = json::object();
  for (const auto& [name, e] : entries_) {
    json m;
    m["kind"] = kind_name(e.kind);
    if (e.kind == EntryKind::vector) {
      m["data"] = vector_to_json(e.blocks[0].col(0));
    } else {
      if (!(e.algebra == algebra_)) m["algebra"] = e.algebra.block_dims();
      json blocks = json::array();
      for (const Matrix& b : e.blocks) blocks.push_back(matrix_to_json(b));
      m["blocks"] = std::move(blocks);
    }
    mats[name] = std::move(m);
  }
  j["matrices"] = std::move(mats);
  if (!traces_.empty()) j["traces"] = traces_;
  if (!scalars_.empty()) j["scalars"] = scalars_;
  return j;
}

MatrixDocument MatrixDocument::from_json(const json& j) {
  if (!j.is_object()) schema_fail("top level must be an object");
  if (!j.contains("schema") || !j["schema"].is_string()) schema_fail("missing schema version");
  if (j["schema"].get<std::string>() != kSchemaVersion) {
    schema_fail("unsupported schema '" + j["schema"].get<std::string>() + "', expected '" +
                kSchemaVersion + "'");
  }
  if (!j.contains("algebra")) schema_fail("missing algebra");
  MatrixDocument doc(parse_algebra(j["algebra"], "algebra"));
  if (j.contains("matrices")) {
    if (!j["matrices"].is_object()) schema_fail("matrices must be an object");
    for (const auto& [name, m] : j["matrices"].items()) {
      const std::string where = "matrix '" + name + "'";
      if (!m.is_object() || !m.contains("kind") || !m["kind"].is_string()) {
        schema_fail(where + " needs a string kind");
      }
      DocumentEntry e;
      e.kind = parse_kind(m["kind"].get<std::string>(), name);
      if (e.kind == EntryKind::vector) {
        if (!m.contains("data") || !m["data"].is_array() || m["data"].empty()) {
          schema_fail(where + " needs a nonempty data array");
        }
        const Eigen::Index n = static_cast<Eigen::Index>(m["data"].size());
        Vector v(n);
        for (Eigen::Index i = 0; i < n; ++i) v(i) = parse_complex(m["data"][i], where);
        e.algebra = BlockAlgebra({static_cast<int>(n)});
        e.blocks.push_back(Matrix(v));
      } else {
        e.algebra = m.contains("algebra") ? parse_algebra(m["algebra"], where) : doc.algebra_;
        if (!m.contains("blocks") || !m["blocks"].is_array() ||
            m["blocks"].size() != e.algebra.num_blocks()) {
          std::ostringstream os;
          os << where << " must have " << e.algebra.num_blocks() << " blocks";
          schema_fail(os.str());
        }
        for (std::size_t k = 0; k < e.algebra.num_blocks(); ++k) {
          const int n = e.algebra.dim(k);
          e.blocks.push_back(parse_matrix(m["blocks"][k], n, n, where));
        }
      }
      doc.entries_[name] = std::move(e);
      // Validate on load: forms must be PSD, projections orthoprojections.
      if (doc.entries_[name].kind == EntryKind::form) {
        doc.form(name);
      } else if (doc.entries_[name].kind == EntryKind::projection) {
        doc.projection(name);
      }
    }
  }
  if (j.contains("traces")) {
    if (!j["traces"].is_object()) schema_fail("traces must be an object");
    for (const auto& [name, t] : j["traces"].items()) {
      if (!t.is_array() || t.size() != doc.algebra_.num_blocks()) {
        schema_fail("trace '" + name + "' needs one weight per block");
      }
      std::vector<double> w;
      for (const json& x : t) {
        if (!x.is_number()) schema_fail("trace '" + name + "' weights must be numbers");
        w.push_back(x.get<double>());
      }
      const Trace validated(doc.algebra_, w);
      doc.traces_[name] = std::move(w);
    }
  }
  if (j.contains("scalars")) {
    if (!j["scalars"].is_object()) schema_fail("scalars must be an object");
    for (const auto& [name, x] : j["scalars"].items()) {
      if (!x.is_number()) schema_fail("scalar '" + name + "' must be a number");
      doc.scalars_[name] = x.get<double>();
    }
  }
  return doc;
}

std::string MatrixDocument::dump() const { return to_json().dump(2); }

MatrixDocument MatrixDocument::parse(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    schema_fail(std::string("invalid JSON: ") + e.what());
  }
  return from_json(j);
}

MatrixDocument MatrixDocument::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) schema_fail("cannot open '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

void MatrixDocument::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("document: cannot write '" + path + "'");
  out << dump() << "\n";
}

}  // namespace parfid
