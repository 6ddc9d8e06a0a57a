#pragma once

// JSON documents holding named matrices over a block algebra. Complex
// entries are [re, im] pairs; the schema version is "parfid-1".
//
//   {"schema": "parfid-1", "algebra": [2, 3],
//    "matrices": {"omega": {"kind": "form", "blocks": [[[[re, im], ...], ...], ...]},
//                 "psi": {"kind": "vector", "data": [[re, im], ...]}},
//    "traces": {"tau": [1.0, 0.5]},
//    "scalars": {"certificate": -0.01}}
//
// A matrix may carry its own "algebra" when it lives on a different one, as
// the input and output states of a channel do.

#include <map>
#include <optional>
#include <string>

#include <json.hpp>

#include "parfid/forms.hpp"

namespace parfid {

inline constexpr const char* kSchemaVersion = "parfid-1";

enum class EntryKind { form, projection, operator_matrix, vector };

const char* kind_name(EntryKind kind);

struct DocumentEntry {
  EntryKind kind = EntryKind::operator_matrix;
  BlockAlgebra algebra;
  std::vector<Matrix> blocks;  // a vector is stored as one n x 1 block
};

class MatrixDocument {
 public:
  MatrixDocument() = default;
  explicit MatrixDocument(BlockAlgebra algebra) : algebra_(std::move(algebra)) {}

  const BlockAlgebra& algebra() const { return algebra_; }

  void set_form(const std::string& name, const PositiveForm& form);
  void set_projection(const std::string& name, const BlockProjection& p);
  void set_operator(const std::string& name, const BlockMatrix& x);
  void set_vector(const std::string& name, const Vector& v);
  void set_trace(const std::string& name, const Trace& tau);
  void set_scalar(const std::string& name, double value);

  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  const std::map<std::string, DocumentEntry>& entries() const { return entries_; }

  /// Accessors throw SchemaError for a missing name or a kind mismatch.
  PositiveForm form(const std::string& name) const;
  BlockProjection projection(const std::string& name) const;
  BlockMatrix op(const std::string& name) const;
  Vector vector(const std::string& name) const;
  Trace trace(const std::string& name) const;
  std::optional<double> scalar(const std::string& name) const;

  nlohmann::json to_json() const;
  /// Throws SchemaError on structural problems and ValidationError (or
  /// NotPsdError) when a form or projection fails its invariants.
  static MatrixDocument from_json(const nlohmann::json& j);

  std::string dump() const;
  static MatrixDocument parse(const std::string& text);
  static MatrixDocument load(const std::string& path);
  void save(const std::string& path) const;

 private:
  const DocumentEntry& entry(const std::string& name, EntryKind kind) const;

  BlockAlgebra algebra_;
  std::map<std::string, DocumentEntry> entries_;
  std::map<std::string, std::vector<double>> traces_;
  std::map<std::string, double> scalars_;
};

/// [re, im] pairs for a vector, rows of pairs for a matrix.
nlohmann::json complex_to_json(Complex z);
nlohmann::json matrix_to_json(const Matrix& m);
nlohmann::json vector_to_json(const Vector& v);

}  // namespace parfid
