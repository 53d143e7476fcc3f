#pragma once

// Structured-text forms for vectors and matrices: row-major arrays of complex
// pairs [re, im].

#include <string>

#include "json.hpp"

#include "pcsft/hilbert.hpp"

namespace pcsft {

using Json = nlohmann::ordered_json;

Json to_json(const CVector& v);
Json to_json(const CMatrix& m);
Json to_json(const FieldVector& v);
Json to_json(const HermitianOperator& a);

CVector vector_from_json(const Json& j);
CMatrix matrix_from_json(const Json& j);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace pcsft
