#include "pcsft/serialize.hpp"

#include <charconv>

#include "pcsft/error.hpp"

namespace pcsft {

namespace {

Json complex_pair(Complex z) { return Json::array({z.real(), z.imag()}); }

Complex pair_value(const Json& j) {
  if (!j.is_array() || j.size() != 2) throw DomainError("expected a complex pair [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace

Json to_json(const CVector& v) {
  Json out = Json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) out.push_back(complex_pair(v(k)));
  return out;
}

Json to_json(const CMatrix& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_pair(m(i, j)));
    out.push_back(std::move(row));
  }
  return out;
}

Json to_json(const FieldVector& v) { return to_json(v.components()); }
Json to_json(const HermitianOperator& a) { return to_json(a.matrix()); }

CVector vector_from_json(const Json& j) {
  if (!j.is_array()) throw DomainError("expected an array of complex pairs");
  CVector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t k = 0; k < j.size(); ++k) v(static_cast<Eigen::Index>(k)) = pair_value(j[k]);
  return v;
}

CMatrix matrix_from_json(const Json& j) {
  if (!j.is_array() || j.empty()) throw DomainError("expected a non-empty array of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j[0].size();
  CMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) throw DomainError("ragged matrix rows");
    for (std::size_t k = 0; k < cols; ++k) {
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = pair_value(j[i][k]);
    }
  }
  return m;
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

}  // namespace pcsft
