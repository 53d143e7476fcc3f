#pragma once

// Independent reference computations for the tests. Everything here is written
// with plain loops over std::complex so it shares no code path with the
// library under test.

#include <complex>
#include <cstddef>
#include <vector>

namespace oracle {

using cd = std::complex<double>;
using Mat = std::vector<std::vector<cd>>;
using Vec = std::vector<cd>;

inline Mat zeros(std::size_t r, std::size_t c) { return Mat(r, std::vector<cd>(c)); }

inline Mat kron(const Mat& a, const Mat& b) {
  const std::size_t ra = a.size(), ca = a[0].size(), rb = b.size(), cb = b[0].size();
  Mat k = zeros(ra * rb, ca * cb);
  for (std::size_t i = 0; i < ra; ++i)
    for (std::size_t j = 0; j < ca; ++j)
      for (std::size_t p = 0; p < rb; ++p)
        for (std::size_t q = 0; q < cb; ++q) k[i * rb + p][j * cb + q] = a[i][j] * b[p][q];
  return k;
}

inline Mat matmul(const Mat& a, const Mat& b) {
  Mat c = zeros(a.size(), b[0].size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t k = 0; k < b.size(); ++k)
      for (std::size_t j = 0; j < b[0].size(); ++j) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline cd trace(const Mat& a) {
  cd t = 0;
  for (std::size_t i = 0; i < a.size(); ++i) t += a[i][i];
  return t;
}

// <A psi, psi> = sum_jk conj(psi_j) A_jk psi_k
inline double expectation(const Mat& a, const Vec& psi) {
  cd s = 0;
  for (std::size_t j = 0; j < psi.size(); ++j)
    for (std::size_t k = 0; k < psi.size(); ++k) s += std::conj(psi[j]) * a[j][k] * psi[k];
  return s.real();
}

// Reduced density of the first factor: (rho1)_{ij} = sum_k psi_{ik} conj(psi_{jk}).
inline Mat partial_trace_second(const Vec& psi, std::size_t da, std::size_t db) {
  Mat r = zeros(da, da);
  for (std::size_t i = 0; i < da; ++i)
    for (std::size_t j = 0; j < da; ++j)
      for (std::size_t k = 0; k < db; ++k) r[i][j] += psi[i * db + k] * std::conj(psi[j * db + k]);
  return r;
}

inline Mat partial_trace_first(const Vec& psi, std::size_t da, std::size_t db) {
  Mat r = zeros(db, db);
  for (std::size_t k = 0; k < db; ++k)
    for (std::size_t l = 0; l < db; ++l)
      for (std::size_t i = 0; i < da; ++i) r[k][l] += psi[i * db + k] * std::conj(psi[i * db + l]);
  return r;
}

}  // namespace oracle
