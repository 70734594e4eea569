#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>

namespace viscomem {

using Real = double;
using Complex = std::complex<double>;
using Vector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;
using DenseMatrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<Real>;
using ComplexSparseMatrix = Eigen::SparseMatrix<Complex>;
using Index = Eigen::Index;

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid input data (mesh, coefficients, parameters, configuration).
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// A linear or eigenvalue solver did not produce a usable result.
class SolverFailure : public Error {
public:
  using Error::Error;
};

#define VISCOMEM_REQUIRE(cond, ExcType, msg)                                   \
  do {                                                                         \
    if (!(cond)) throw ExcType(msg);                                           \
  } while (false)

/// SplitMix64 step; used to derive independent per-task seeds from one seed.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

}  // namespace viscomem
