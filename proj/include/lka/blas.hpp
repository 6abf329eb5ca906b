#pragma once

// Thin wrappers over the Fortran BLAS/LAPACK symbols used for large Gram systems.

#include <Eigen/Dense>
#include <string>

#include "lka/error.hpp"

extern "C" {
void dsyrk_(const char* uplo, const char* trans, const int* n, const int* k, const double* alpha,
            const double* a, const int* lda, const double* beta, double* c, const int* ldc);
void dpotrf_(const char* uplo, const int* n, double* a, const int* lda, int* info);
void dpotrs_(const char* uplo, const int* n, const int* nrhs, const double* a, const int* lda, double* b,
             const int* ldb, int* info);
}

namespace lka::blas {

// C(lower) += A * A^T, A is n x k column-major
inline void syrk_lower(Eigen::Ref<Eigen::MatrixXd> C, const Eigen::Ref<const Eigen::MatrixXd>& A) {
  const int n = int(A.rows()), k = int(A.cols()), lda = int(A.outerStride()), ldc = int(C.outerStride());
  const double one = 1.0;
  if (k == 0) return;
  dsyrk_("L", "N", &n, &k, &one, A.data(), &lda, &one, C.data(), &ldc);
}

// In-place lower Cholesky; throws ConstructionFailure when not positive definite.
inline void cholesky_lower(Eigen::MatrixXd& C) {
  const int n = int(C.rows()), lda = int(C.outerStride());
  int info = 0;
  dpotrf_("L", &n, C.data(), &lda, &info);
  if (info > 0) throw ConstructionFailure("Gram matrix not positive definite (leading minor " + std::to_string(info) + ")");
  if (info < 0) throw Error("dpotrf argument error");
}

inline Eigen::VectorXd cholesky_solve(const Eigen::MatrixXd& L, const Eigen::VectorXd& b) {
  Eigen::VectorXd x = b;
  const int n = int(L.rows()), lda = int(L.outerStride()), one = 1, ldb = int(x.size());
  int info = 0;
  dpotrs_("L", &n, &one, L.data(), &lda, x.data(), &ldb, &info);
  if (info != 0) throw Error("dpotrs argument error");
  return x;
}

}  // namespace lka::blas
