#pragma once

#include <cstddef>
#include <vector>

#include "metaemb/matrix.hpp"

namespace metaemb {

// Thin SVD a = u * diag(sigma) * v^T with r = min(rows, cols) columns,
// singular values sorted descending. Sign convention: the largest-magnitude
// entry of each right singular vector is positive.
struct SvdResult {
  Matrix u;                           // rows x r
  std::vector<double> singular_values;  // r, descending
  Matrix v;                           // cols x r
};

// Householder QR followed by one-sided Jacobi on the small factor.
SvdResult svd_thin(const Matrix& a);

// First k columns of u scaled by their singular values (rows x k).
Matrix svd_project(const SvdResult& svd, std::size_t k);

// Frobenius norm of a - u_k sigma_k v_k^T.
double svd_reconstruction_error(const Matrix& a, const SvdResult& svd,
                                std::size_t k);

}  // namespace metaemb
