#include "metaemb/svd.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "metaemb/errors.hpp"

namespace metaemb {

namespace {

// Thin Householder QR of a (n x m, n >= m): fills q (n x m) and r (m x m).
void qr_thin(const Matrix& a, Matrix& q, Matrix& r) {
  const std::size_t n = a.rows;
  const std::size_t m = a.cols;
  Matrix work = a;
  std::vector<std::vector<double>> reflectors;
  reflectors.reserve(m);

  for (std::size_t k = 0; k < m; ++k) {
    double norm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) norm2 += work.at(i, k) * work.at(i, k);
    double alpha = std::sqrt(norm2);
    std::vector<double> v(n, 0.0);
    if (alpha > 0.0) {
      if (work.at(k, k) > 0.0) alpha = -alpha;
      for (std::size_t i = k; i < n; ++i) v[i] = work.at(i, k);
      v[k] -= alpha;
      double vnorm2 = 0.0;
      for (std::size_t i = k; i < n; ++i) vnorm2 += v[i] * v[i];
      if (vnorm2 > 0.0) {
        // Apply H = I - 2 v v^T / (v^T v) to the remaining columns.
        for (std::size_t j = k; j < m; ++j) {
          double s = 0.0;
          for (std::size_t i = k; i < n; ++i) s += v[i] * work.at(i, j);
          s *= 2.0 / vnorm2;
          for (std::size_t i = k; i < n; ++i) work.at(i, j) -= s * v[i];
        }
      }
    }
    reflectors.push_back(std::move(v));
  }

  r = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) r.at(i, j) = work.at(i, j);

  // Build the thin q by applying the reflectors in reverse to I(:, 0..m-1).
  q = Matrix(n, m);
  for (std::size_t j = 0; j < m; ++j) q.at(j, j) = 1.0;
  for (std::size_t k = m; k-- > 0;) {
    const auto& v = reflectors[k];
    double vnorm2 = 0.0;
    for (std::size_t i = k; i < n; ++i) vnorm2 += v[i] * v[i];
    if (vnorm2 == 0.0) continue;
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t i = k; i < n; ++i) s += v[i] * q.at(i, j);
      s *= 2.0 / vnorm2;
      for (std::size_t i = k; i < n; ++i) q.at(i, j) -= s * v[i];
    }
  }
}

// One-sided Jacobi: orthogonalizes the columns of b in place, accumulating
// the right rotations into v (which must start as identity).
void jacobi_orthogonalize(Matrix& b, Matrix& v) {
  const std::size_t n = b.rows;
  const std::size_t m = b.cols;
  const double tol = 1e-14;
  const int max_sweeps = 60;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      for (std::size_t j = i + 1; j < m; ++j) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double bi = b.at(k, i);
          const double bj = b.at(k, j);
          alpha += bi * bi;
          beta += bj * bj;
          gamma += bi * bj;
        }
        if (alpha == 0.0 || beta == 0.0) continue;
        if (std::fabs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = (zeta >= 0.0 ? 1.0 : -1.0) /
                         (std::fabs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double bi = b.at(k, i);
          const double bj = b.at(k, j);
          b.at(k, i) = c * bi - s * bj;
          b.at(k, j) = s * bi + c * bj;
        }
        for (std::size_t k = 0; k < m; ++k) {
          const double vi = v.at(k, i);
          const double vj = v.at(k, j);
          v.at(k, i) = c * vi - s * vj;
          v.at(k, j) = s * vi + c * vj;
        }
      }
    }
    if (!rotated) return;
  }
  throw NumericError("svd: Jacobi sweep limit reached without convergence");
}

Matrix transpose(const Matrix& a) {
  Matrix t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
  return t;
}

// Deterministic signs: largest-magnitude entry of each right singular vector
// made positive, with the matching left column flipped alongside.
void fix_signs(SvdResult& r) {
  for (std::size_t c = 0; c < r.singular_values.size(); ++c) {
    std::size_t arg = 0;
    double best = -1.0;
    for (std::size_t i = 0; i < r.v.rows; ++i) {
      const double mag = std::fabs(r.v.at(i, c));
      if (mag > best) {
        best = mag;
        arg = i;
      }
    }
    if (r.v.at(arg, c) < 0.0) {
      for (std::size_t i = 0; i < r.v.rows; ++i) r.v.at(i, c) = -r.v.at(i, c);
      for (std::size_t i = 0; i < r.u.rows; ++i) r.u.at(i, c) = -r.u.at(i, c);
    }
  }
}

}  // namespace

SvdResult svd_thin(const Matrix& a) {
  if (a.rows == 0 || a.cols == 0) throw ContractError("svd: empty matrix");
  if (a.rows < a.cols) {
    SvdResult flipped = svd_thin(transpose(a));
    SvdResult out{std::move(flipped.v), std::move(flipped.singular_values),
                  std::move(flipped.u)};
    fix_signs(out);
    return out;
  }

  const std::size_t n = a.rows;
  const std::size_t m = a.cols;
  Matrix q, r;
  qr_thin(a, q, r);

  Matrix v(m, m);
  for (std::size_t i = 0; i < m; ++i) v.at(i, i) = 1.0;
  jacobi_orthogonalize(r, v);

  // Column norms of the rotated r are the singular values.
  std::vector<double> sigma(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i) s += r.at(i, j) * r.at(i, j);
    sigma[j] = std::sqrt(s);
  }

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return sigma[x] > sigma[y]; });

  // u_small = r columns normalized; u = q * u_small.
  SvdResult out;
  out.singular_values.resize(m);
  out.v = Matrix(m, m);
  Matrix u_small(m, m);
  for (std::size_t c = 0; c < m; ++c) {
    const std::size_t src = order[c];
    out.singular_values[c] = sigma[src];
    if (sigma[src] > 0.0)
      for (std::size_t i = 0; i < m; ++i)
        u_small.at(i, c) = r.at(i, src) / sigma[src];
    for (std::size_t i = 0; i < m; ++i) out.v.at(i, c) = v.at(i, src);
  }

  out.u = Matrix(n, m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < m; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < m; ++k) s += q.at(i, k) * u_small.at(k, c);
      out.u.at(i, c) = s;
    }

  fix_signs(out);
  return out;
}

Matrix svd_project(const SvdResult& svd, std::size_t k) {
  if (k == 0 || k > svd.singular_values.size())
    throw ContractError("svd_project: rank " + std::to_string(k) +
                        " outside [1, " +
                        std::to_string(svd.singular_values.size()) + "]");
  Matrix out(svd.u.rows, k);
  for (std::size_t i = 0; i < svd.u.rows; ++i)
    for (std::size_t c = 0; c < k; ++c)
      out.at(i, c) = svd.u.at(i, c) * svd.singular_values[c];
  return out;
}

double svd_reconstruction_error(const Matrix& a, const SvdResult& svd,
                                std::size_t k) {
  if (k == 0 || k > svd.singular_values.size())
    throw ContractError("svd_reconstruction_error: rank out of range");
  double err2 = 0.0;
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) {
      double rec = 0.0;
      for (std::size_t c = 0; c < k; ++c)
        rec += svd.u.at(i, c) * svd.singular_values[c] * svd.v.at(j, c);
      const double d = a.at(i, j) - rec;
      err2 += d * d;
    }
  return std::sqrt(err2);
}

}  // namespace metaemb
