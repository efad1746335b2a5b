#include "stablerec/svd.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace stablerec {

SvdResult jacobi_svd(const DenseMatrix& a, int max_sweeps) {
  const std::size_t m = a.rows(), n = a.cols();
  if (m < n) throw CapabilityError("jacobi_svd: wide matrices (rows < cols) are not supported");
  if (n == 0) return {};

  // Column-major working copies so that column rotations are contiguous.
  std::vector<Vector> w(n, Vector(m));
  std::vector<Vector> v(n, Vector(n, 0.0));
  for (std::size_t c = 0; c < n; ++c) {
    for (std::size_t r = 0; r < m; ++r) w[c][r] = a(r, c);
    v[c][c] = 1.0;
  }

  const double eps = std::numeric_limits<double>::epsilon();
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = squared_norm(w[p]);
        const double beta = squared_norm(w[q]);
        const double gamma = dot(w[p], w[q]);
        if (gamma == 0.0 || std::abs(gamma) <= eps * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t r = 0; r < m; ++r) {
          const double wp = w[p][r], wq = w[q][r];
          w[p][r] = c * wp - s * wq;
          w[q][r] = s * wp + c * wq;
        }
        for (std::size_t r = 0; r < n; ++r) {
          const double vp = v[p][r], vq = v[q][r];
          v[p][r] = c * vp - s * vq;
          v[q][r] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  Vector sigma(n);
  for (std::size_t c = 0; c < n; ++c) sigma[c] = norm(w[c]);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  SvdResult out{DenseMatrix(m, n), Vector(n), DenseMatrix(n, n)};
  const double tiny = (sigma.empty() ? 0.0 : sigma[order[0]]) * eps * static_cast<double>(m);
  std::vector<Vector> ucols;
  ucols.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t c = order[k];
    out.sigma[k] = sigma[c];
    for (std::size_t r = 0; r < n; ++r) out.v(r, k) = v[c][r];
    Vector u(m, 0.0);
    if (sigma[c] > tiny) {
      for (std::size_t r = 0; r < m; ++r) u[r] = w[c][r] / sigma[c];
    } else {
      // Null direction: complete U with a unit vector orthogonal to the columns so far.
      for (std::size_t e = 0; e < m; ++e) {
        Vector cand(m, 0.0);
        cand[e] = 1.0;
        for (const Vector& prev : ucols) axpy(-dot(prev, cand), prev, cand);
        const double len = norm(cand);
        if (len > 1e-6) {
          for (std::size_t r = 0; r < m; ++r) u[r] = cand[r] / len;
          break;
        }
      }
    }
    for (std::size_t r = 0; r < m; ++r) out.u(r, k) = u[r];
    ucols.push_back(std::move(u));
  }
  return out;
}

} // namespace stablerec
