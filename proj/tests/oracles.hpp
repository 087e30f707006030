#pragma once
// Independent reference computations used by the unit tests and the
// acceptance runner. Nothing here calls the filtering code under test.

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/MatrixFunctions>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd expm(const MatrixXd& a) { return a.exp(); }

/// Adaptive Simpson on a matrix-valued integrand, error in Frobenius norm.
inline MatrixXd adaptive_simpson(const std::function<MatrixXd(double)>& f, double a, double b,
                                 double tol, int depth = 40) {
  std::function<MatrixXd(double, double, const MatrixXd&, const MatrixXd&, const MatrixXd&,
                         const MatrixXd&, double, int)>
      step = [&](double lo, double hi, const MatrixXd& flo, const MatrixXd& fmid, const MatrixXd& fhi,
                 const MatrixXd& whole, double eps, int d) -> MatrixXd {
    const double mid = 0.5 * (lo + hi);
    const MatrixXd fl = f(0.5 * (lo + mid)), fr = f(0.5 * (mid + hi));
    const MatrixXd left = (mid - lo) / 6.0 * (flo + 4.0 * fl + fmid);
    const MatrixXd right = (hi - mid) / 6.0 * (fmid + 4.0 * fr + fhi);
    const MatrixXd diff = left + right - whole;
    if (d <= 0 || diff.norm() <= 15.0 * eps) return left + right + diff / 15.0;
    return step(lo, mid, flo, fl, fmid, left, 0.5 * eps, d - 1) +
           step(mid, hi, fmid, fr, fhi, right, 0.5 * eps, d - 1);
  };
  const MatrixXd fa = f(a), fm = f(0.5 * (a + b)), fb = f(b);
  const MatrixXd whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return step(a, b, fa, fm, fb, whole, tol, depth);
}

/// Q_d = int_0^dt expm(A s) Q expm(A s)^T ds by quadrature.
inline MatrixXd qd_quadrature(const MatrixXd& a, const MatrixXd& q, double dt) {
  const double scale = std::max(q.norm(), 1e-300) * dt;
  return adaptive_simpson(
      [&](double s) {
        const MatrixXd e = expm(a * s);
        return MatrixXd(e * q * e.transpose());
      },
      0.0, dt, 1e-13 * scale);
}

/// Random stable matrix: negative-real-part spectrum with some oscillation.
inline MatrixXd random_stable(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  const double shift = Eigen::EigenSolver<MatrixXd>(m).eigenvalues().real().maxCoeff();
  return m - (shift + 0.5 + std::abs(g(rng))) * MatrixXd::Identity(n, n);
}

inline MatrixXd random_spd(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  MatrixXd m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = g(rng);
  return m * m.transpose() + 0.1 * MatrixXd::Identity(n, n);
}

/// Posterior of the stacked states of
///   z_0 ~ N(m0, P0), z_{k+1} = A z_k + B p_k + w_k, y_k = C z_k + v_k
/// by conditioning the dense joint Gaussian.
struct BatchPosterior {
  std::vector<VectorXd> mean;
  std::vector<MatrixXd> cov;  // marginal blocks
  double log_likelihood = 0.0;
};

inline BatchPosterior batch_condition(const MatrixXd& a, const MatrixXd& b, const MatrixXd& q,
                                      const MatrixXd& c, const MatrixXd& r, const MatrixXd& y,
                                      const MatrixXd& p, const VectorXd& m0, const MatrixXd& p0) {
  const int n = static_cast<int>(a.rows());
  const int ny = static_cast<int>(c.rows());
  const int nt = static_cast<int>(y.rows());
  VectorXd mu(n * nt);
  MatrixXd sigma = MatrixXd::Zero(n * nt, n * nt);
  std::vector<MatrixXd> marginal(static_cast<std::size_t>(nt));
  mu.segment(0, n) = m0;
  marginal[0] = p0;
  for (int k = 1; k < nt; ++k) {
    mu.segment(k * n, n) = a * mu.segment((k - 1) * n, n) + b * p.row(k - 1).transpose();
    marginal[static_cast<std::size_t>(k)] = a * marginal[static_cast<std::size_t>(k - 1)] * a.transpose() + q;
  }
  for (int j = 0; j < nt; ++j) {
    MatrixXd block = marginal[static_cast<std::size_t>(j)];
    for (int k = j; k < nt; ++k) {
      sigma.block(k * n, j * n, n, n) = block;
      sigma.block(j * n, k * n, n, n) = block.transpose();
      block = a * block;
    }
  }
  MatrixXd h = MatrixXd::Zero(ny * nt, n * nt);
  MatrixXd rr = MatrixXd::Zero(ny * nt, ny * nt);
  VectorXd yy(ny * nt);
  for (int k = 0; k < nt; ++k) {
    h.block(k * ny, k * n, ny, n) = c;
    rr.block(k * ny, k * ny, ny, ny) = r;
    yy.segment(k * ny, ny) = y.row(k).transpose();
  }
  const MatrixXd s = h * sigma * h.transpose() + rr;
  const Eigen::LLT<MatrixXd> llt(s);
  const VectorXd resid = yy - h * mu;
  const MatrixXd gain_t = llt.solve(h * sigma);  // S^{-1} H Sigma
  const VectorXd post_mean = mu + gain_t.transpose() * resid;
  const MatrixXd post_cov = sigma - (h * sigma).transpose() * gain_t;

  BatchPosterior out;
  for (int k = 0; k < nt; ++k) {
    out.mean.push_back(post_mean.segment(k * n, n));
    out.cov.push_back(post_cov.block(k * n, k * n, n, n));
  }
  const MatrixXd l = llt.matrixL();
  const double logdet = 2.0 * l.diagonal().array().log().sum();
  out.log_likelihood = -0.5 * (resid.dot(llt.solve(resid)) + logdet +
                               ny * nt * std::log(2.0 * std::numbers::pi));
  return out;
}

}  // namespace oracle
