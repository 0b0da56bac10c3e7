#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <complex>
#include <stdexcept>
#include <vector>

namespace crn {

using CMat = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

inline CMat hermitize(const CMat& a) { return 0.5 * (a + a.adjoint()); }

inline double hermitian_defect(const CMat& a) {
  if (a.rows() != a.cols()) return std::numeric_limits<double>::infinity();
  return (a - a.adjoint()).cwiseAbs().maxCoeff();
}

inline bool is_hermitian(const CMat& a, double tol = 1e-12) {
  return a.rows() == a.cols() && (a.size() == 0 || hermitian_defect(a) <= tol * std::max(1.0, a.cwiseAbs().maxCoeff()));
}

// Ascending eigenvalues of a Hermitian matrix; closed form up to 2x2.
inline RVec hermitian_eigenvalues(const CMat& a) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) {
    RVec ev(1);
    ev(0) = a(0, 0).real();
    return ev;
  }
  if (n == 2) {
    const double p = a(0, 0).real(), q = a(1, 1).real();
    const double m = 0.5 * (p + q);
    const double d = std::hypot(0.5 * (p - q), std::abs(a(0, 1)));
    RVec ev(2);
    ev(0) = m - d;
    ev(1) = m + d;
    return ev;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline double min_eigenvalue(const CMat& a) {
  if (a.size() == 0) return 0.0;
  return hermitian_eigenvalues(a).minCoeff();
}

// Full Hermitian eigendecomposition, ascending; closed form up to 2x2.
inline void hermitian_eig(const CMat& a, RVec* values, CMat* vectors) {
  const int n = static_cast<int>(a.rows());
  if (n == 1) {
    values->resize(1);
    (*values)(0) = a(0, 0).real();
    *vectors = CMat::Identity(1, 1);
    return;
  }
  if (n == 2) {
    const double p = a(0, 0).real(), q = a(1, 1).real();
    const std::complex<double> b = a(0, 1);
    const double m = 0.5 * (p + q);
    const double d = std::hypot(0.5 * (p - q), std::abs(b));
    values->resize(2);
    (*values)(0) = m - d;
    (*values)(1) = m + d;
    vectors->resize(2, 2);
    if (std::abs(b) <= 1e-300 * std::max({1.0, std::abs(p), std::abs(q)})) {
      if (p <= q)
        *vectors = CMat::Identity(2, 2);
      else {
        (*vectors)(0, 0) = 0.0; (*vectors)(1, 0) = 1.0;
        (*vectors)(0, 1) = 1.0; (*vectors)(1, 1) = 0.0;
      }
      return;
    }
    // eigenvector of lambda from the better-conditioned row
    for (int k = 0; k < 2; ++k) {
      const double lam = (*values)(k);
      std::complex<double> v0, v1;
      if (std::abs(lam - q) >= std::abs(lam - p)) {
        v0 = b;
        v1 = lam - p;
      } else {
        v0 = lam - q;
        v1 = std::conj(b);
      }
      const double nrm = std::sqrt(std::norm(v0) + std::norm(v1));
      (*vectors)(0, k) = v0 / nrm;
      (*vectors)(1, k) = v1 / nrm;
    }
    return;
  }
  Eigen::SelfAdjointEigenSolver<CMat> es(a);
  *values = es.eigenvalues();
  *vectors = es.eigenvectors();
}

inline bool is_psd(const CMat& a, double tol = 1e-10) {
  if (!is_hermitian(a)) return false;
  if (a.size() == 0) return true;
  return min_eigenvalue(a) >= -tol * std::max(1.0, a.cwiseAbs().maxCoeff());
}

// Nearest PSD matrix in Frobenius norm: eigenvalue clipping at zero.
inline CMat psd_project(const CMat& a) {
  if (a.size() == 0) return a;
  CMat h = hermitize(a);
  RVec ev;
  CMat v;
  hermitian_eig(h, &ev, &v);
  bool clean = true;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0) {
      ev(i) = 0.0;
      clean = false;
    }
  }
  if (clean) return h;
  return v * ev.asDiagonal() * v.adjoint();
}

// log det of a Hermitian positive definite matrix via Cholesky; falls back
// to the eigenvalue route when the factorization fails near the boundary.
inline double logdet_hpd(const CMat& a) {
  Eigen::LLT<CMat> llt(a);
  if (llt.info() == Eigen::Success) {
    double s = 0.0;
    const auto& l = llt.matrixLLT();
    for (int i = 0; i < a.rows(); ++i) s += std::log(l(i, i).real());
    return 2.0 * s;
  }
  RVec ev = hermitian_eigenvalues(hermitize(a));
  double s = 0.0;
  for (int i = 0; i < ev.size(); ++i) {
    if (ev(i) <= 0.0) throw std::runtime_error("logdet_hpd: matrix is not positive definite");
    s += std::log(ev(i));
  }
  return s;
}

inline double trace_re(const CMat& a) { return a.trace().real(); }

// Re Tr(A B) -- real inner product on the Hermitian space.
inline double re_trace_prod(const CMat& a, const CMat& b) {
  return (a * b).trace().real();
}

// Complex square matrix validated to be Hermitian, optionally PSD. Used at
// the interfaces where covariances enter the model (e.g. the primary-user
// transmit covariance); solver internals keep plain matrices and maintain
// the invariants by construction.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;

  static HermitianMatrix general(const CMat& a, double tol = 1e-12) {
    require_hermitian(a, tol);
    return HermitianMatrix(hermitize(a));
  }

  // Hermitian + eigenvalues >= -1e-10 (numerically PSD).
  static HermitianMatrix covariance(const CMat& a, double tol = 1e-12) {
    require_hermitian(a, tol);
    CMat h = hermitize(a);
    if (h.size() > 0 && min_eigenvalue(h) < -1e-10 * std::max(1.0, h.cwiseAbs().maxCoeff()))
      throw std::invalid_argument("HermitianMatrix: covariance has negative eigenvalues");
    return HermitianMatrix(std::move(h));
  }

  const CMat& mat() const { return m_; }
  int dim() const { return static_cast<int>(m_.rows()); }

 private:
  explicit HermitianMatrix(CMat m) : m_(std::move(m)) {}
  static void require_hermitian(const CMat& a, double tol) {
    if (a.rows() != a.cols()) throw std::invalid_argument("HermitianMatrix: matrix is not square");
    if (!is_hermitian(a, tol)) throw std::invalid_argument("HermitianMatrix: matrix is not Hermitian");
  }
  CMat m_;
};

// Interference-free water-filling: maximize log det(I + H Q H^H / noise_total)
// subject to Tr(Q) <= power, Q PSD. Default generator for the primary-user
// transmit covariance when a scenario file does not pin it.
inline CMat water_filling(const CMat& h, double power, double noise_total) {
  if (power < 0.0) throw std::invalid_argument("water_filling: negative power");
  if (noise_total <= 0.0) throw std::invalid_argument("water_filling: noise must be positive");
  const int t = static_cast<int>(h.cols());
  Eigen::JacobiSVD<CMat> svd(h, Eigen::ComputeFullV);
  RVec gains(t);
  for (int i = 0; i < t; ++i) {
    const double s = i < svd.singularValues().size() ? svd.singularValues()(i) : 0.0;
    gains(i) = s * s / noise_total;
  }
  // water level mu solves sum_i max(mu - 1/g_i, 0) = power over active modes
  std::vector<double> inv;
  for (int i = 0; i < t; ++i)
    if (gains(i) > 1e-300) inv.push_back(1.0 / gains(i));
  std::sort(inv.begin(), inv.end());
  RVec p = RVec::Zero(t);
  if (!inv.empty() && power > 0.0) {
    double mu = 0.0;
    for (std::size_t k = inv.size(); k >= 1; --k) {
      double acc = 0.0;
      for (std::size_t i = 0; i < k; ++i) acc += inv[i];
      mu = (power + acc) / static_cast<double>(k);
      if (mu >= inv[k - 1]) break;
    }
    for (int i = 0; i < t; ++i)
      if (gains(i) > 1e-300) p(i) = std::max(mu - 1.0 / gains(i), 0.0);
  }
  CMat v = svd.matrixV();
  return hermitize(v * p.asDiagonal() * v.adjoint());
}

}  // namespace crn
