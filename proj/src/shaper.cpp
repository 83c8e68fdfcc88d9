// SPDX-License-Identifier: Apache-2.0
#include "cpsofdm/shaper.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace cpsofdm {

RMatrix real_form(const CMatrix& a) {
  const auto r = a.rows();
  const auto c = a.cols();
  RMatrix out(2 * r, 2 * c);
  out.topLeftCorner(r, c) = a.real();
  out.topRightCorner(r, c) = -a.imag();
  out.bottomLeftCorner(r, c) = a.imag();
  out.bottomRightCorner(r, c) = a.real();
  return out;
}

RVector stack(const CVector& v) {
  RVector z(2 * v.size());
  z.head(v.size()) = v.real();
  z.tail(v.size()) = v.imag();
  return z;
}

CVector unstack(const RVector& z) {
  const auto n = z.size() / 2;
  CVector v(n);
  v.real() = z.head(n);
  v.imag() = z.tail(n);
  return v;
}

double norm6(const CVector& x) {
  double s = 0.0;
  for (const auto& v : x) {
    const double r = std::norm(v);
    s += r * r * r;
  }
  return std::cbrt(std::sqrt(s));
}

namespace {

void check_hermitian_pd(const CMatrix& e, const char* what) {
  if (e.rows() != e.cols()) throw ParameterError(std::string(what) + " must be square");
  const double scale = std::max(e.norm(), std::numeric_limits<double>::min());
  if ((e - e.adjoint()).norm() > 1e-10 * scale) throw ParameterError(std::string(what) + " is not Hermitian");
  Eigen::LLT<CMatrix> llt(e);
  if (llt.info() != Eigen::Success) throw ParameterError(std::string(what) + " is not positive definite");
}

// Rows B with B^T B = Hessian of sum |x|^6 in the real coordinates of c.
// Per-sample 2x2 Hessian 6 r^2 I + 24 r s s^T = a^2 I + (b^2 - a^2) uu^T with
// a = sqrt(6) r, b = sqrt(30) r, u = s / |s|. Its square root is a I + (b - a) uu^T.
RMatrix sixth_power_root(const CVector& x, const RMatrix& ar) {
  const auto n = x.size();
  RMatrix b(2 * n, ar.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::norm(x(i));
    if (r == 0.0) {
      b.row(i).setZero();
      b.row(i + n).setZero();
      continue;
    }
    const double mag = std::sqrt(r);
    const double ur = x(i).real() / mag;
    const double ui = x(i).imag() / mag;
    const double a = std::sqrt(6.0) * r;
    const double k = (std::sqrt(30.0) - std::sqrt(6.0)) * r;
    const double s00 = a + k * ur * ur;
    const double s01 = k * ur * ui;
    const double s11 = a + k * ui * ui;
    b.row(i) = s00 * ar.row(i) + s01 * ar.row(i + n);
    b.row(i + n) = s01 * ar.row(i) + s11 * ar.row(i + n);
  }
  return b;
}

// Adds scale * sum |x|^6 terms. `ar` is real_form(Phi); x = Phi c.
double add_sixth_power(const CVector& x, const RMatrix& ar, double scale, RVector& grad, RMatrix* hess) {
  const auto n = x.size();
  RVector w(2 * n);
  double value = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r = std::norm(x(i));
    value += r * r * r;
    w(i) = 6.0 * r * r * x(i).real();
    w(i + n) = 6.0 * r * r * x(i).imag();
  }
  grad.noalias() += scale * (ar.transpose() * w);
  if (hess != nullptr) {
    const RMatrix b = sixth_power_root(x, ar);
    RMatrix bb = RMatrix::Zero(ar.cols(), ar.cols());
    bb.selfadjointView<Eigen::Lower>().rankUpdate(b.transpose(), scale);
    hess->noalias() += RMatrix(bb.selfadjointView<Eigen::Lower>());
  }
  return value;
}

double sixth_power_value(const CVector& x) {
  double s = 0.0;
  for (const auto& v : x) {
    const double r = std::norm(v);
    s += r * r * r;
  }
  return s;
}

// sum |x0 + y|^6 - sum |x0|^6 without cancellation, so tiny offsets y still
// register in the line search.
double sixth_power_change(const CVector& x0, const CVector& y) {
  double s = 0.0;
  for (Eigen::Index n = 0; n < x0.size(); ++n) {
    const double r0 = std::norm(x0(n));
    const double dr = 2.0 * std::real(std::conj(x0(n)) * y(n)) + std::norm(y(n));
    const double r = r0 + dr;
    s += dr * (r * r + r * r0 + r0 * r0);
  }
  return s;
}

FeasibilityReport evaluate(const CMatrix& phi, const CMatrix& e_bar, const CVector& d, const CVector& c, double evm_max,
                           double tol) {
  FeasibilityReport rep;
  const CVector xd = phi * d;
  const CVector off = c - d;
  const CVector xo = phi * off;
  const double alpha2 = xd.squaredNorm();
  const double alpha = std::sqrt(alpha2);
  const double osb = std::real(d.dot(e_bar * d));
  // Offset form of each slack; algebraically equal to the c form, without cancellation.
  rep.slack_lin = std::real(xo.dot(xd)) + 0.5 * alpha2 * evm_max * evm_max;
  rep.slack_evm = evm_max * alpha - xo.norm();
  rep.slack_osb = -2.0 * std::real(off.dot(e_bar * d)) - std::real(off.dot(e_bar * off));
  rep.rel_lin = rep.slack_lin / alpha2;
  rep.rel_evm = rep.slack_evm / alpha;
  rep.rel_osb = rep.slack_osb / osb;
  rep.evm = xo.norm() / alpha;
  rep.feasible = rep.rel_lin >= -tol && rep.rel_evm >= -tol && rep.rel_osb >= -tol;
  rep.energy_kept = (phi * c).squaredNorm() >= alpha2;
  return rep;
}

}  // namespace

void ShapingProblem::validate() const {
  if (phi_bar.cols() != d_bar.size()) throw ParameterError("shaping: Phi columns must match d length");
  if (e_bar.rows() != d_bar.size()) throw ParameterError("shaping: E size must match d length");
  if (!(evm_max > 0.0) || !std::isfinite(evm_max)) throw ParameterError("shaping: evm_max must be positive");
  if (!((phi_bar * d_bar).norm() > 0.0)) throw ParameterError("shaping: Phi d must be nonzero");
  check_hermitian_pd(e_bar, "shaping: E");
}

ConstraintRhs constraint_rhs(const ShapingProblem& problem) {
  const double alpha2 = (problem.phi_bar * problem.d_bar).squaredNorm();
  const double eps = problem.evm_max;
  return {alpha2 * (1.0 - 0.5 * eps * eps), eps * std::sqrt(alpha2),
          std::real(problem.d_bar.dot(problem.e_bar * problem.d_bar))};
}

FeasibilityReport check_feasible(const CVector& c_bar, const ShapingProblem& problem, double tol) {
  if (c_bar.size() != problem.d_bar.size() || problem.phi_bar.cols() != c_bar.size() ||
      problem.e_bar.rows() != c_bar.size())
    throw ParameterError("check_feasible: dimension mismatch");
  return evaluate(problem.phi_bar, problem.e_bar, problem.d_bar, c_bar, problem.evm_max, tol);
}

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw ParameterError("solver: tol must be positive");
  if (!(barrier_growth > 1.0)) throw ParameterError("solver: barrier growth must exceed 1");
  if (!(initial_weight > 0.0)) throw ParameterError("solver: initial barrier weight must be positive");
  if (max_outer < 1 || max_inner < 1) throw ParameterError("solver: iteration caps must be positive");
}

SixthPowerEval objective_6norm(const CVector& c_bar, const CMatrix& phi_bar, bool with_hessian) {
  if (phi_bar.cols() != c_bar.size()) throw ParameterError("objective: dimension mismatch");
  const RMatrix ar = real_form(phi_bar);
  SixthPowerEval out;
  out.gradient = RVector::Zero(ar.cols());
  if (with_hessian) out.hessian = RMatrix::Zero(ar.cols(), ar.cols());
  out.value = add_sixth_power(phi_bar * c_bar, ar, 1.0, out.gradient, with_hessian ? &out.hessian : nullptr);
  return out;
}

OffsetShaper::OffsetShaper(CMatrix phi_bar, CMatrix e_bar) : phi_(std::move(phi_bar)), e_(std::move(e_bar)) {
  if (phi_.cols() == 0) throw ParameterError("shaper: empty synthesis matrix");
  if (e_.rows() != phi_.cols()) throw ParameterError("shaper: E size must match Phi columns");
  check_hermitian_pd(e_, "shaper: E");
  phi_real_ = real_form(phi_);
  gram_real_ = real_form(phi_.adjoint() * phi_);
  e_real_ = real_form(e_);
  e_root_ = Eigen::LLT<RMatrix>(e_real_).matrixU();
  Eigen::JacobiSVD<CMatrix> svd(phi_);
  const auto& sv = svd.singularValues();
  rank_ratio_ = sv(0) > 0.0 ? sv(sv.size() - 1) / sv(0) : 0.0;
}

ShapingSolution OffsetShaper::solve(const CVector& d, double evm_max, const SolverOptions& opts) const {
  opts.validate();
  if (d.size() != phi_.cols()) throw ParameterError("shaper: d length must match Phi columns");
  if (!(evm_max > 0.0) || !std::isfinite(evm_max)) throw ParameterError("shaper: evm_max must be positive");

  const CVector xd = phi_ * d;
  const double alpha2 = xd.squaredNorm();
  if (!(alpha2 > 0.0)) throw DomainError("shaper: Phi d is zero");
  const double f_ref = sixth_power_value(xd);
  const RVector v_lin = stack(phi_.adjoint() * xd);
  const RVector q_osb = stack(e_ * d);
  const double lin0 = 0.5 * alpha2 * evm_max * evm_max;
  const double rho2 = evm_max * evm_max * alpha2;
  const int dim = static_cast<int>(2 * d.size());
  constexpr double kInnerTol = 1e-9;
  constexpr double kArmijo = 0.01;
  constexpr double kShrink = 0.5;
  constexpr int kNumConstraints = 3;

  // Strictly feasible start e0 = -delta d.
  const double delta = 0.5 * std::min(evm_max, 0.5 * evm_max * evm_max);
  RVector z = -delta * stack(d);
  CVector xe = -delta * xd;

  auto slacks = [&](const RVector& zz, const CVector& xx) {
    const RVector ez = e_real_ * zz;
    return std::array<double, 3>{v_lin.dot(zz) + lin0, rho2 - xx.squaredNorm(),
                                 -2.0 * q_osb.dot(zz) - zz.dot(ez)};
  };
  auto merit = [&](double t, const CVector& xx, const std::array<double, 3>& g) {
    double val = t * sixth_power_change(xd, xx) / f_ref;
    for (double gi : g) val -= std::log(gi);
    return val;
  };

  ShapingSolution sol;
  double t = opts.initial_weight;
  bool gap_ok = false;
  bool center_ok = false;
  RVector grad(dim);
  RMatrix hess(dim, dim);
  Eigen::LDLT<RMatrix> ldlt(dim);

  for (int outer = 0; outer < opts.max_outer; ++outer) {
    center_ok = false;
    for (int inner = 0; inner < opts.max_inner; ++inner) {
      ++sol.inner_iterations;
      const auto g = slacks(z, xe);
      grad.setZero();
      hess.setZero();
      add_sixth_power(xd + xe, phi_real_, t / f_ref, grad, &hess);
      const RVector dg2 = -2.0 * (gram_real_ * z);
      const RVector dg3 = -2.0 * q_osb - 2.0 * (e_real_ * z);
      grad += -v_lin / g[0] - dg2 / g[1] - dg3 / g[2];
      hess.noalias() += (v_lin * v_lin.transpose()) / (g[0] * g[0]);
      hess.noalias() += (dg2 * dg2.transpose()) / (g[1] * g[1]) + (2.0 / g[1]) * gram_real_;
      hess.noalias() += (dg3 * dg3.transpose()) / (g[2] * g[2]) + (2.0 / g[2]) * e_real_;

      // With a tiny EVM budget the barrier terms swamp the rest of the
      // Hessian and LDL^T loses definiteness to rounding. The fallback
      // factors the stacked square root instead, which squares the
      // conditioning away.
      auto root_step = [&]() -> RVector {
        const Eigen::Index np = phi_real_.rows();
        RMatrix b(2 * np + e_root_.rows() + 3, dim);
        b.topRows(np) = std::sqrt(t / f_ref) * sixth_power_root(xd + xe, phi_real_);
        b.row(np) = v_lin.transpose() / g[0];
        b.row(np + 1) = dg2.transpose() / g[1];
        b.middleRows(np + 2, np) = std::sqrt(2.0 / g[1]) * phi_real_;
        b.row(2 * np + 2) = dg3.transpose() / g[2];
        b.bottomRows(e_root_.rows()) = std::sqrt(2.0 / g[2]) * e_root_;
        const Eigen::HouseholderQR<RMatrix> qr(b);
        const auto r = qr.matrixQR().topRows(dim).triangularView<Eigen::Upper>();
        RVector y = r.transpose().solve(-grad);
        return r.solve(y);
      };

      const double psi0 = merit(t, xe, g);
      const double slack_round = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(psi0);
      bool moved = false;
      bool centered = false;
      double decrement = 0.0;
      ldlt.compute(hess);
      const bool ldlt_ok = ldlt.info() == Eigen::Success;
      for (int attempt = ldlt_ok ? 0 : 1; attempt < 2 && !moved && !centered; ++attempt) {
        const RVector step = attempt == 0 ? RVector(ldlt.solve(-grad)) : root_step();
        decrement = -grad.dot(step);
        if (!std::isfinite(decrement) || decrement < 0.0) continue;
        if (0.5 * decrement <= kInnerTol) {
          centered = true;
          break;
        }
        const CVector dx = phi_ * unstack(step);
        double s = 1.0;
        while (s > 1e-14) {
          const RVector zn = z + s * step;
          const CVector xn = xe + s * dx;
          const auto gn = slacks(zn, xn);
          if (gn[0] > 0.0 && gn[1] > 0.0 && gn[2] > 0.0) {
            const double psi = merit(t, xn, gn);
            if (psi <= psi0 - kArmijo * s * decrement + slack_round) {
              z = zn;
              xe = xn;
              moved = true;
              break;
            }
          }
          s *= kShrink;
        }
      }
      if (centered) {
        center_ok = true;
        break;
      }
      if (!moved) {
        // Rounding floor reached: accept the current point as centered if the
        // remaining decrement is negligible.
        center_ok = 0.5 * decrement <= 1e-6;
        break;
      }
    }
    ++sol.outer_iterations;
    sol.trace.push_back(norm6(xd + xe));
    if (kNumConstraints / t < opts.tol) {
      gap_ok = true;
      break;
    }
    t *= opts.barrier_growth;
  }

  sol.c_bar = d + unstack(z);
  sol.residuals = evaluate(phi_, e_, d, sol.c_bar, evm_max, 1e-6);
  sol.converged = gap_ok && center_ok;
  if (!sol.converged) sol.message = gap_ok ? "centering did not converge" : "barrier gap above tolerance";
  if (!sol.residuals.feasible) {
    sol.c_bar = d;
    sol.residuals = evaluate(phi_, e_, d, d, evm_max, 1e-6);
    sol.converged = false;
    sol.message = "iterate left the feasible set; returning the unshaped block";
  }
  sol.objective = norm6(phi_ * sol.c_bar);
  return sol;
}

ShapingSolution solve_offset(const ShapingProblem& problem, const SolverOptions& opts) {
  problem.validate();
  return OffsetShaper(problem.phi_bar, problem.e_bar).solve(problem.d_bar, problem.evm_max, opts);
}

}  // namespace cpsofdm
