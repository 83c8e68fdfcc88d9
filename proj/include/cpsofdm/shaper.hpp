// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "cpsofdm/common.hpp"

namespace cpsofdm {

/// One block's offset-design instance over the data positions.
struct ShapingProblem {
  CMatrix phi_bar;  // N' x D
  CVector d_bar;    // D
  CMatrix e_bar;    // D x D Hermitian positive definite
  double evm_max = 0.0;  // linear amplitude ratio

  void validate() const;
};

/// Right-hand sides of the three constraints.
struct ConstraintRhs {
  double rho_lin = 0.0;  // ||Phi d||^2 (1 - evm_max^2 / 2)
  double rho_evm = 0.0;  // evm_max ||Phi d||
  double rho_osb = 0.0;  // d^H E d
};
ConstraintRhs constraint_rhs(const ShapingProblem& problem);

/// Slack of each constraint at a candidate point (positive = strictly inside).
struct FeasibilityReport {
  double slack_lin = 0.0;  // Re{c^H Phi^H Phi d} - rho_lin
  double slack_evm = 0.0;  // rho_evm - ||Phi (c - d)||
  double slack_osb = 0.0;  // d^H E d - c^H E c
  // Slacks divided by ||Phi d||^2, ||Phi d|| and d^H E d respectively.
  double rel_lin = 0.0;
  double rel_evm = 0.0;
  double rel_osb = 0.0;
  double evm = 0.0;       // ||Phi (c - d)|| / ||Phi d||
  bool feasible = false;  // all relative slacks >= -tol
  bool energy_kept = false;  // ||Phi c||^2 >= ||Phi d||^2 (reported, never enforced)
};
FeasibilityReport check_feasible(const CVector& c_bar, const ShapingProblem& problem, double tol = 1e-6);

struct SolverOptions {
  double tol = 1e-7;            // final barrier gap relative to the objective at d
  int max_outer = 60;
  int max_inner = 50;
  double barrier_growth = 10.0;  // mu
  double initial_weight = 1.0;   // t0

  void validate() const;
};

struct ShapingSolution {
  CVector c_bar;
  double objective = 0.0;  // ||Phi c||_6
  FeasibilityReport residuals;
  int outer_iterations = 0;
  int inner_iterations = 0;
  bool converged = false;
  std::vector<double> trace;  // ||Phi c||_6 after each outer iteration
  std::string message;
};

/// sum_n |x_n|^6 with x = Phi c, plus its gradient and Hessian with respect to
/// the real coordinates [Re c; Im c].
struct SixthPowerEval {
  double value = 0.0;
  RVector gradient;
  RMatrix hessian;
};
SixthPowerEval objective_6norm(const CVector& c_bar, const CMatrix& phi_bar, bool with_hessian = true);

/// (sum |x_n|^6)^(1/6).
double norm6(const CVector& x);

/// [Re A, -Im A; Im A, Re A], so that stack(A v) = real_form(A) stack(v).
RMatrix real_form(const CMatrix& a);
/// [Re v; Im v].
RVector stack(const CVector& v);
CVector unstack(const RVector& z);

/// Log-barrier interior-point solver sharing one (Phi, E) pair across blocks.
/// The optimization variable is the offset e = c - d, which keeps the method
/// accurate when the EVM budget is tiny. solve() is const and thread safe.
class OffsetShaper {
 public:
  OffsetShaper(CMatrix phi_bar, CMatrix e_bar);

  ShapingSolution solve(const CVector& d_bar, double evm_max, const SolverOptions& opts = {}) const;

  const CMatrix& phi() const { return phi_; }
  const CMatrix& e_matrix() const { return e_; }
  /// Smallest singular value of Phi relative to its largest.
  double column_rank_ratio() const { return rank_ratio_; }

 private:
  CMatrix phi_;
  CMatrix e_;
  RMatrix phi_real_;   // 2N' x 2D
  RMatrix gram_real_;  // real_form(Phi^H Phi)
  RMatrix e_real_;     // real_form(E)
  RMatrix e_root_;     // upper R with R^T R = e_real_
  double rank_ratio_ = 0.0;
};

ShapingSolution solve_offset(const ShapingProblem& problem, const SolverOptions& opts = {});

}  // namespace cpsofdm
