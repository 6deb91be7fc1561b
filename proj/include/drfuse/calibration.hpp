#pragma once

#include <Eigen/Dense>
#include <vector>

#include "drfuse/dataset.hpp"

namespace drfuse {

/// Cressie–Read discrepancy with index `gamma` and its tilting function ρ_γ:
/// γ = -1 gives (1-x)^-1 (empirical likelihood), γ = 0 gives exp(x) (entropy),
/// otherwise (1+γx)^(1/γ).
struct CressieRead {
  double gamma = 0.0;

  bool in_domain(double x) const;
  /// ρ_γ(x); throws SolverError(DomainViolation) outside the domain.
  double rho(double x) const;
  double rho_derivative(double x) const;
  /// An antiderivative of ρ_γ; the dual objective sums it over the arm.
  double rho_integral(double x) const;
  /// h_γ(w) summed over an arm of size n_a, i.e. the primal objective.
  double discrepancy(const Eigen::VectorXd& weights) const;
};

double rho(const CressieRead& spec, double x);

struct CalibrationOptions {
  CressieRead divergence;
  double tol = 1e-8;
  int max_iter = 200;
  // A solve whose largest weight exceeds this is reported as NoOverlap.
  double max_weight = 0.9;
};

struct ArmCalibration {
  Eigen::VectorXd weights;
  Eigen::VectorXd lambda;
  double residual = 0.0;
  int iterations = 0;
};

/// Solves for weights w_i ∝ ρ_γ(λᵀ(x_i - target)) with Σw_i = 1 and Σw_i x_i = target.
/// `x_arm` holds only the calibrated columns (n_a × q). Throws SolverError on
/// NoOverlap, DomainViolation or MaxIterations.
ArmCalibration solve_arm(const Eigen::MatrixXd& x_arm, const Eigen::VectorXd& target,
                         const CalibrationOptions& opts = {});

/// Closed-form weights for a given dual vector.
Eigen::VectorXd tilted_weights(const Eigen::MatrixXd& x_arm, const Eigen::VectorXd& target,
                               const Eigen::VectorXd& lambda, const CressieRead& spec);

struct CalibrationResult {
  Eigen::VectorXd weights;             // length n; weights of each arm sum to 1
  std::vector<Eigen::VectorXd> lambda;  // per arm, one entry per calibrated column
  std::vector<double> residual;         // per arm max-abs moment violation
  std::vector<int> iterations;
  std::vector<int> columns;             // calibrated columns of x
};

/// Calibrates every arm to the pooled mean of `columns` (defaults to all non-intercept columns).
/// Failures carry the 1-based arm id.
CalibrationResult calibrate_all(const Dataset& d, const CalibrationOptions& opts = {},
                                std::vector<int> columns = {}, int threads = 1);

/// Weights 1/n_a within each arm, the λ = 0 solution.
CalibrationResult uniform_weights(const Dataset& d);

}  // namespace drfuse
