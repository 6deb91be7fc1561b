#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "drfuse/dataset.hpp"

namespace drfuse {

enum class PenaltyKind { l1, mcp };

PenaltyKind parse_penalty(const std::string& s);
const char* to_string(PenaltyKind k) noexcept;

/// Pairwise fusion penalty p_λ applied to ‖β_a - β_a'‖₁. MCP is flat beyond c·λ.
struct PenaltySpec {
  PenaltyKind kind = PenaltyKind::l1;
  double lambda = 0.0;
  double mcp_c = 3.0;

  double value(double t) const;
  /// Right derivative of p_λ at t ≥ 0.
  double derivative(double t) const;
};

/// Proximal map of step·p_λ(‖·‖₁) at z. For l1 this is elementwise soft-thresholding
/// at step·λ; for MCP the exact global minimizer over the soft-threshold path.
Eigen::VectorXd prox_pairwise(const Eigen::VectorXd& z, const PenaltySpec& pen, double step);

struct AdmmOptions {
  double rho = 1.0;
  double abs_tol = 1e-5;
  int max_iter = 5000;
  bool residual_balancing = true;
};

enum class MainEffectMode { pooled_ols, zero };

MainEffectMode parse_main_effect(const std::string& s);
const char* to_string(MainEffectMode m) noexcept;

/// Coefficients of the main-effect fit M₀(x) = xᵀm (zero vector for mode=zero).
Eigen::VectorXd fit_main_effect(const Dataset& d, MainEffectMode mode);
/// Ỹ = Y - X m.
Eigen::VectorXd transform_outcome(const Dataset& d, const Eigen::VectorXd& m0);

struct FusedFit {
  Eigen::MatrixXd beta;  // k × p
  int iterations = 0;
  bool converged = false;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
};

/// ADMM for the calibration-weighted fused least squares problem
///   (1/2n) Σ_a Σ_{i∈a} w_i (ỹ_i - x_iᵀβ_a)² + Σ_{a<a'} p_λ(‖β_a - β_a'‖₁)
/// over auxiliary pairwise differences. MCP is handled by local linear
/// approximation: weighted-l1 fits with edge penalties p'_λ at the current
/// differences, repeated until β settles. Successive fit() calls warm-start from
/// the previous primal/dual state.
class FusedLassoSolver {
 public:
  FusedLassoSolver(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights);

  FusedFit fit(const PenaltySpec& pen, const AdmmOptions& opts = {});

  /// Exact objective at beta (differences taken from beta itself).
  double objective(const Eigen::MatrixXd& beta, const PenaltySpec& pen) const;
  /// Objective value recorded after each iteration of the most recent fit.
  const std::vector<double>& trace() const { return trace_; }
  void set_record_trace(bool on) { record_trace_ = on; }

  /// Smallest λ for which the pooled fit satisfies the l1 fusion optimality conditions.
  double lambda_fuse_all() const;

  int k() const { return k_; }
  int p() const { return p_; }

 private:
  void reset_state();
  FusedFit run_admm(const std::vector<double>& edge_lambda, const PenaltySpec& pen, const AdmmOptions& opts);
  void factorize(double rho);
  Eigen::MatrixXd solve_beta(double rho) const;

  int k_ = 0;
  int p_ = 0;
  int n_ = 0;
  std::vector<Eigen::MatrixXd> gram_;  // X_aᵀ W_a X_a
  std::vector<Eigen::VectorXd> xty_;   // X_aᵀ W_a ỹ_a
  double wy2_ = 0.0;                   // Σ w_i ỹ_i²
  std::vector<std::pair<int, int>> edges_;

  // ADMM state; delta_/dual_ are p × |edges|.
  Eigen::MatrixXd beta_;
  Eigen::MatrixXd delta_;
  Eigen::MatrixXd dual_;
  bool has_state_ = false;

  double factor_rho_ = -1.0;
  std::vector<Eigen::MatrixXd> arm_inverse_;
  Eigen::MatrixXd pooled_solve_;

  bool record_trace_ = false;
  std::vector<double> trace_;
};

FusedFit weighted_fused_fit(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                            const PenaltySpec& pen, const AdmmOptions& opts = {});

/// Single-linkage groups over pairs with ‖β_a - β_a'‖₂ < threshold, numbered by smallest member.
GroupMapping extract_groups(const Eigen::MatrixXd& beta, double threshold);

/// Per-group pooled weighted least squares, rows replicated within groups.
Eigen::MatrixXd oracle_refit(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                             const GroupMapping& groups);

/// Calibration-weighted residual sum of squares Σ w_i (ỹ_i - x_iᵀβ_{a_i})².
double weighted_rss(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                    const Eigen::MatrixXd& beta);

struct EbicPoint {
  double lambda = 0.0;
  double ebic = 0.0;
  int m_hat = 0;
  double wrss = 0.0;
  int iterations = 0;
  bool converged = true;
};

struct FusionOptions {
  PenaltyKind penalty = PenaltyKind::l1;
  double mcp_c = 3.0;
  AdmmOptions admm;
  double threshold = 0.25;
  double ebic_gamma = 0.5;
  std::vector<double> lambda_grid;  // empty: automatic grid
  int grid_size = 30;
  double grid_ratio = 1e-3;
  MainEffectMode main_effect = MainEffectMode::pooled_ols;
};

struct FusionResult {
  Eigen::MatrixXd beta;        // fused estimate at lambda_selected
  Eigen::MatrixXd refit_beta;  // oracle_refit on the selected groups
  double lambda_selected = 0.0;
  std::vector<EbicPoint> ebic_path;  // ascending in lambda
  GroupMapping groups;
  Eigen::VectorXd m0_coefficients;
};

/// EBIC = n log(WRSS/n) + df log n + 2 γ_e df log(k p), df = m_hat · p.
double ebic_value(int n, int k, int p, double wrss, int m_hat, double ebic_gamma);

/// Automatic grid: λ_max is the smallest value on a halving search from the
/// all-fused bound that still yields one group; then `size` log-spaced values
/// from λ_max down to λ_max·ratio.
std::vector<double> default_lambda_grid(FusedLassoSolver& solver, const FusionOptions& opts);

/// Fits every grid value (warm-started, descending), scores each by EBIC and
/// returns the minimizer. Ties go to the larger λ.
FusionResult ebic_select(const Dataset& d, const Eigen::VectorXd& ytilde, const Eigen::VectorXd& weights,
                         const FusionOptions& opts);

/// Main effect, outcome transform and ebic_select in one call.
FusionResult fuse(const Dataset& d, const Eigen::VectorXd& weights, const FusionOptions& opts = {});

}  // namespace drfuse
