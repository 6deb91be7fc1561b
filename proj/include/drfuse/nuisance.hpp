#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

namespace drfuse {

/// L-fold partition of 1..n, stratified by group where every group has at least L units.
struct CrossFitPlan {
  int n_folds = 5;
  std::vector<int> fold_of;  // 0-based fold per unit
  std::uint64_t seed = 0;
  bool stratified = true;

  int n() const { return static_cast<int>(fold_of.size()); }
  std::vector<int> units_in(int fold) const;
  std::vector<int> units_not_in(int fold) const;
};

/// `groups` holds 1-based group labels per unit.
CrossFitPlan make_folds(int n, const std::vector<int>& groups, int n_folds, std::uint64_t seed);

enum class OutcomeModel { ridge_poly2, bagged_trees };

OutcomeModel parse_outcome_model(const std::string& s);
const char* to_string(OutcomeModel m) noexcept;

struct NuisanceOptions {
  int folds = 5;
  OutcomeModel outcome_model = OutcomeModel::ridge_poly2;
  double clip_lo = 0.01;
  double clip_hi = 0.99;
  double propensity_ridge = 1e-4;
  double outcome_ridge = 1e-3;
  int n_trees = 100;
  int tree_depth = 4;
  int min_leaf = 5;
  std::uint64_t seed = 1;
  int threads = 1;
};

struct NuisanceEstimates {
  Eigen::MatrixXd pi_hat;  // n × m, clipped and renormalized
  Eigen::MatrixXd mu_hat;  // n × m
  double clip_lo = 0.01;
  double clip_hi = 0.99;
};

/// Multinomial logistic regression with a ridge penalty, fitted by damped Newton.
class MultinomialLogit {
 public:
  /// `features` excludes the intercept; labels are 1..m.
  void fit(const Eigen::MatrixXd& features, const std::vector<int>& labels, int m, double ridge);
  Eigen::MatrixXd predict(const Eigen::MatrixXd& features) const;
  bool converged() const { return converged_; }

 private:
  Eigen::MatrixXd coef_;  // (q+1) × (m-1); class m is the reference
  int m_ = 0;
  bool converged_ = false;
};

/// Out-of-fold softmax probabilities (unclipped) from per-fold multinomial logistic fits.
Eigen::MatrixXd fit_propensity(const Eigen::MatrixXd& features, const std::vector<int>& groups, int m,
                               const CrossFitPlan& plan, const NuisanceOptions& opts = {});

/// Out-of-fold predictions of every group's outcome model at every unit.
Eigen::MatrixXd fit_outcome(const Eigen::MatrixXd& features, const Eigen::VectorXd& y, const std::vector<int>& groups,
                            int m, const CrossFitPlan& plan, const NuisanceOptions& opts = {});

/// Clips each row into [lo, hi] and rescales it to sum to one.
Eigen::MatrixXd clip_probabilities(const Eigen::MatrixXd& probs, double lo, double hi);

NuisanceEstimates estimate_nuisance(const Eigen::MatrixXd& features, const Eigen::VectorXd& y,
                                    const std::vector<int>& groups, int m, const CrossFitPlan& plan,
                                    const NuisanceOptions& opts = {});

/// Degree-2 polynomial expansion [x_j, x_j x_k (j <= k)] without intercept.
Eigen::MatrixXd poly2_expand(const Eigen::MatrixXd& features);

}  // namespace drfuse
