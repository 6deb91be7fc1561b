#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drfuse/dataset.hpp"
#include "drfuse/nuisance.hpp"

namespace drfuse {

struct AipwScores {
  Eigen::MatrixXd gamma;  // n × m
  int m() const { return static_cast<int>(gamma.cols()); }
  int n() const { return static_cast<int>(gamma.rows()); }
};

/// Γ_{i,b} = 1{B_i=b}(Y_i - μ̂_{B_i}(X_i))/π̂_{B_i}(X_i) + μ̂_b(X_i). `groups` are 1-based per unit.
AipwScores aipw_scores(const Eigen::VectorXd& y, const std::vector<int>& groups, const NuisanceEstimates& nuis);

/// Depth-limited axis-aligned decision tree; traversal goes left when x_j < threshold.
struct PolicyTree {
  struct Node {
    int feature = -1;  // index into the policy covariates; -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int action = 1;
  };

  std::vector<Node> nodes;  // nodes[0] is the root
  int depth = 0;            // search depth the tree was fitted with
  int n_actions = 1;
  std::vector<int> columns;                // columns of the dataset x used as policy covariates
  std::vector<std::string> feature_names;  // names of those columns

  static PolicyTree leaf(int action, int n_actions = 1);

  /// `row` holds the policy covariates only.
  int predict(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  std::vector<int> predict_all(const Eigen::MatrixXd& x_policy) const;
  /// `row` is a full dataset row; the policy columns are picked out.
  int predict_full(const Eigen::Ref<const Eigen::RowVectorXd>& row) const;
  /// Length of the longest root-to-leaf path.
  int height() const;
  int n_leaves() const;

  std::string to_json(int indent = 2) const;
  static PolicyTree from_json(const std::string& text);
  std::string to_dot() const;
};

/// (1/n) Σ_i Γ_{i, actions_i}.
double estimate_value(const AipwScores& scores, const std::vector<int>& actions);
double estimate_value(const AipwScores& scores, const PolicyTree& tree, const Eigen::MatrixXd& x_policy);
double estimate_value(const AipwScores& scores, const std::function<int(const Eigen::RowVectorXd&)>& rule,
                      const Eigen::MatrixXd& x_policy);

/// Midpoints between consecutive distinct values of each column. When a column has more
/// than `max_splits` midpoints and `exact` is false, `max_splits` of them are kept at
/// evenly spaced quantile positions.
std::vector<std::vector<double>> make_split_candidates(const Eigen::MatrixXd& x_policy, int max_splits = 64,
                                                       bool exact = false);

struct TreeSearchResult {
  PolicyTree tree;
  double value = 0.0;  // estimate_value of the returned tree
};

/// Exhaustive search for the depth-≤D tree maximizing the estimated value with thresholds
/// restricted to `candidates`. Ties go to a leaf, then lowest feature, threshold and action.
TreeSearchResult exact_tree_search(const AipwScores& scores, const Eigen::MatrixXd& x_policy, int depth,
                                   const std::vector<std::vector<double>>& candidates, int threads = 1);

struct PolicyConfig {
  int depth = 3;
  std::vector<int> policy_columns;  // columns of x; empty means every non-intercept column
  int max_splits = 64;
  bool exact_splits = false;
  NuisanceOptions nuisance;
};

struct PolicyDiagnostics {
  CrossFitPlan plan;
  NuisanceEstimates nuisance;
  AipwScores scores;
  std::vector<int> group_of_unit;
  double clipped_fraction = 0.0;  // share of π̂ entries sitting at a clip bound
};

struct PolicyResult {
  PolicyTree tree;
  double value = 0.0;
  PolicyDiagnostics diagnostics;
};

/// Cross-fitted AIPW policy learning over treatment groups: folds, propensity, outcome,
/// scores and exact tree search. Nuisance models use every non-intercept column.
PolicyResult learn_policy(const Dataset& d, const GroupMapping& groups, const PolicyConfig& cfg);

/// Resolves policy_columns against the dataset (validated, intercept excluded).
std::vector<int> resolve_policy_columns(const Dataset& d, const std::vector<int>& requested);

/// Per-entry treatment drawn uniformly from the members of the recommended group.
std::vector<int> materialize_treatment(const std::vector<int>& group_actions, const GroupMapping& groups,
                                       std::uint64_t seed);

}  // namespace drfuse
