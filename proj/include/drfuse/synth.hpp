#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "drfuse/dataset.hpp"

namespace drfuse::synth {

enum class ScenarioKind { nonlinear, linear };

ScenarioKind parse_kind(const std::string& s);
const char* to_string(ScenarioKind k) noexcept;

// Four true groups of k/4 consecutive treatments; covariate patterns cycle over
// treatments. Features are X1 (binary), X2, X3 plus the intercept.
struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::nonlinear;
  int k = 16;
  int n_total = 1800;
  double noise_sd = 1.0;
  std::uint64_t seed = 1;
  // Feature columns of x used for calibration weighting; empty means all non-intercept columns.
  std::vector<int> calibration_covariates;

  void validate() const;
};

inline constexpr int kGroups = 4;
inline constexpr int kPatterns = 4;

/// Pattern (0-based) of treatment `arm` (1-based).
int pattern_of(int arm);
/// True group (1-based) of treatment `arm` under k treatments.
int true_group_of(int arm, int k);
/// Per-treatment sample sizes; rescaled from 150/125/100/75 and exact in total.
std::vector<int> scenario_arm_sizes(const ScenarioConfig& cfg);

/// Noiseless mean outcome of true group `group` (1-based) at covariates (x1, x2, x3).
double group_mean(ScenarioKind kind, int group, double x1, double x2, double x3);

struct OracleScenario {
  Dataset dataset;
  GroupMapping true_groups;
  ScenarioKind kind = ScenarioKind::nonlinear;

  /// μ_b at a covariate row laid out as [1, X1, X2, X3].
  double mu(int group, const Eigen::Ref<const Eigen::RowVectorXd>& row) const {
    return group_mean(kind, group, row(1), row(2), row(3));
  }
};

OracleScenario generate(const ScenarioConfig& cfg);

/// Fresh covariate rows [1, X1, X2, X3] from the arm-size-weighted pattern mixture.
Eigen::MatrixXd draw_population(const ScenarioConfig& cfg, int n_test, std::uint64_t seed);

/// Mean of μ_{policy(x)}(x) over the rows of `population`.
double true_value(const std::function<int(const Eigen::RowVectorXd&)>& policy, ScenarioKind kind,
                  const Eigen::MatrixXd& population);

/// Convenience form drawing `n_test` rows with `seed`.
double true_value(const std::function<int(const Eigen::RowVectorXd&)>& policy, const ScenarioConfig& cfg,
                  int n_test, std::uint64_t seed);

}  // namespace drfuse::synth
