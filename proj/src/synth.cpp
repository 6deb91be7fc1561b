#include "drfuse/synth.hpp"

#include <array>
#include <cmath>
#include <numeric>
#include <random>

#include "drfuse/errors.hpp"

namespace drfuse::synth {

namespace {

constexpr std::array<double, kPatterns> kPatternSize = {150.0, 125.0, 100.0, 75.0};
constexpr std::array<double, kPatterns> kPatternX1 = {0.3, 0.4, 0.5, 0.6};
constexpr int kReferenceK = 16;
constexpr int kReferenceN = 1800;

double sign(double v) { return static_cast<double>((v > 0.0) - (v < 0.0)); }

// Draws (X1, X2, X3) for one unit of the given covariate pattern.
struct CovariateSampler {
  std::normal_distribution<double> normal{0.0, 1.0};

  Eigen::Vector3d operator()(int pattern, std::mt19937_64& rng) {
    std::bernoulli_distribution bern(kPatternX1[static_cast<std::size_t>(pattern)]);
    const double x1 = bern(rng) ? 1.0 : 0.0;
    const double z1 = normal(rng);
    const double z2 = normal(rng);
    // X1=1: mean (1,-1), off-diagonal -0.25; X1=0: mean (-1,1), off-diagonal -0.3.
    const double r = x1 == 1.0 ? -0.25 : -0.3;
    const double m2 = x1 == 1.0 ? 1.0 : -1.0;
    const double x2 = m2 + z1;
    const double x3 = -m2 + r * z1 + std::sqrt(1.0 - r * r) * z2;
    return {x1, x2, x3};
  }
};

}  // namespace

ScenarioKind parse_kind(const std::string& s) {
  if (s == "nonlinear") return ScenarioKind::nonlinear;
  if (s == "linear") return ScenarioKind::linear;
  throw ValidationError("unknown scenario kind '" + s + "' (expected nonlinear|linear)");
}

const char* to_string(ScenarioKind k) noexcept {
  return k == ScenarioKind::nonlinear ? "nonlinear" : "linear";
}

void ScenarioConfig::validate() const {
  if (k < 4 || k % 4 != 0) throw ValidationError("scenario k must be a positive multiple of 4");
  if (n_total < k) throw ValidationError("scenario n_total must be at least k");
  if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ValidationError("noise_sd must be finite and >= 0");
  for (int c : calibration_covariates) {
    if (c < 1 || c > 3) throw ValidationError("calibration covariate index outside 1..3");
  }
}

int pattern_of(int arm) { return (arm - 1) % kPatterns; }

int true_group_of(int arm, int k) { return (arm - 1) / (k / kGroups) + 1; }

std::vector<int> scenario_arm_sizes(const ScenarioConfig& cfg) {
  cfg.validate();
  const double scale = static_cast<double>(kReferenceK) / cfg.k * cfg.n_total / kReferenceN;
  std::vector<int> sizes(static_cast<std::size_t>(cfg.k));
  for (int arm = 1; arm <= cfg.k; ++arm) {
    sizes[static_cast<std::size_t>(arm - 1)] =
        static_cast<int>(std::lround(kPatternSize[static_cast<std::size_t>(pattern_of(arm))] * scale));
  }
  const int others = std::accumulate(sizes.begin(), sizes.end() - 1, 0);
  sizes.back() = cfg.n_total - others;
  for (int s : sizes) {
    if (s < 2) throw ValidationError("scenario leaves a treatment with fewer than 2 units");
  }
  return sizes;
}

double group_mean(ScenarioKind kind, int group, double x1, double x2, double x3) {
  if (kind == ScenarioKind::linear) {
    switch (group) {
      case 1: return 2.5 + 0.5 * x1 - 1.5 * x2 - x3;
      case 2: return x1 - 2.0 * x2 - 2.5 * x3;
      case 3: return 2.0 - 0.5 * x1 + 2.0 * x2 - 2.0 * x3;
      case 4: return -1.0 + x1 - x2 + x3;
      default: break;
    }
  } else {
    const double s = sign(x2 * x2 + 3.0 * x3 - 2.5);
    switch (group) {
      case 1: return 3.0 * std::exp(0.7 + 0.1 * x1 - 0.3 * x2 - 0.2 * x3 * x3 + 0.4 * s);
      case 2: return 3.0 * std::exp(0.5 + 0.1 * x1 + 0.15 * x2 - 0.3 * x3 * x3 + 0.5 * s);
      case 3: return 3.0 * std::exp(0.6 + 0.1 * x1 - 0.15 * x2 - 0.3 * x3 + 0.6 * s);
      case 4:
        return 3.0 * std::exp(0.6 + 0.1 * x1 + 0.2 * x2 - 0.1 * x3 - 0.1 * x3 * x3 +
                              0.7 * sign(x2 * x2 - x3 - 2.0));
      default: break;
    }
  }
  throw ValidationError("group index " + std::to_string(group) + " outside 1..4");
}

OracleScenario generate(const ScenarioConfig& cfg) {
  const auto sizes = scenario_arm_sizes(cfg);
  std::mt19937_64 rng(cfg.seed);
  CovariateSampler sampler;
  std::normal_distribution<double> noise(0.0, 1.0);

  Eigen::MatrixXd cov(cfg.n_total, 3);
  Eigen::VectorXd y(cfg.n_total);
  std::vector<int> a;
  a.reserve(static_cast<std::size_t>(cfg.n_total));
  Eigen::Index row = 0;
  for (int arm = 1; arm <= cfg.k; ++arm) {
    const int group = true_group_of(arm, cfg.k);
    for (int u = 0; u < sizes[static_cast<std::size_t>(arm - 1)]; ++u, ++row) {
      const Eigen::Vector3d xv = sampler(pattern_of(arm), rng);
      cov.row(row) = xv.transpose();
      y(row) = group_mean(cfg.kind, group, xv(0), xv(1), xv(2)) + cfg.noise_sd * noise(rng);
      a.push_back(arm);
    }
  }

  OracleScenario out;
  out.kind = cfg.kind;
  out.dataset = make_dataset(cov, std::move(a), std::move(y), {"X1", "X2", "X3"}, cfg.k);
  out.true_groups.delta.resize(static_cast<std::size_t>(cfg.k));
  for (int arm = 1; arm <= cfg.k; ++arm) out.true_groups.delta[static_cast<std::size_t>(arm - 1)] = true_group_of(arm, cfg.k);
  out.true_groups.m = kGroups;
  return out;
}

Eigen::MatrixXd draw_population(const ScenarioConfig& cfg, int n_test, std::uint64_t seed) {
  const auto sizes = scenario_arm_sizes(cfg);
  std::array<double, kPatterns> weight{};
  for (int arm = 1; arm <= cfg.k; ++arm) weight[static_cast<std::size_t>(pattern_of(arm))] += sizes[static_cast<std::size_t>(arm - 1)];
  std::discrete_distribution<int> pick(weight.begin(), weight.end());
  std::mt19937_64 rng(seed);
  CovariateSampler sampler;
  Eigen::MatrixXd out(n_test, 4);
  for (int i = 0; i < n_test; ++i) {
    const Eigen::Vector3d xv = sampler(pick(rng), rng);
    out(i, 0) = 1.0;
    out.block<1, 3>(i, 1) = xv.transpose();
  }
  return out;
}

double true_value(const std::function<int(const Eigen::RowVectorXd&)>& policy, ScenarioKind kind,
                  const Eigen::MatrixXd& population) {
  double total = 0.0;
  for (Eigen::Index i = 0; i < population.rows(); ++i) {
    const Eigen::RowVectorXd row = population.row(i);
    total += group_mean(kind, policy(row), row(1), row(2), row(3));
  }
  return population.rows() > 0 ? total / static_cast<double>(population.rows()) : 0.0;
}

double true_value(const std::function<int(const Eigen::RowVectorXd&)>& policy, const ScenarioConfig& cfg,
                  int n_test, std::uint64_t seed) {
  return true_value(policy, cfg.kind, draw_population(cfg, n_test, seed));
}

}  // namespace drfuse::synth
