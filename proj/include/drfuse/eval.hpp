#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "drfuse/calibration.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/policy.hpp"
#include "drfuse/synth.hpp"

namespace drfuse {

/// Pair-counting adjusted Rand index of two labelings of the same ground set.
/// Returns 1 when both partitions are trivial in the same way (all-singletons or all-one).
double adjusted_rand_index(const std::vector<int>& p1, const std::vector<int>& p2);

enum class Method { baseline, fusion, cw_fusion, linear_ma };

Method parse_method(const std::string& s);
const char* to_string(Method m) noexcept;
std::vector<Method> parse_methods(const std::string& comma_list);

struct BenchOptions {
  synth::ScenarioConfig scenario;
  std::vector<Method> methods{Method::baseline, Method::fusion, Method::cw_fusion, Method::linear_ma};
  int reps = 50;
  std::uint64_t base_seed = 1;
  int n_test = 100000;
  // When false only the grouping metrics are computed; value is left NaN.
  bool evaluate_policy = true;
  CalibrationOptions calibration;
  FusionOptions fusion;
  PolicyConfig policy;
  int threads = 1;
};

struct RepRecord {
  int rep = 0;
  Method method = Method::baseline;
  bool ok = true;
  double ari = 0.0;  // NaN for baseline
  int m_hat = 0;
  double value = 0.0;  // NaN when policies are not evaluated
  std::string error;
};

struct Stat {
  double mean = 0.0;
  double se = 0.0;
  int count = 0;
};

struct MethodSummary {
  Method method = Method::baseline;
  int completed = 0;
  int failures = 0;
  Stat ari;
  Stat m_hat;
  Stat value;
};

struct BenchResult {
  std::vector<RepRecord> records;  // ordered by (rep, method list order)
  std::vector<MethodSummary> summary;

  const MethodSummary& of(Method m) const;
};

/// Mean and sample-sd/√count over the finite entries.
Stat summarize(const std::vector<double>& values);

/// Replication r uses seed base_seed + r for data, nuisance folds and the test population.
BenchResult run_benchmark(const BenchOptions& opts);

/// Expected true value of a group-level rule whose recommendation is a uniformly chosen member.
double grouped_true_value(const std::vector<int>& group_actions, const GroupMapping& groups, int k,
                          synth::ScenarioKind kind, const Eigen::MatrixXd& population);

void write_summary_csv(const BenchResult& r, std::ostream& out, const std::string& header_comment = {});
void write_records_csv(const BenchResult& r, std::ostream& out, const std::string& header_comment = {});

}  // namespace drfuse
