#include "drfuse/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"
#include "drfuse/parallel.hpp"

namespace drfuse {

namespace {

double choose2(double x) { return x * (x - 1.0) / 2.0; }

}  // namespace

double adjusted_rand_index(const std::vector<int>& p1, const std::vector<int>& p2) {
  if (p1.size() != p2.size()) throw ValidationError("partitions must cover the same ground set");
  if (p1.size() < 2) throw ValidationError("adjusted Rand index needs at least two elements");
  std::map<std::pair<int, int>, double> table;
  std::map<int, double> rows;
  std::map<int, double> cols;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    table[{p1[i], p2[i]}] += 1.0;
    rows[p1[i]] += 1.0;
    cols[p2[i]] += 1.0;
  }
  double index = 0.0;
  for (const auto& [key, c] : table) index += choose2(c);
  double a = 0.0;
  for (const auto& [key, c] : rows) a += choose2(c);
  double b = 0.0;
  for (const auto& [key, c] : cols) b += choose2(c);
  const double total = choose2(static_cast<double>(p1.size()));
  const double expected = a * b / total;
  const double max_index = 0.5 * (a + b);
  if (max_index == expected) return 1.0;
  return (index - expected) / (max_index - expected);
}

Method parse_method(const std::string& s) {
  if (s == "baseline") return Method::baseline;
  if (s == "fusion") return Method::fusion;
  if (s == "cw_fusion") return Method::cw_fusion;
  if (s == "linear_ma") return Method::linear_ma;
  throw ValidationError("unknown method '" + s + "' (expected baseline, fusion, cw_fusion or linear_ma)");
}

const char* to_string(Method m) noexcept {
  switch (m) {
    case Method::baseline: return "baseline";
    case Method::fusion: return "fusion";
    case Method::cw_fusion: return "cw_fusion";
    case Method::linear_ma: return "linear_ma";
  }
  return "?";
}

std::vector<Method> parse_methods(const std::string& comma_list) {
  std::vector<Method> out;
  std::stringstream ss(comma_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    const Method m = parse_method(item);
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw ValidationError("method list is empty");
  return out;
}

const MethodSummary& BenchResult::of(Method m) const {
  for (const auto& s : summary)
    if (s.method == m) return s;
  throw ValidationError(std::string("method not in benchmark: ") + to_string(m));
}

Stat summarize(const std::vector<double>& values) {
  Stat s;
  double sum = 0.0;
  for (double v : values)
    if (std::isfinite(v)) {
      sum += v;
      ++s.count;
    }
  if (s.count == 0) {
    s.mean = s.se = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  s.mean = sum / s.count;
  if (s.count > 1) {
    double ss = 0.0;
    for (double v : values)
      if (std::isfinite(v)) ss += (v - s.mean) * (v - s.mean);
    s.se = std::sqrt(ss / (s.count - 1)) / std::sqrt(static_cast<double>(s.count));
  }
  return s;
}

double grouped_true_value(const std::vector<int>& group_actions, const GroupMapping& groups, int k,
                          synth::ScenarioKind kind, const Eigen::MatrixXd& population) {
  if (static_cast<Eigen::Index>(group_actions.size()) != population.rows())
    throw ValidationError("one action per population row is required");
  const auto members = groups.members();
  double total = 0.0;
  for (Eigen::Index i = 0; i < population.rows(); ++i) {
    const auto& mem = members[static_cast<std::size_t>(group_actions[static_cast<std::size_t>(i)] - 1)];
    double v = 0.0;
    for (int a : mem)
      v += synth::group_mean(kind, synth::true_group_of(a, k), population(i, 1), population(i, 2), population(i, 3));
    total += v / static_cast<double>(mem.size());
  }
  return total / static_cast<double>(population.rows());
}

namespace {

std::vector<RepRecord> run_replication(const BenchOptions& opts, int rep) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  synth::ScenarioConfig cfg = opts.scenario;
  const std::uint64_t seed = opts.base_seed + static_cast<std::uint64_t>(rep);
  cfg.seed = seed;
  const synth::OracleScenario sc = synth::generate(cfg);
  const Dataset& d = sc.dataset;
  const int k = d.k;

  std::optional<Eigen::MatrixXd> population;
  auto test_population = [&]() -> const Eigen::MatrixXd& {
    if (!population) population = synth::draw_population(cfg, opts.n_test, seed * 7919ULL + 17ULL);
    return *population;
  };
  PolicyConfig pcfg = opts.policy;
  pcfg.nuisance.seed = seed;
  pcfg.nuisance.threads = 1;

  // The unweighted fit is shared by fusion and linear_ma.
  std::optional<FusionResult> plain;
  auto plain_fit = [&]() -> const FusionResult& {
    if (!plain) plain = fuse(d, uniform_weights(d).weights, opts.fusion);
    return *plain;
  };

  std::vector<RepRecord> out;
  for (Method method : opts.methods) {
    RepRecord rec;
    rec.rep = rep;
    rec.method = method;
    rec.ari = nan;
    rec.value = nan;
    try {
      GroupMapping groups;
      const FusionResult* fr = nullptr;
      FusionResult cw;
      switch (method) {
        case Method::baseline:
          groups = GroupMapping::identity(k);
          break;
        case Method::fusion:
        case Method::linear_ma:
          fr = &plain_fit();
          groups = fr->groups;
          break;
        case Method::cw_fusion: {
          const CalibrationResult cal = calibrate_all(d, opts.calibration, cfg.calibration_covariates, 1);
          cw = fuse(d, cal.weights, opts.fusion);
          fr = &cw;
          groups = cw.groups;
          break;
        }
      }
      rec.m_hat = groups.m;
      if (method != Method::baseline) rec.ari = adjusted_rand_index(groups.delta, sc.true_groups.delta);

      if (opts.evaluate_policy) {
        const Eigen::MatrixXd& pop = test_population();
        std::vector<int> actions(static_cast<std::size_t>(pop.rows()));
        if (method == Method::linear_ma) {
          // refit_beta has one (group-shared) row per treatment.
          const Eigen::MatrixXd fitted = pop * fr->refit_beta.transpose();
          for (Eigen::Index i = 0; i < pop.rows(); ++i) {
            Eigen::Index best = 0;
            fitted.row(i).maxCoeff(&best);
            actions[static_cast<std::size_t>(i)] = groups.group_of(static_cast<int>(best) + 1);
          }
        } else {
          const PolicyResult pr = learn_policy(d, groups, pcfg);
          for (Eigen::Index i = 0; i < pop.rows(); ++i)
            actions[static_cast<std::size_t>(i)] = pr.tree.predict_full(pop.row(i));
        }
        rec.value = grouped_true_value(actions, groups, k, cfg.kind, pop);
      }
    } catch (const Error& e) {
      rec.ok = false;
      rec.error = e.what();
      rec.ari = rec.value = nan;
      rec.m_hat = 0;
    }
    out.push_back(rec);
  }
  return out;
}

}  // namespace

BenchResult run_benchmark(const BenchOptions& opts) {
  if (opts.methods.empty()) throw ValidationError("at least one method is required");
  if (opts.reps < 1) throw ValidationError("number of replications must be positive");
  if (opts.n_test < 1) throw ValidationError("test population size must be positive");
  opts.scenario.validate();

  std::vector<std::vector<RepRecord>> per_rep(static_cast<std::size_t>(opts.reps));
  {
    diag::ScopedSilence quiet;
    parallel_for(per_rep.size(), opts.threads,
                 [&](std::size_t r) { per_rep[r] = run_replication(opts, static_cast<int>(r)); });
  }

  BenchResult res;
  for (auto& v : per_rep)
    for (auto& rec : v) res.records.push_back(std::move(rec));
  for (Method m : opts.methods) {
    MethodSummary s;
    s.method = m;
    std::vector<double> ari, mh, val;
    for (const auto& rec : res.records) {
      if (rec.method != m) continue;
      if (!rec.ok) {
        ++s.failures;
        continue;
      }
      ++s.completed;
      ari.push_back(rec.ari);
      mh.push_back(rec.m_hat);
      val.push_back(rec.value);
    }
    s.ari = summarize(ari);
    s.m_hat = summarize(mh);
    s.value = summarize(val);
    res.summary.push_back(s);
  }
  for (const auto& s : res.summary)
    if (s.failures > 0)
      diag::warn(std::string(to_string(s.method)) + ": " + std::to_string(s.failures) +
                 " replication(s) failed and were excluded");
  return res;
}

namespace {

std::string num(double v) { return std::isfinite(v) ? format_number(v) : "NA"; }

}  // namespace

void write_summary_csv(const BenchResult& r, std::ostream& out, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "method,ari_mean,ari_se,groups_mean,groups_se,value_mean,value_se,completed,failures\n";
  for (const auto& s : r.summary) {
    out << to_string(s.method) << ',' << num(s.ari.mean) << ',' << num(s.ari.se) << ',' << num(s.m_hat.mean) << ','
        << num(s.m_hat.se) << ',' << num(s.value.mean) << ',' << num(s.value.se) << ',' << s.completed << ','
        << s.failures << '\n';
  }
}

void write_records_csv(const BenchResult& r, std::ostream& out, const std::string& header_comment) {
  if (!header_comment.empty()) out << "# " << header_comment << '\n';
  out << "rep,method,ok,ari,groups,value,error\n";
  for (const auto& rec : r.records) {
    std::string err = rec.error;
    std::replace(err.begin(), err.end(), '"', '\'');
    out << rec.rep << ',' << to_string(rec.method) << ',' << (rec.ok ? 1 : 0) << ',' << num(rec.ari) << ','
        << rec.m_hat << ',' << num(rec.value) << ",\"" << err << "\"\n";
  }
}

}  // namespace drfuse
