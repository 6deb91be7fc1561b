#include <cmath>
#include <sstream>

#include "doctest.h"
#include "drfuse/errors.hpp"
#include "drfuse/eval.hpp"
#include "oracles.hpp"

using namespace drfuse;

TEST_CASE("ARI on analytic cases") {
  const std::vector<int> p{1, 1, 2, 2, 3};
  CHECK(adjusted_rand_index(p, p) == 1.0);
  CHECK(adjusted_rand_index(p, {7, 7, 4, 4, 9}) == 1.0);
  // Crossing blocks: no agreeing pairs, two pairs split each way. Pair counting gives
  // 2(0·0 - 2·2)/((2+2)(2+0) + (2+2)(2+0)) = -1/2.
  CHECK(std::abs(oracle::ari_pairs({1, 1, 2, 2}, {1, 2, 1, 2}) - (-0.5)) <= 1e-12);
  CHECK(std::abs(adjusted_rand_index({1, 1, 2, 2}, {1, 2, 1, 2}) - (-0.5)) <= 1e-12);
  CHECK(adjusted_rand_index({1, 2, 3}, {4, 5, 6}) == 1.0);
  CHECK_THROWS_AS(adjusted_rand_index({1}, {1}), ValidationError);
  CHECK_THROWS_AS(adjusted_rand_index({1, 2}, {1, 2, 3}), ValidationError);
}

TEST_CASE("property: ARI agrees with pair counting and is symmetric") {
  oracle::Rng rng(21);
  for (int rep = 0; rep < 300; ++rep) {
    const int n = rng.integer(2, 40);
    const int m1 = rng.integer(1, n);
    const int m2 = rng.integer(1, n);
    std::vector<int> a(static_cast<std::size_t>(n)), b(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      a[static_cast<std::size_t>(i)] = rng.integer(1, m1);
      b[static_cast<std::size_t>(i)] = rng.integer(1, m2);
    }
    const double v = adjusted_rand_index(a, b);
    CHECK(std::abs(v - oracle::ari_pairs(a, b)) <= 1e-12);
    CHECK(v == doctest::Approx(adjusted_rand_index(b, a)).epsilon(1e-14));
    CHECK(v <= 1.0 + 1e-12);
    CHECK(v >= -1.0 - 1e-12);
    CHECK(adjusted_rand_index(a, a) == 1.0);
  }
}

TEST_CASE("summaries use the sample standard deviation over finite entries") {
  const Stat s = summarize({1.0, 2.0, 3.0, std::nan("")});
  CHECK(s.count == 3);
  CHECK(s.mean == doctest::Approx(2.0));
  CHECK(s.se == doctest::Approx(1.0 / std::sqrt(3.0)));
  const Stat empty = summarize({});
  CHECK(empty.count == 0);
  CHECK(std::isnan(empty.mean));
  CHECK(summarize({4.0}).se == 0.0);
}

TEST_CASE("method names") {
  CHECK(parse_methods("cw_fusion,baseline,cw_fusion") == std::vector<Method>{Method::cw_fusion, Method::baseline});
  CHECK(std::string(to_string(Method::linear_ma)) == "linear_ma");
  CHECK_THROWS_AS(parse_methods("fusion,tree"), ValidationError);
  CHECK_THROWS_AS(parse_methods(""), ValidationError);
}

TEST_CASE("grouped true value averages over the recommended group's members") {
  Eigen::MatrixXd pop(2, 4);
  pop << 1, 0, 0.5, -0.2, 1, 1, -1.0, 2.0;
  using synth::group_mean;
  const auto kind = synth::ScenarioKind::nonlinear;
  // Treatments 1..16 with truth blocks of four; a group mixing treatments 4 and 5 spans true groups 1 and 2.
  std::vector<int> raw(16);
  for (int a = 1; a <= 16; ++a) raw[static_cast<std::size_t>(a - 1)] = a == 5 ? 1 : a;
  const GroupMapping g = GroupMapping::from_labels(raw);
  const int mixed = g.group_of(1);
  REQUIRE(g.members()[static_cast<std::size_t>(mixed - 1)] == std::vector<int>{1, 5});
  const double expect0 = 0.5 * (group_mean(kind, 1, 0, 0.5, -0.2) + group_mean(kind, 2, 0, 0.5, -0.2));
  const double expect1 = group_mean(kind, 4, 1, -1.0, 2.0);
  const double got = grouped_true_value({mixed, g.group_of(16)}, g, 16, kind, pop);
  CHECK(got == doctest::Approx(0.5 * (expect0 + expect1)).epsilon(1e-14));
  CHECK_THROWS_AS(grouped_true_value({1}, g, 16, kind, pop), ValidationError);
}

TEST_CASE("small benchmark is deterministic and well formed") {
  BenchOptions opts;
  opts.reps = 2;
  opts.n_test = 2000;
  opts.policy.depth = 1;
  opts.methods = {Method::baseline, Method::cw_fusion, Method::linear_ma};
  const BenchResult a = run_benchmark(opts);
  const BenchResult b = run_benchmark(opts);
  REQUIRE(a.records.size() == 6);
  CHECK(a.records[0].rep == 0);
  CHECK(a.records[1].method == Method::cw_fusion);
  for (std::size_t i = 0; i < a.records.size(); ++i) {
    CHECK(a.records[i].ok == b.records[i].ok);
    CHECK(a.records[i].m_hat == b.records[i].m_hat);
    CHECK((a.records[i].value == b.records[i].value || std::isnan(a.records[i].value)));
  }
  CHECK(a.of(Method::baseline).m_hat.mean == 16.0);
  CHECK(std::isnan(a.of(Method::baseline).ari.mean));
  CHECK(a.of(Method::cw_fusion).completed + a.of(Method::cw_fusion).failures == 2);
  CHECK_THROWS_AS(a.of(Method::fusion), ValidationError);

  std::ostringstream csv;
  write_summary_csv(a, csv, "note");
  const std::string text = csv.str();
  CHECK(text.rfind("# note\nmethod,ari_mean,ari_se,groups_mean,groups_se,value_mean,value_se,completed,failures\n", 0) ==
        0);
  CHECK(text.find("baseline,NA,NA,16,") != std::string::npos);
  std::ostringstream log;
  write_records_csv(a, log);
  const std::string rows = log.str();
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 7);

  opts.evaluate_policy = false;
  opts.methods = {Method::fusion};
  opts.reps = 1;
  const BenchResult c = run_benchmark(opts);
  CHECK(std::isnan(c.records[0].value));
  CHECK(c.records[0].m_hat >= 1);
  opts.reps = 0;
  CHECK_THROWS_AS(run_benchmark(opts), ValidationError);
}
