#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "drfuse/dataset.hpp"
#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"
#include "oracles.hpp"

using namespace drfuse;

namespace {

Dataset parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in, {}, "test.csv");
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const ValidationError& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST_CASE("csv parsing adds an intercept and keeps column order") {
  const Dataset d = parse("x1,a,x2,y\n0.5,1,2,3\n1.5,2,-1,4\n2.5,2,0,5\n");
  CHECK(d.n() == 3);
  CHECK(d.p() == 3);
  CHECK(d.k == 2);
  CHECK(d.feature_names == std::vector<std::string>{"(Intercept)", "x1", "x2"});
  CHECK(d.x(1, 0) == 1.0);
  CHECK(d.x(1, 1) == 1.5);
  CHECK(d.x(1, 2) == -1.0);
  CHECK(d.a == std::vector<int>{1, 2, 2});
  CHECK(d.y(2) == 5.0);
  CHECK(d.label_names.empty());
}

TEST_CASE("comment lines and quoted fields are accepted") {
  const Dataset d = parse("# produced elsewhere\n\"x\",a,y\n\"1.0\",1,2\n# mid comment\n2,1,3\n");
  CHECK(d.n() == 2);
  CHECK(d.x(0, 1) == 1.0);
}

TEST_CASE("string treatment labels map to sorted dense ids") {
  const Dataset d = parse("x,a,y\n1,drugB,1\n2,drugA,2\n3,drugC,3\n4,drugA,4\n");
  CHECK(d.k == 3);
  CHECK(d.label_names == std::vector<std::string>{"drugA", "drugB", "drugC"});
  CHECK(d.a == std::vector<int>{2, 1, 3, 1});
}

TEST_CASE("unobserved integer labels are kept with a warning") {
  std::vector<std::string> warnings;
  diag::ScopedCapture cap(warnings);
  const Dataset d = parse("x,a,y\n1,1,1\n2,3,2\n");
  CHECK(d.k == 3);
  REQUIRE(warnings.size() == 1);
  CHECK(warnings[0].find("2") != std::string::npos);
  CHECK(d.units_of(2).empty());
}

TEST_CASE("csv errors name the row and column") {
  CHECK(error_of("x,a,y\n1,1,abc\n").find("row 1") != std::string::npos);
  CHECK(error_of("x,a,y\n1,1,abc\n").find("'y'") != std::string::npos);
  CHECK(error_of("x,a,y\n1,1,2\nfoo,1,2\n").find("row 2") != std::string::npos);
  CHECK(error_of("x,b,y\n1,1,2\n").find("missing treatment column") != std::string::npos);
  CHECK(error_of("x,a,z\n1,1,2\n").find("missing outcome column") != std::string::npos);
  CHECK(error_of("").find("empty") != std::string::npos);
  CHECK(error_of("x,a,y\n").find("no data rows") != std::string::npos);
  CHECK(error_of("x,a,y\ninf,1,2\n").find("non-finite") != std::string::npos);
  CHECK(error_of("x,a,y\n1,0,2\n").find("positive") != std::string::npos);
  CHECK(error_of("x,a,y\n1,1\n").find("fields") != std::string::npos);
}

TEST_CASE("missing file raises an IO error") {
  CHECK_THROWS_AS(load_csv("/nonexistent/dir/file.csv"), IoError);
}

TEST_CASE("csv round trip preserves data to 12 significant digits") {
  oracle::Rng rng(3);
  Eigen::MatrixXd cov(40, 2);
  std::vector<int> a;
  Eigen::VectorXd y(40);
  for (int i = 0; i < 40; ++i) {
    cov(i, 0) = rng.normal(0, 3);
    cov(i, 1) = rng.integer(0, 1);
    a.push_back(rng.integer(1, 4));
    y(i) = rng.normal(10, 5);
  }
  a[0] = 4;
  const Dataset d = make_dataset(cov, a, y, {"u", "v"});
  std::ostringstream out;
  write_csv(d, out, {}, "provenance line");
  CHECK(out.str().rfind("# provenance line\n", 0) == 0);
  const Dataset back = parse(out.str());
  CHECK(back.feature_names == d.feature_names);
  CHECK(back.a == d.a);
  for (int i = 0; i < 40; ++i) {
    CHECK(back.y(i) == doctest::Approx(d.y(i)).epsilon(1e-11));
    CHECK(back.x(i, 1) == doctest::Approx(d.x(i, 1)).epsilon(1e-11));
  }
  // Writing the parsed copy reproduces the bytes exactly.
  std::ostringstream again;
  write_csv(back, again, {}, "provenance line");
  CHECK(again.str() == out.str());
}

TEST_CASE("save_csv and load_csv agree on disk") {
  const auto dir = std::filesystem::path(DRFUSE_TEST_TMP);
  std::filesystem::create_directories(dir);
  Eigen::MatrixXd cov(3, 1);
  cov << 1, 2, 3;
  const Dataset d = make_dataset(cov, {1, 2, 1}, Eigen::Vector3d(0.1, 0.2, 0.3), {"z"});
  save_csv(d, dir / "roundtrip.csv");
  const Dataset back = load_csv(dir / "roundtrip.csv");
  CHECK(back.n() == 3);
  CHECK(back.x(2, 1) == 3.0);
}

TEST_CASE("metadata lists features and labels") {
  const Dataset d = parse("x,a,y\n1,b,1\n2,a,2\n");
  const std::string meta = metadata_json(d);
  CHECK(meta.find("\"n\": 2") != std::string::npos);
  CHECK(meta.find("\"x\"") != std::string::npos);
  CHECK(meta.find("\"b\"") != std::string::npos);
}

TEST_CASE("validate rejects broken invariants") {
  Dataset d = make_dataset(Eigen::MatrixXd::Ones(2, 1), {1, 2}, Eigen::Vector2d(1, 2), {"x"});
  CHECK_NOTHROW(d.validate());
  Dataset bad = d;
  bad.a[1] = 3;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = d;
  bad.x(0, 0) = 0.5;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = d;
  bad.y(0) = std::nan("");
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK(d.feature_index("x") == 1);
  CHECK(d.feature_index("nope") == -1);
}

TEST_CASE("group mappings are canonical and validated") {
  const GroupMapping g = GroupMapping::from_labels({7, 3, 7, 9, 3});
  CHECK(g.delta == std::vector<int>{1, 2, 1, 3, 2});
  CHECK(g.m == 3);
  const auto mem = g.members();
  CHECK(mem[0] == std::vector<int>{1, 3});
  CHECK(mem[1] == std::vector<int>{2, 5});
  CHECK(mem[2] == std::vector<int>{4});
  CHECK(GroupMapping::identity(4).m == 4);
  CHECK(GroupMapping::single(4).m == 1);
  GroupMapping bad;
  bad.delta = {1, 3};
  bad.m = 3;
  CHECK_THROWS_AS(bad.validate(), ValidationError);

  const Dataset d = make_dataset(Eigen::MatrixXd::Ones(3, 1), {1, 2, 3}, Eigen::Vector3d(1, 2, 3), {"x"});
  CHECK(group_labels(d, GroupMapping::from_labels({1, 1, 2})) == std::vector<int>{1, 1, 2});
  CHECK(arm_sizes(d) == std::vector<int>{1, 1, 1});
  CHECK_THROWS_AS(group_labels(d, GroupMapping::identity(2)), ValidationError);
}

TEST_CASE("format_number keeps 12 significant digits") {
  CHECK(format_number(1.0) == "1");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(1.0 / 3.0) == "0.333333333333");
  CHECK(format_number(-2.5e-7) == "-2.5e-07");
}
