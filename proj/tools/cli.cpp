#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "drfuse/calibration.hpp"
#include "drfuse/dataset.hpp"
#include "drfuse/diag.hpp"
#include "drfuse/errors.hpp"
#include "drfuse/eval.hpp"
#include "drfuse/fusion.hpp"
#include "drfuse/parallel.hpp"
#include "drfuse/policy.hpp"
#include "drfuse/synth.hpp"
#include "json.hpp"

namespace drfuse::cli {

using json = nlohmann::ordered_json;

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

namespace {

struct Provenance {
  std::string command;
  std::string config;  // effective configuration, one key=value per line
  std::uint64_t seed = 0;

  std::string hash() const { return fnv1a_hex(command + "\n" + config); }
  std::string comment() const {
    return std::string("drfuse ") + kToolVersion + " command=" + command + " config_hash=" + hash() +
           " seed=" + std::to_string(seed);
  }
  json to_json() const {
    json j;
    j["tool"] = "drfuse";
    j["version"] = kToolVersion;
    j["command"] = command;
    j["config_hash"] = hash();
    j["seed"] = seed;
    j["config"] = config;
    return j;
  }
};

std::ofstream open_out(const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  return f;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f = open_out(path);
  f << text;
  if (!f) throw IoError("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const std::string& what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      std::size_t used = 0;
      const double v = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw ValidationError(what + ": '" + item + "' is not a number");
    }
  }
  return out;
}

std::vector<int> resolve_columns(const Dataset& d, const std::string& names, const std::string& what) {
  std::vector<int> out;
  for (const auto& name : split_list(names)) {
    const int idx = d.feature_index(name);
    if (idx <= 0) throw ValidationError(what + ": unknown covariate '" + name + "'");
    out.push_back(idx);
  }
  return out;
}

std::vector<int> synthetic_columns(const std::string& names) {
  std::vector<int> out;
  const std::vector<std::string> known{"X1", "X2", "X3"};
  for (const auto& name : split_list(names)) {
    const auto it = std::find(known.begin(), known.end(), name);
    if (it == known.end()) throw ValidationError("unknown scenario covariate '" + name + "' (expected X1, X2, X3)");
    out.push_back(static_cast<int>(it - known.begin()) + 1);
  }
  return out;
}

std::string treatment_label(const Dataset& d, int arm) {
  if (!d.label_names.empty()) return d.label_names[static_cast<std::size_t>(arm - 1)];
  return std::to_string(arm);
}

void write_groups(const Dataset& d, const GroupMapping& g, std::ostream& out, const std::string& comment) {
  out << "# " << comment << '\n' << "treatment,group\n";
  for (int a = 1; a <= g.k(); ++a) out << treatment_label(d, a) << ',' << g.group_of(a) << '\n';
}

GroupMapping read_groups(const Dataset& d, const std::string& path) {
  std::istringstream in(read_text(path));
  std::string line;
  std::vector<std::string> header;
  std::vector<int> raw(static_cast<std::size_t>(d.k), 0);
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto fields = split_list(line);
    if (header.empty()) {
      header = fields;
      if (header.size() < 2 || header[0] != "treatment" || header[1] != "group")
        throw ValidationError(path + ": expected header 'treatment,group'");
      continue;
    }
    ++row;
    if (fields.size() != 2) throw ValidationError(path + ": row " + std::to_string(row) + " needs two fields");
    int arm = 0;
    if (!d.label_names.empty()) {
      const auto it = std::find(d.label_names.begin(), d.label_names.end(), fields[0]);
      if (it != d.label_names.end()) arm = static_cast<int>(it - d.label_names.begin()) + 1;
    } else {
      try {
        arm = std::stoi(fields[0]);
      } catch (const std::exception&) {
        arm = 0;
      }
    }
    if (arm < 1 || arm > d.k)
      throw ValidationError(path + ": row " + std::to_string(row) + ": unknown treatment '" + fields[0] + "'");
    int grp = 0;
    try {
      grp = std::stoi(fields[1]);
    } catch (const std::exception&) {
      grp = 0;
    }
    if (grp < 1) throw ValidationError(path + ": row " + std::to_string(row) + ": group must be a positive integer");
    if (raw[static_cast<std::size_t>(arm - 1)] != 0)
      throw ValidationError(path + ": treatment '" + fields[0] + "' listed twice");
    raw[static_cast<std::size_t>(arm - 1)] = grp;
  }
  for (int a = 1; a <= d.k; ++a)
    if (raw[static_cast<std::size_t>(a - 1)] == 0)
      throw ValidationError(path + ": treatment '" + treatment_label(d, a) + "' has no group");
  return GroupMapping::from_labels(raw);
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

// Option groups shared between subcommands. Defaults come from the library structs.
struct DataOpts {
  std::string data;
  std::string treatment_col = "a";
  std::string outcome_col = "y";

  void add(CLI::App* app, bool required = true) {
    auto* o = app->add_option("--data", data, "Input CSV (covariates, treatment, outcome)");
    if (required) o->required();
    app->add_option("--treatment-col", treatment_col, "Treatment column name")->capture_default_str();
    app->add_option("--outcome-col", outcome_col, "Outcome column name")->capture_default_str();
  }
  Dataset load() const {
    CsvSchema schema;
    schema.treatment = treatment_col;
    schema.outcome = outcome_col;
    return load_csv(data, schema);
  }
};

struct ScenarioOpts {
  std::string kind = "nonlinear";
  int k = 16;
  int n = 1800;
  double noise_sd = 1.0;
  std::string calib_cols;

  void add(CLI::App* app) {
    app->add_option("--kind", kind, "Scenario: nonlinear or linear")->capture_default_str();
    app->add_option("--k", k, "Number of treatments (multiple of 4)")->capture_default_str();
    app->add_option("--n", n, "Total sample size")->capture_default_str();
    app->add_option("--noise-sd", noise_sd, "Outcome noise standard deviation")->capture_default_str();
  }
  synth::ScenarioConfig build(std::uint64_t seed) const {
    synth::ScenarioConfig c;
    c.kind = synth::parse_kind(kind);
    c.k = k;
    c.n_total = n;
    c.noise_sd = noise_sd;
    c.seed = seed;
    c.calibration_covariates = synthetic_columns(calib_cols);
    c.validate();
    return c;
  }
};

struct CalibOpts {
  double gamma = 0.0;
  double tol = 1e-8;
  int max_iter = 200;
  double max_weight = 0.9;
  std::string calib_cols;

  void add(CLI::App* app) {
    app->add_option("--divergence-gamma", gamma, "Cressie-Read index (-1 EL, 0 entropy)")->capture_default_str();
    app->add_option("--calib-tol", tol, "Moment tolerance of the calibration solve")->capture_default_str();
    app->add_option("--calib-max-iter", max_iter, "Newton iterations per arm")->capture_default_str();
    app->add_option("--max-weight", max_weight, "Largest admissible single weight")->capture_default_str();
    app->add_option("--calib-cols", calib_cols, "Comma-separated covariates to calibrate (default: all)");
  }
  CalibrationOptions build() const {
    CalibrationOptions o;
    o.divergence.gamma = gamma;
    o.tol = tol;
    o.max_iter = max_iter;
    o.max_weight = max_weight;
    return o;
  }
};

struct FusionOpts {
  std::string penalty = "l1";
  double mcp_c = 3.0;
  double threshold = 0.25;
  double ebic_gamma = 0.5;
  std::string lambda_grid;
  int grid_size = 30;
  double grid_ratio = 1e-3;
  std::string main_effect = "pooled_ols";
  double rho = 1.0;
  double abs_tol = 1e-5;
  int max_iter = 5000;

  void add(CLI::App* app) {
    app->add_option("--penalty", penalty, "Fusion penalty: l1 or mcp")->capture_default_str();
    app->add_option("--mcp-c", mcp_c, "MCP concavity")->capture_default_str();
    app->add_option("--threshold", threshold, "Coefficient distance below which arms are grouped")
        ->capture_default_str();
    app->add_option("--ebic-gamma", ebic_gamma, "EBIC model-space exponent")->capture_default_str();
    app->add_option("--lambda-grid", lambda_grid, "Comma-separated penalty levels (default: automatic)");
    app->add_option("--grid-size", grid_size, "Automatic grid length")->capture_default_str();
    app->add_option("--grid-ratio", grid_ratio, "Smallest/largest automatic penalty")->capture_default_str();
    app->add_option("--main-effect", main_effect, "Main effect: pooled_ols or zero")->capture_default_str();
    app->add_option("--rho", rho, "Initial ADMM penalty parameter")->capture_default_str();
    app->add_option("--admm-tol", abs_tol, "ADMM absolute tolerance")->capture_default_str();
    app->add_option("--admm-max-iter", max_iter, "ADMM iteration cap")->capture_default_str();
  }
  FusionOptions build() const {
    FusionOptions o;
    o.penalty = parse_penalty(penalty);
    o.mcp_c = mcp_c;
    o.threshold = threshold;
    o.ebic_gamma = ebic_gamma;
    o.lambda_grid = parse_doubles(lambda_grid, "--lambda-grid");
    for (double l : o.lambda_grid)
      if (!(l >= 0.0)) throw ValidationError("--lambda-grid values must be non-negative");
    o.grid_size = grid_size;
    o.grid_ratio = grid_ratio;
    o.main_effect = parse_main_effect(main_effect);
    o.admm.rho = rho;
    o.admm.abs_tol = abs_tol;
    o.admm.max_iter = max_iter;
    if (!(threshold > 0.0)) throw ValidationError("--threshold must be positive");
    if (grid_size < 1) throw ValidationError("--grid-size must be positive");
    if (!(grid_ratio > 0.0 && grid_ratio < 1.0)) throw ValidationError("--grid-ratio must lie in (0, 1)");
    if (!(mcp_c > 1.0)) throw ValidationError("--mcp-c must exceed 1");
    return o;
  }
};

struct PolicyOpts {
  int depth = 3;
  std::string policy_cols;
  int max_splits = 64;
  bool exact_splits = false;
  int folds = 5;
  std::string outcome_model = "ridge_poly2";
  std::vector<double> clip{0.01, 0.99};

  void add(CLI::App* app) {
    app->add_option("--depth", depth, "Policy tree depth")->capture_default_str();
    app->add_option("--policy-cols", policy_cols, "Comma-separated policy covariates (default: all)");
    app->add_option("--max-splits", max_splits, "Split candidates kept per covariate")->capture_default_str();
    app->add_flag("--exact-splits", exact_splits, "Use every observed midpoint as a split candidate");
    app->add_option("--folds", folds, "Cross-fitting folds")->capture_default_str();
    app->add_option("--outcome-model", outcome_model, "Outcome learner: ridge_poly2 or bagged_trees")
        ->capture_default_str();
    app->add_option("--clip", clip, "Propensity clipping bounds LO HI")->expected(2)->capture_default_str();
  }
  PolicyConfig build(std::uint64_t seed, int threads) const {
    PolicyConfig c;
    c.depth = depth;
    c.max_splits = max_splits;
    c.exact_splits = exact_splits;
    c.nuisance.folds = folds;
    c.nuisance.outcome_model = parse_outcome_model(outcome_model);
    c.nuisance.clip_lo = clip.at(0);
    c.nuisance.clip_hi = clip.at(1);
    c.nuisance.seed = seed;
    c.nuisance.threads = threads;
    if (depth < 0 || depth > 4) throw ValidationError("--depth must be between 0 and 4");
    if (folds < 2) throw ValidationError("--folds must be at least 2");
    if (!(clip[0] >= 0.0 && clip[0] < clip[1] && clip[1] <= 1.0))
      throw ValidationError("--clip must satisfy 0 <= LO < HI <= 1");
    return c;
  }
};

struct Context {
  std::ostream& out;
  int threads = 1;
};

int cmd_simulate(const ScenarioOpts& sc, std::uint64_t seed, const std::string& out_path, std::string meta_path,
                 const Provenance& prov, Context& ctx) {
  const synth::ScenarioConfig cfg = sc.build(seed);
  const synth::OracleScenario s = synth::generate(cfg);
  save_csv(s.dataset, out_path, {}, prov.comment());
  if (meta_path.empty()) meta_path = out_path + ".json";
  json meta = json::parse(metadata_json(s.dataset));
  meta["scenario"] = {{"kind", synth::to_string(cfg.kind)}, {"k", cfg.k}, {"n", cfg.n_total},
                      {"noise_sd", cfg.noise_sd}, {"seed", cfg.seed}};
  meta["true_groups"] = s.true_groups.delta;
  meta["provenance"] = prov.to_json();
  write_text(meta_path, meta.dump(2) + "\n");
  ctx.out << "wrote " << s.dataset.n() << " rows to " << out_path << " (metadata " << meta_path << ")\n";
  return kExitOk;
}

struct FuseArgs {
  DataOpts data;
  CalibOpts calib;
  FusionOpts fusion;
  bool no_weights = false;
  std::string groups_out = "groups.csv";
  std::string weights_out;
  std::string result_out;
};

int cmd_fuse(const FuseArgs& a, const Provenance& prov, Context& ctx) {
  const Dataset d = a.data.load();
  const FusionOptions fopts = a.fusion.build();
  CalibrationResult cal;
  if (a.no_weights) {
    cal = uniform_weights(d);
  } else {
    cal = calibrate_all(d, a.calib.build(), resolve_columns(d, a.calib.calib_cols, "--calib-cols"), ctx.threads);
  }
  const FusionResult fr = fuse(d, cal.weights, fopts);

  {
    std::ofstream f = open_out(a.groups_out);
    write_groups(d, fr.groups, f, prov.comment());
  }
  if (!a.weights_out.empty()) {
    std::ofstream f = open_out(a.weights_out);
    f << "# " << prov.comment() << "\nrow,treatment,weight\n";
    for (int i = 0; i < d.n(); ++i)
      f << i + 1 << ',' << treatment_label(d, d.a[static_cast<std::size_t>(i)]) << ','
        << format_number(cal.weights(i)) << '\n';
  }
  if (!a.result_out.empty()) {
    json j;
    j["provenance"] = prov.to_json();
    j["weighted"] = !a.no_weights;
    j["lambda_selected"] = fr.lambda_selected;
    j["m_hat"] = fr.groups.m;
    j["groups"] = fr.groups.delta;
    j["feature_names"] = d.feature_names;
    j["beta"] = matrix_json(fr.beta);
    j["refit_beta"] = matrix_json(fr.refit_beta);
    j["main_effect"] = std::vector<double>(fr.m0_coefficients.data(),
                                           fr.m0_coefficients.data() + fr.m0_coefficients.size());
    json path = json::array();
    for (const auto& p : fr.ebic_path)
      path.push_back({{"lambda", p.lambda}, {"ebic", p.ebic}, {"m_hat", p.m_hat}, {"wrss", p.wrss},
                      {"iterations", p.iterations}, {"converged", p.converged}});
    j["ebic_path"] = path;
    j["calibration_residual"] = cal.residual;
    write_text(a.result_out, j.dump(2) + "\n");
  }
  ctx.out << "groups=" << fr.groups.m << " lambda=" << format_number(fr.lambda_selected) << " written to "
          << a.groups_out << '\n';
  return kExitOk;
}

struct LearnArgs {
  DataOpts data;
  PolicyOpts policy;
  std::string groups;
  std::string tree_out = "tree.json";
  std::string dot_out;
  std::string result_out;
  std::string assign_out;
};

int cmd_learn(const LearnArgs& a, std::uint64_t seed, const Provenance& prov, Context& ctx) {
  const Dataset d = a.data.load();
  const GroupMapping g = a.groups.empty() ? GroupMapping::identity(d.k) : read_groups(d, a.groups);
  PolicyConfig cfg = a.policy.build(seed, ctx.threads);
  cfg.policy_columns = resolve_columns(d, a.policy.policy_cols, "--policy-cols");
  const PolicyResult pr = learn_policy(d, g, cfg);

  json tree = json::parse(pr.tree.to_json());
  tree["provenance"] = prov.to_json();
  write_text(a.tree_out, tree.dump(2) + "\n");
  if (!a.dot_out.empty()) write_text(a.dot_out, "// " + prov.comment() + "\n" + pr.tree.to_dot());
  if (!a.result_out.empty()) {
    json j;
    j["provenance"] = prov.to_json();
    j["value"] = pr.value;
    j["n_groups"] = g.m;
    j["depth"] = pr.tree.depth;
    j["leaves"] = pr.tree.n_leaves();
    j["folds"] = pr.diagnostics.plan.n_folds;
    j["stratified_folds"] = pr.diagnostics.plan.stratified;
    j["clipped_fraction"] = pr.diagnostics.clipped_fraction;
    write_text(a.result_out, j.dump(2) + "\n");
  }
  if (!a.assign_out.empty()) {
    std::vector<int> actions(static_cast<std::size_t>(d.n()));
    for (int i = 0; i < d.n(); ++i) actions[static_cast<std::size_t>(i)] = pr.tree.predict_full(d.x.row(i));
    const std::vector<int> treat = materialize_treatment(actions, g, seed);
    std::ofstream f = open_out(a.assign_out);
    f << "# " << prov.comment() << "\nrow,group,treatment\n";
    for (int i = 0; i < d.n(); ++i)
      f << i + 1 << ',' << actions[static_cast<std::size_t>(i)] << ','
        << treatment_label(d, treat[static_cast<std::size_t>(i)]) << '\n';
  }
  ctx.out << "estimated value=" << format_number(pr.value) << " leaves=" << pr.tree.n_leaves() << " tree written to "
          << a.tree_out << '\n';
  return kExitOk;
}

struct EvaluateArgs {
  DataOpts data;
  PolicyOpts policy;
  std::string tree;
  std::string groups;
  std::string reference_groups;
  std::string oracle_kind;
  int n_test = 100000;
  std::string out;
};

int cmd_evaluate(const EvaluateArgs& a, std::uint64_t seed, const Provenance& prov, Context& ctx) {
  const Dataset d = a.data.load();
  const GroupMapping g = a.groups.empty() ? GroupMapping::identity(d.k) : read_groups(d, a.groups);
  const PolicyTree tree = PolicyTree::from_json(read_text(a.tree));
  if (tree.columns.empty()) throw ValidationError(a.tree + ": tree lists no covariate columns");
  for (int c : tree.columns)
    if (c < 1 || c >= d.p()) throw ValidationError(a.tree + ": tree column outside the data");
  for (const auto& nd : tree.nodes) {
    if (nd.feature < 0 && (nd.action < 1 || nd.action > g.m))
      throw ValidationError(a.tree + ": leaf action exceeds the number of groups");
    if (nd.feature >= static_cast<int>(tree.columns.size()))
      throw ValidationError(a.tree + ": node feature outside the tree's columns");
  }

  const PolicyConfig cfg = a.policy.build(seed, ctx.threads);
  const std::vector<int> labels = group_labels(d, g);
  const CrossFitPlan plan = make_folds(d.n(), labels, cfg.nuisance.folds, seed);
  const Eigen::MatrixXd features = d.x.rightCols(d.p() - 1);
  const NuisanceEstimates nuis = estimate_nuisance(features, d.y, labels, g.m, plan, cfg.nuisance);
  const AipwScores scores = aipw_scores(d.y, labels, nuis);
  std::vector<int> actions(static_cast<std::size_t>(d.n()));
  for (int i = 0; i < d.n(); ++i) actions[static_cast<std::size_t>(i)] = tree.predict_full(d.x.row(i));

  json j;
  j["provenance"] = prov.to_json();
  j["estimated_value"] = estimate_value(scores, actions);
  j["n_groups"] = g.m;
  if (!a.reference_groups.empty()) {
    const GroupMapping ref = read_groups(d, a.reference_groups);
    j["ari"] = adjusted_rand_index(g.delta, ref.delta);
  }
  if (!a.oracle_kind.empty()) {
    synth::ScenarioConfig sc;
    sc.kind = synth::parse_kind(a.oracle_kind);
    sc.k = d.k;
    sc.n_total = d.n();
    sc.validate();
    if (d.p() != 4) throw ValidationError("oracle evaluation needs the synthetic covariates X1, X2, X3");
    if (a.n_test < 1) throw ValidationError("--n-test must be positive");
    const Eigen::MatrixXd pop = synth::draw_population(sc, a.n_test, seed);
    std::vector<int> pop_actions(static_cast<std::size_t>(pop.rows()));
    for (Eigen::Index i = 0; i < pop.rows(); ++i) pop_actions[static_cast<std::size_t>(i)] = tree.predict_full(pop.row(i));
    j["true_value"] = grouped_true_value(pop_actions, g, d.k, sc.kind, pop);
  }
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty())
    ctx.out << text;
  else
    write_text(a.out, text);
  return kExitOk;
}

struct BenchArgs {
  ScenarioOpts scenario;
  CalibOpts calib;
  FusionOpts fusion;
  PolicyOpts policy;
  std::string methods = "baseline,fusion,cw_fusion,linear_ma";
  int reps = 50;
  int n_test = 100000;
  bool no_policy = false;
  std::string out = "bench.csv";
  std::string log_out;
};

int cmd_bench(const BenchArgs& a, std::uint64_t seed, const Provenance& prov, Context& ctx) {
  BenchOptions o;
  ScenarioOpts sc = a.scenario;
  sc.calib_cols = a.calib.calib_cols;
  o.scenario = sc.build(seed);
  o.methods = parse_methods(a.methods);
  o.reps = a.reps;
  o.base_seed = seed;
  o.n_test = a.n_test;
  o.evaluate_policy = !a.no_policy;
  o.calibration = a.calib.build();
  o.fusion = a.fusion.build();
  o.policy = a.policy.build(seed, 1);
  o.policy.policy_columns = synthetic_columns(a.policy.policy_cols);
  o.threads = ctx.threads;
  const BenchResult r = run_benchmark(o);
  {
    std::ofstream f = open_out(a.out);
    write_summary_csv(r, f, prov.comment());
  }
  if (!a.log_out.empty()) {
    std::ofstream f = open_out(a.log_out);
    write_records_csv(r, f, prov.comment());
  }
  write_summary_csv(r, ctx.out);
  return kExitOk;
}

int exit_code_for(ErrorClass c) {
  switch (c) {
    case ErrorClass::io: return kExitIo;
    case ErrorClass::validation: return kExitValidation;
    case ErrorClass::solver: return kExitSolver;
  }
  return kExitInternal;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Calibration-weighted treatment fusion and policy learning", "drfuse"};
  app.set_version_flag("--version", std::string("drfuse ") + kToolVersion);
  app.set_config("--config", "", "TOML/INI configuration file; sections are named after subcommands");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1);
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: all cores)")->capture_default_str();

  std::uint64_t seed = 1;
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", seed, "Random seed")->capture_default_str(); };

  auto* sim = app.add_subcommand("simulate", "Generate a synthetic scenario dataset");
  ScenarioOpts sim_sc;
  std::string sim_out;
  std::string sim_meta;
  sim_sc.add(sim);
  add_seed(sim);
  sim->add_option("--out", sim_out, "Output CSV")->required();
  sim->add_option("--metadata", sim_meta, "Metadata JSON (default: <out>.json)");

  auto* fuse_cmd = app.add_subcommand("fuse", "Calibration-weighted treatment fusion on a CSV");
  FuseArgs fa;
  fa.data.add(fuse_cmd);
  fa.calib.add(fuse_cmd);
  fa.fusion.add(fuse_cmd);
  add_seed(fuse_cmd);
  fuse_cmd->add_flag("--no-weights", fa.no_weights, "Skip calibration (uniform weights)");
  fuse_cmd->add_option("--groups-out", fa.groups_out, "Grouping CSV (treatment,group)")->capture_default_str();
  fuse_cmd->add_option("--weights-out", fa.weights_out, "Calibration weights CSV");
  fuse_cmd->add_option("--result-out", fa.result_out, "Full fusion result as JSON");

  auto* learn = app.add_subcommand("learn", "Cross-fitted AIPW policy tree over treatment groups");
  LearnArgs la;
  la.data.add(learn);
  la.policy.add(learn);
  add_seed(learn);
  learn->add_option("--groups", la.groups, "Grouping CSV (default: every treatment its own group)");
  learn->add_option("--tree-out", la.tree_out, "Policy tree JSON")->capture_default_str();
  learn->add_option("--dot-out", la.dot_out, "Policy tree in DOT format");
  learn->add_option("--result-out", la.result_out, "Value estimate and diagnostics JSON");
  learn->add_option("--assign-out", la.assign_out, "Per-row recommended group and treatment CSV");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate a policy tree on a dataset");
  EvaluateArgs ea;
  ea.data.add(evaluate);
  ea.policy.add(evaluate);
  add_seed(evaluate);
  evaluate->add_option("--tree", ea.tree, "Policy tree JSON")->required();
  evaluate->add_option("--groups", ea.groups, "Grouping CSV the tree's actions refer to");
  evaluate->add_option("--reference-groups", ea.reference_groups, "Grouping CSV to compare against (ARI)");
  evaluate->add_option("--oracle-kind", ea.oracle_kind, "Synthetic scenario kind for the true value");
  evaluate->add_option("--n-test", ea.n_test, "Test population size for the true value")->capture_default_str();
  evaluate->add_option("--out", ea.out, "Output JSON (default: stdout)");

  auto* bench = app.add_subcommand("bench", "Replicated simulation benchmark");
  BenchArgs ba;
  ba.scenario.add(bench);
  ba.calib.add(bench);
  ba.fusion.add(bench);
  ba.policy.add(bench);
  add_seed(bench);
  bench->add_option("--methods", ba.methods, "Comma-separated methods")->capture_default_str();
  bench->add_option("--reps", ba.reps, "Replications")->capture_default_str();
  bench->add_option("--n-test", ba.n_test, "Test population size")->capture_default_str();
  bench->add_flag("--no-policy", ba.no_policy, "Grouping metrics only");
  bench->add_option("--out", ba.out, "Summary CSV")->capture_default_str();
  bench->add_option("--log-out", ba.log_out, "Per-replication CSV");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitValidation;
  }

  std::vector<std::string> warnings;
  int code = kExitOk;
  try {
    diag::ScopedCapture capture(warnings);
    Context ctx{out, resolve_threads(threads)};
    CLI::App* used = app.get_subcommands().front();
    Provenance prov;
    prov.command = used->get_name();
    prov.config = used->config_to_str(true, false);
    prov.seed = seed;
    if (used == sim) {
      code = cmd_simulate(sim_sc, seed, sim_out, sim_meta, prov, ctx);
    } else if (used == fuse_cmd) {
      code = cmd_fuse(fa, prov, ctx);
    } else if (used == learn) {
      code = cmd_learn(la, seed, prov, ctx);
    } else if (used == evaluate) {
      code = cmd_evaluate(ea, seed, prov, ctx);
    } else {
      code = cmd_bench(ba, seed, prov, ctx);
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    code = exit_code_for(e.error_class());
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    code = kExitInternal;
  }
  for (const auto& w : warnings) err << "warning: " << w << '\n';
  return code;
}

}  // namespace drfuse::cli
