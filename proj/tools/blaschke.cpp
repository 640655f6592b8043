// blaschke: command-line front end.
//
// Exit codes
//   0   success (residuals under threshold)
//   1   residuals above threshold / convergence order too low
//   2   degenerate input (kappa - lambda or det Hess vanishes, wrong sign of L)
//   3   frame degeneracy during reconstruction
//   64  parse, I/O or usage error (includes beta^2 = 1)

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "blaschke/blaschke.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace blaschke;

namespace {

constexpr const char* kVersion = "0.1.0";

enum Exit { kOk = 0, kFail = 1, kDegenerate = 2, kFrame = 3, kUsage = 64 };

// Default thresholds; run files may override them under [thresholds].
constexpr double kCheckThreshold = 1e-4;
constexpr double kConstructThreshold = 1e-3;
constexpr double kReconstructThreshold = 1e-3;
constexpr double kMinOrder = 1.5;

struct Options {
  std::string out = "out";
  std::string run;
  std::string phi, phi_file;
  std::string psi, psi_file;
  int epsilon = 1;
  std::vector<double> domain;
  int grid = 0;
  double lambda = 0.0;
  double beta = 0.0;
  int sign = 1;
  double F0 = 0.0;
  double threshold = 0.0;
  // reconstruct
  std::string input;
  std::string mesh;
  std::string format;
  int mesh_nx = 0, mesh_ny = 0;
  // factory
  std::string harmonic = "constant";
  std::vector<double> params;
  int curvature_sign = -1;
  // converge
  std::string case_name;
  std::vector<int> grids = {32, 64, 128};
  double min_order = kMinOrder;
};

/// Everything that ends up in manifest.json.
struct Context {
  std::string command;
  std::vector<std::string> argv;
  json inputs = json::object();
  std::vector<std::string> defaults;
  std::vector<std::string> outputs;
  std::string message;
  fs::path out;
};

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(Context& ctx, const std::string& name, const std::string& text) {
  const fs::path p = ctx.out / name;
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot open '" + p.string() + "' for writing");
  os << text;
  if (!os) throw IoError("failed writing '" + p.string() + "'");
  ctx.outputs.push_back(name);
}

void write_json(Context& ctx, const std::string& name, const json& j) {
  write_text(ctx, name, j.dump(2) + "\n");
}

std::string num(double v) { return format_number(v); }

bool given(const CLI::App* app, const std::string& flag) { return app->count(flag) > 0; }

// ---------------------------------------------------------------------------
// Input resolution

std::optional<RunFile> load_run(const Options& o, Context& ctx) {
  if (o.run.empty()) return std::nullopt;
  ctx.inputs["run_file"] = o.run;
  const auto raw = load_run_file(o.run);
  ctx.inputs["run"] = raw;
  return parse_run(raw);
}

IsothermalChart resolve_chart(const CLI::App* app, const Options& o, Context& ctx,
                              const std::optional<IsothermalChart>& from_run,
                              Interval default_range, int default_grid) {
  if (from_run && !given(app, "--domain") && !given(app, "--grid") && !given(app, "--epsilon"))
    return *from_run;
  Interval x = default_range, y = default_range;
  if (given(app, "--domain")) {
    x = {o.domain[0], o.domain[1]};
    y = {o.domain[2], o.domain[3]};
  } else if (from_run) {
    x = from_run->x_range();
    y = from_run->y_range();
  } else {
    ctx.defaults.push_back("domain");
  }
  int n = default_grid;
  if (given(app, "--grid"))
    n = o.grid;
  else if (from_run)
    n = from_run->nx();
  else
    ctx.defaults.push_back("grid");
  int eps = o.epsilon;
  if (!given(app, "--epsilon")) {
    if (from_run)
      eps = from_run->epsilon();
    else
      ctx.defaults.push_back("epsilon");
  }
  return IsothermalChart(x, y, n, n, eps);
}

json chart_json(const IsothermalChart& c) {
  return {{"x_range", {c.x_range().lo, c.x_range().hi}},
          {"y_range", {c.y_range().lo, c.y_range().hi}},
          {"nx", c.nx()},
          {"ny", c.ny()},
          {"epsilon", c.epsilon()}};
}

struct MetricInput {
  ConformalMetric g;
  json source;
  std::optional<FactoryResult> factory;
  std::optional<double> lambda;  // from the run file
  std::map<std::string, double> thresholds;
  std::optional<RunFile> run;
};

MetricInput resolve_metric(const CLI::App* app, const Options& o, Context& ctx) {
  auto run = load_run(o, ctx);
  const int sources = int(run.has_value()) + int(!o.phi.empty()) + int(!o.phi_file.empty());
  if (sources != 1) throw ConfigError("give exactly one of --run, --phi, --phi-file");
  if (!o.phi_file.empty()) {
    ctx.inputs["phi_file"] = o.phi_file;
    const auto field = field_from_json(json::parse(read_text_file(o.phi_file)));
    return {ConformalMetric(field), {{"phi_file", o.phi_file}}, std::nullopt, std::nullopt, {},
            std::nullopt};
  }
  if (!o.phi.empty()) {
    ctx.inputs["phi"] = o.phi;
    const auto chart = resolve_chart(app, o, ctx, std::nullopt, {-0.5, 0.5}, 64);
    ctx.inputs["chart"] = chart_json(chart);
    return {metric_from_expression(o.phi, chart), {{"phi", o.phi}}, std::nullopt, std::nullopt,
            {}, std::nullopt};
  }
  if (run->psi) throw ConfigError("run file describes a graph; use the oracle command");
  MetricInput in{ConformalMetric(ScalarField::constant(factory_chart(5), 0.0)), json::object(),
                 std::nullopt, run->lambda, run->thresholds, run};
  if (run->factory) {
    const auto chart = resolve_chart(app, o, ctx, run->chart, {-0.2, 0.2}, 128);
    ctx.inputs["chart"] = chart_json(chart);
    in.factory = build_factory(*run->factory, chart);
    in.g = in.factory->metric.g;
    in.source = {{"harmonic", run->factory->harmonic},
                 {"params", run->factory->params},
                 {"curvature_sign", run->factory->curvature_sign}};
    if (!in.lambda) in.lambda = run->factory->lambda;
  } else if (run->phi) {
    const auto chart = resolve_chart(app, o, ctx, run->chart, {-0.5, 0.5}, 64);
    ctx.inputs["chart"] = chart_json(chart);
    in.g = metric_from_expression(*run->phi, chart);
    in.source = {{"phi", *run->phi}};
  } else {
    throw ConfigError("run file names no metric (harmonic or phi)");
  }
  return in;
}

double resolve_lambda(const CLI::App* app, const Options& o, Context& ctx,
                      const std::optional<double>& from_run) {
  double lambda = 0.0;
  if (given(app, "--lambda"))
    lambda = o.lambda;
  else if (from_run)
    lambda = *from_run;
  else
    ctx.defaults.push_back("lambda");
  ctx.inputs["lambda"] = lambda;
  return lambda;
}

double resolve_threshold(const CLI::App* app, const Options& o, Context& ctx,
                         const std::map<std::string, double>& from_run, const std::string& key,
                         double fallback) {
  double t = fallback;
  if (given(app, "--threshold"))
    t = o.threshold;
  else if (auto it = from_run.find(key); it != from_run.end())
    t = it->second;
  else
    ctx.defaults.push_back("threshold");
  ctx.inputs["threshold"] = t;
  return t;
}

json factory_json(const FactoryResult& f) {
  return {{"improper_condition_residual", f.improper_residual},
          {"min_abs_kappa", f.metric.min_abs_kappa},
          {"degenerate", f.metric.degenerate},
          {"warnings", f.metric.warnings}};
}

// ---------------------------------------------------------------------------
// Commands

int cmd_check(const CLI::App* app, const Options& o, Context& ctx) {
  auto in = resolve_metric(app, o, ctx);
  const double lambda = resolve_lambda(app, o, ctx, in.lambda);
  const double threshold = resolve_threshold(app, o, ctx, in.thresholds, "check", kCheckThreshold);
  const auto res = condition_residual(in.g, lambda);
  const double defect = interior_max_abs(harmonic_defect(in.g, lambda));
  const bool pass = res.report.max_residual <= threshold;
  json report = {{"metric", in.source},
                 {"chart", chart_json(in.g.chart())},
                 {"condition", to_json(res.report)},
                 {"harmonic_defect_max", defect},
                 {"threshold", threshold},
                 {"passed", pass}};
  if (in.factory) report["factory"] = factory_json(*in.factory);
  write_json(ctx, "check_report.json", report);
  std::printf("condition residual %s (threshold %s): %s\n", num(res.report.max_residual).c_str(),
              num(threshold).c_str(), pass ? "pass" : "FAIL");
  return pass ? kOk : kFail;
}

std::string k_csv(const SphereRun& run, const ScalarField& J) {
  const auto& c = run.g.chart();
  const auto& K = run.pick.K;
  std::string out = "i,j,x,y,K112,K221,L,F,J\n";
  for (int j = 0; j < c.ny(); ++j)
    for (int i = 0; i < c.nx(); ++i)
      out += std::to_string(i) + "," + std::to_string(j) + "," + num(c.x(i)) + "," + num(c.y(j)) +
             "," + num(K.K112()(i, j)) + "," + num(K.K221()(i, j)) + "," +
             num(run.pick.potential.L(i, j)) + "," + num(run.pick.potential.F(i, j)) + "," +
             num(J(i, j)) + "\n";
  return out;
}

int cmd_construct(const CLI::App* app, const Options& o, Context& ctx) {
  auto in = resolve_metric(app, o, ctx);
  PickOptions opt;
  opt.lambda = resolve_lambda(app, o, ctx, in.lambda);
  const double threshold =
      resolve_threshold(app, o, ctx, in.thresholds, "construct", kConstructThreshold);
  opt.sign = given(app, "--sign") ? o.sign : (in.run && in.run->sign ? *in.run->sign : 1);
  if (given(app, "--beta"))
    opt.beta = o.beta;
  else if (in.run && in.run->beta)
    opt.beta = in.run->beta;
  opt.F0 = given(app, "--F0") ? o.F0 : (in.run && in.run->F0 ? *in.run->F0 : 0.0);
  if (!given(app, "--sign") && !(in.run && in.run->sign)) ctx.defaults.push_back("sign");
  if (!opt.beta && !given(app, "--F0") && !(in.run && in.run->F0)) ctx.defaults.push_back("F0");
  ctx.inputs["sign"] = opt.sign;
  ctx.inputs["F0"] = opt.F0;
  if (opt.beta) ctx.inputs["beta"] = *opt.beta;

  const auto cond = condition_residual(in.g, opt.lambda);
  const auto run = construct_sphere(in.g, opt);
  const auto& K = run.pick.K;
  const auto& rep = run.check.report;
  const double first = interior_max_abs(run.first_order.magnitude());
  const double L_identity = max_abs_difference(pick_L(K), run.pick.potential.L);
  const auto J = pick_invariant(K, in.g);

  json residuals = to_json(rep);
  residuals["condition"] = cond.report.max_residual;
  residuals["first_order"] = first;
  residuals["exactness"] = run.pick.potential.exactness_max;
  residuals["potential_path_defect"] = run.pick.potential.path_defect;
  residuals["pick_L_identity"] = L_identity;
  const double worst = std::max({cond.report.max_residual, rep.gauss_max(), rep.egregium,
                                 first, run.pick.potential.exactness_max});
  const bool pass = worst <= threshold;

  json kfile = {{"epsilon", in.g.epsilon()},
                {"lambda", opt.lambda},
                {"sign", opt.sign},
                {"F0", run.pick.potential.F0},
                {"basepoint", {run.pick.potential.basepoint.i, run.pick.potential.basepoint.j}},
                {"phi", to_json(in.g.phi())},
                {"K112", to_json(K.K112())},
                {"K221", to_json(K.K221())}};
  if (opt.beta) kfile["beta"] = *opt.beta;
  write_json(ctx, "K.json", kfile);
  write_text(ctx, "K.csv", k_csv(run, J));
  json report = {{"metric", in.source},
                 {"chart", chart_json(in.g.chart())},
                 {"residuals", residuals},
                 {"J_min", min_abs(J)},
                 {"J_max", max_abs(J)},
                 {"warnings", run.pick.potential.warnings},
                 {"threshold", threshold},
                 {"passed", pass}};
  if (in.factory) report["factory"] = factory_json(*in.factory);
  write_json(ctx, "construct_report.json", report);
  std::printf("construct: worst residual %s (threshold %s): %s\n", num(worst).c_str(),
              num(threshold).c_str(), pass ? "pass" : "FAIL");
  return pass ? kOk : kFail;
}

MeshFormat resolve_format(const Options& o, const std::string& mesh_path) {
  std::string f = o.format;
  if (f.empty()) f = fs::path(mesh_path).extension() == ".ply" ? "ply" : "obj";
  if (f == "obj") return MeshFormat::obj;
  if (f == "ply") return MeshFormat::ply;
  throw ConfigError("unknown mesh format '" + f + "'");
}

int cmd_reconstruct(const CLI::App* app, const Options& o, Context& ctx) {
  fs::path kpath = o.input.empty() ? ctx.out / "K.json" : fs::path(o.input);
  if (fs::is_directory(kpath)) kpath /= "K.json";
  ctx.inputs["input"] = kpath.string();
  json kfile;
  try {
    kfile = json::parse(read_text_file(kpath.string()));
  } catch (const json::exception& e) {
    throw ConfigError(kpath.string() + ": " + e.what());
  }
  ScalarField phi = ScalarField::constant(factory_chart(5), 0.0);
  std::optional<DifferenceTensor> K;
  double lambda = 0.0;
  GridIndex base;
  try {
    phi = field_from_json(kfile.at("phi"));
    K = DifferenceTensor::from_free(field_from_json(kfile.at("K112")),
                                    field_from_json(kfile.at("K221")), kfile.at("epsilon"),
                                    kfile.at("sign"));
    lambda = kfile.at("lambda");
    base = {kfile.at("basepoint").at(0), kfile.at("basepoint").at(1)};
  } catch (const json::exception& e) {
    throw ConfigError(kpath.string() + ": " + e.what());
  }
  const ConformalMetric g(phi);
  const double threshold =
      resolve_threshold(app, o, ctx, {}, "reconstruct", kReconstructThreshold);
  const auto gamma = add_difference(levi_civita(g), *K);
  const auto rec = reconstruct(g, gamma, lambda, base);

  const std::string mesh_name = o.mesh.empty() ? "surface.obj" : o.mesh;
  if (o.mesh.empty()) ctx.defaults.push_back("mesh");
  const auto format = resolve_format(o, mesh_name);
  const auto mesh = make_mesh(rec.frame, o.mesh_nx, o.mesh_ny);
  const fs::path mesh_path = fs::path(mesh_name).is_absolute() ? fs::path(mesh_name)
                                                                : ctx.out / mesh_name;
  export_mesh(mesh, format, mesh_path.string());
  ctx.outputs.push_back(mesh_path.string());

  json report = to_json(rec.report);
  report["compatibility"] = rec.compatibility;
  report["vertices"] = mesh.vertices.size();
  report["triangles"] = mesh.triangles.size();
  if (lambda == 0.0) report["transversal_spread"] = transversal_spread(rec.frame);
  if (lambda == 0.0 && g.epsilon() == 1) {
    try {
      report["round_trip_relative"] = round_trip(g, rec.frame).max_relative_error;
    } catch (const Error& e) {
      report["round_trip_error"] = e.what();
    }
  }
  const bool pass = rec.report.metric_recovery_rel <= threshold;
  report["threshold"] = threshold;
  report["passed"] = pass;
  write_json(ctx, "reconstruct_report.json", report);
  std::printf("reconstruct: metric recovery %s (threshold %s): %s\n",
              num(rec.report.metric_recovery_rel).c_str(), num(threshold).c_str(),
              pass ? "pass" : "FAIL");
  return pass ? kOk : kFail;
}

int cmd_factory(const CLI::App* app, const Options& o, Context& ctx) {
  auto run = load_run(o, ctx);
  FactorySpec spec;
  std::optional<IsothermalChart> chart_from_run;
  if (run) {
    if (!run->factory) throw ConfigError("run file describes no harmonic factory");
    spec = *run->factory;
    chart_from_run = run->chart;
  }
  if (given(app, "--harmonic")) spec.harmonic = o.harmonic;
  if (given(app, "--params")) spec.params = o.params;
  if (given(app, "--curvature-sign")) spec.curvature_sign = o.curvature_sign;
  if (given(app, "--lambda")) spec.lambda = o.lambda;
  ctx.inputs["harmonic"] = spec.harmonic;
  ctx.inputs["params"] = spec.params;
  ctx.inputs["curvature_sign"] = spec.curvature_sign;
  ctx.inputs["lambda"] = spec.lambda;
  const auto chart = resolve_chart(app, o, ctx, chart_from_run, {-0.2, 0.2}, 128);
  ctx.inputs["chart"] = chart_json(chart);
  const auto f = build_factory(spec, chart);
  write_json(ctx, "phi.json", to_json(f.metric.g.phi()));
  json report = factory_json(f);
  report["chart"] = chart_json(chart);
  write_json(ctx, "factory_report.json", report);
  for (const auto& w : f.metric.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
  std::printf("factory: improper residual %s, min |kappa| %s\n", num(f.improper_residual).c_str(),
              num(f.metric.min_abs_kappa).c_str());
  return f.metric.degenerate ? kDegenerate : kOk;
}

int cmd_oracle(const CLI::App* app, const Options& o, Context& ctx) {
  auto run = load_run(o, ctx);
  std::optional<std::string> psi;
  if (!o.psi.empty()) psi = o.psi;
  if (run && run->psi) {
    if (psi || !o.psi_file.empty()) throw ConfigError("give only one graph source");
    psi = run->psi;
  }
  if (psi && !o.psi_file.empty()) throw ConfigError("give only one of --psi, --psi-file");
  const GraphPatch patch = [&]() -> GraphPatch {
    if (psi) {
      const auto chart =
          resolve_chart(app, o, ctx, run ? run->chart : std::nullopt, {0.5, 1.5}, 128);
      ctx.inputs["psi"] = *psi;
      ctx.inputs["chart"] = chart_json(chart);
      return graph_from_expression(*psi, chart);
    }
    if (!o.psi_file.empty()) {
      ctx.inputs["psi_file"] = o.psi_file;
      return {field_from_json(json::parse(read_text_file(o.psi_file))), o.psi_file, nullptr};
    }
    throw ConfigError("give --psi, --psi-file or a run file with psi");
  }();
  auto data = blaschke_data(patch);
  const auto shape = estimate_shape(patch);
  double lambda = shape.lambda;
  bool estimated = true;
  if (given(app, "--lambda")) {
    lambda = o.lambda;
    estimated = false;
  } else if (run && run->lambda) {
    lambda = *run->lambda;
    estimated = false;
  }
  ctx.inputs["lambda"] = estimated ? json("estimated") : json(lambda);

  json report = {{"source", patch.source},
                 {"chart", chart_json(patch.psi.chart())},
                 {"shape", to_json(shape)},
                 {"lambda", lambda},
                 {"lambda_estimated", estimated},
                 {"kappa_max", interior_max_abs(data.kappa)}};
  if (shape.warning) report["warnings"] = {"shape operator is not a multiple of the identity"};
  try {
    const auto cond = necessity_test(data, lambda);
    report["necessity"] = to_json(cond);
    report["J_proxy_min"] = min_abs(data.J_proxy);
  } catch (const DegenerateError& e) {
    // the report is still written; the exit code comes from the error
    report["degenerate"] = e.what();
    write_json(ctx, "oracle_report.json", report);
    throw;
  }
  write_json(ctx, "oracle_report.json", report);
  std::printf("oracle: lambda %s, fit residual %s%s\n", num(lambda).c_str(),
              num(shape.fit_residual).c_str(), shape.warning ? " (shape-fit warning)" : "");
  return kOk;
}

int cmd_converge(const CLI::App* app, const Options& o, Context& ctx) {
  ctx.inputs["case"] = o.case_name;
  ctx.inputs["grids"] = o.grids;
  ctx.inputs["min_order"] = o.min_order;
  if (!given(app, "--grids")) ctx.defaults.push_back("grids");
  const auto res = run_convergence(o.case_name, o.grids);
  std::string csv = "grid,residual_kind,value\n";
  for (const auto& r : res.rows) csv += std::to_string(r.grid) + "," + r.kind + "," + num(r.value) + "\n";
  write_text(ctx, "converge_" + o.case_name + ".csv", csv);
  json orders = json::object();
  for (const auto& [kind, fit] : res.orders) {
    orders[kind] = fit.floor ? json("floor") : json(*fit.order);
    std::printf("%-14s %s\n", kind.c_str(), fit.label().c_str());
  }
  const bool pass = res.passes(o.min_order);
  write_json(ctx, "converge_" + o.case_name + ".json",
             {{"case", o.case_name}, {"grids", o.grids}, {"orders", orders},
              {"min_order", o.min_order}, {"passed", pass}});
  return pass ? kOk : kFail;
}

int exit_code_for(const std::exception& e) {
  if (dynamic_cast<const FrameDegeneracyError*>(&e)) return kFrame;
  if (dynamic_cast<const DegenerateError*>(&e) || dynamic_cast<const SignError*>(&e))
    return kDegenerate;
  if (dynamic_cast<const expr::SyntaxError*>(&e) || dynamic_cast<const IoError*>(&e) ||
      dynamic_cast<const ConfigError*>(&e) || dynamic_cast<const BranchError*>(&e) ||
      dynamic_cast<const DomainError*>(&e) || dynamic_cast<const ChartMismatchError*>(&e))
    return kUsage;
  return kFail;
}

void add_metric_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--run", o.run, "run file (JSON or TOML)");
  cmd->add_option("--phi", o.phi, "conformal exponent phi(x, y) as an expression");
  cmd->add_option("--phi-file", o.phi_file, "conformal exponent as a grid-field JSON file");
  cmd->add_option("--lambda", o.lambda, "shape operator constant (default 0)");
  cmd->add_option("--threshold", o.threshold, "residual threshold");
}

void add_chart_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--epsilon", o.epsilon, "signature flag (+1 or -1)")
      ->check(CLI::IsMember({1, -1}));
  cmd->add_option("--domain", o.domain, "x_min x_max y_min y_max")->expected(4);
  cmd->add_option("--grid", o.grid, "grid points per axis")->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Blaschke metrics of affine spheres: checks, construction, reconstruction"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);
  Options o;
  app.add_option("--out", o.out, "output directory")->capture_default_str();

  auto* check = app.add_subcommand("check", "test the realizability condition");
  add_metric_options(check, o);
  add_chart_options(check, o);

  auto* construct = app.add_subcommand("construct", "construct the difference tensor K");
  add_metric_options(construct, o);
  add_chart_options(construct, o);
  construct->add_option("--beta", o.beta, "initial direction l(p) = beta");
  construct->add_option("--sign", o.sign, "choice of the pair +-K")->check(CLI::IsMember({1, -1}));
  construct->add_option("--F0", o.F0, "initial value of the potential F");

  auto* recon = app.add_subcommand("reconstruct", "integrate the frame and export a mesh");
  recon->add_option("--input", o.input, "K.json or a construct output directory");
  recon->add_option("--mesh", o.mesh, "mesh file name (relative to --out)");
  recon->add_option("--format", o.format, "obj or ply (default from extension)");
  recon->add_option("--mesh-nx", o.mesh_nx, "mesh vertices along x (subsampled)");
  recon->add_option("--mesh-ny", o.mesh_ny, "mesh vertices along y (subsampled)");
  recon->add_option("--threshold", o.threshold, "relative metric recovery threshold");

  auto* factory = app.add_subcommand("factory", "Blaschke metric of an improper sphere");
  factory->add_option("--run", o.run, "run file (JSON or TOML)");
  factory->add_option("--harmonic", o.harmonic, "harmonic preset");
  factory->add_option("--params", o.params, "preset parameters");
  factory->add_option("--curvature-sign", o.curvature_sign, "sign of the +-2 curvature factor")
      ->check(CLI::IsMember({1, -1}));
  factory->add_option("--lambda", o.lambda, "lambda for the improper residual (default 0)");
  add_chart_options(factory, o);

  auto* oracle = app.add_subcommand("oracle", "Blaschke data of a graph z = psi(x, y)");
  oracle->add_option("--run", o.run, "run file (JSON or TOML)");
  oracle->add_option("--psi", o.psi, "graph function as an expression");
  oracle->add_option("--psi-file", o.psi_file, "graph function as a grid-field JSON file");
  oracle->add_option("--lambda", o.lambda, "lambda (estimated when absent)");
  add_chart_options(oracle, o);

  auto* converge = app.add_subcommand("converge", "grid convergence study of a named case");
  converge->add_option("--case", o.case_name, "case name")
      ->required()
      ->check(CLI::IsMember(convergence_case_names()));
  converge->add_option("--grids", o.grids, "grid sizes")->delimiter(',');
  converge->add_option("--min-order", o.min_order, "required observed order")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  Context ctx;
  ctx.out = o.out;
  for (int k = 1; k < argc; ++k) ctx.argv.emplace_back(argv[k]);
  const CLI::App* sub = app.get_subcommands().front();
  ctx.command = sub->get_name();

  int code = kOk;
  try {
    fs::create_directories(ctx.out);
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: cannot create output directory '%s': %s\n", o.out.c_str(),
                 e.what());
    return kUsage;
  }
  try {
    if (sub == check) code = cmd_check(sub, o, ctx);
    else if (sub == construct) code = cmd_construct(sub, o, ctx);
    else if (sub == recon) code = cmd_reconstruct(sub, o, ctx);
    else if (sub == factory) code = cmd_factory(sub, o, ctx);
    else if (sub == oracle) code = cmd_oracle(sub, o, ctx);
    else code = cmd_converge(sub, o, ctx);
  } catch (const std::exception& e) {
    code = exit_code_for(e);
    ctx.message = e.what();
    std::fprintf(stderr, "error: %s\n", e.what());
  }

  json manifest = {{"tool", "blaschke"},
                   {"version", kVersion},
                   {"command", ctx.command},
                   {"argv", ctx.argv},
                   {"inputs", ctx.inputs},
                   {"defaults_applied", ctx.defaults},
                   {"outputs", ctx.outputs},
                   {"exit_code", code},
                   {"timestamp", iso_timestamp()}};
  if (!ctx.message.empty()) manifest["message"] = ctx.message;
  try {
    std::ofstream os(ctx.out / "manifest.json");
    os << manifest.dump(2) << "\n";
    if (!os) throw IoError("write failed");
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: cannot write manifest: %s\n", e.what());
    return kUsage;
  }
  return code;
}
