#include "bfam/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "bfam/conservation.hpp"
#include "bfam/diagnostics.hpp"
#include "bfam/evolution.hpp"
#include "bfam/grid.hpp"
#include "bfam/io.hpp"
#include "bfam/linops.hpp"
#include "bfam/modulation.hpp"
#include "bfam/version.hpp"

namespace bfam::cli {

namespace {

const std::set<std::string> kKnownKeys = {
    "b", "A", "xstar", "length", "n", "dt", "T", "window", "seed", "out",
    "form", "initial", "perturb_amp", "perturb_center", "gauss_amp", "gauss_width",
    "peakon_speed", "stride", "dealias", "positivity_guard", "cfl_check", "cfl",
    "blowup_factor", "beta", "x0", "t0", "disc", "nw", "eig_count", "svg", "state"};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> kv;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!kKnownKeys.count(key))
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": unknown key '" + key + "'");
    kv[key] = value;
  }
  return kv;
}

std::map<std::string, std::string> load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read config: " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config_path;
  j["out_dir"] = out_dir;
  j["seed"] = seed;
  j["toolkit_version"] = version;
  j["settings"] = settings;
  j["outputs"] = outputs;
  io::write_json(path, j);
}

namespace {

struct Options {
  double b = -3.0, A = 1.0, xstar = 0.0;
  double length = 80.0;
  int n = 4096;
  double dt = 1e-3, T = 10.0;
  double window = 12.0;
  unsigned seed = 0;
  std::string out;
  std::string config_path;
  std::string form = "momentum";
  std::string initial = "lefton";
  double perturb_amp = 1e-2, perturb_center = 2.0;
  double gauss_amp = 1.0, gauss_width = 5.0;
  double peakon_speed = 1.0;
  int stride = 100;
  bool dealias = true;
  std::string positivity_guard = "auto";
  bool cfl_check = true;
  double cfl = 0.5;
  double blowup_factor = 1e6;
  double beta = 1.0;
  double x0 = 10.0, t0 = 0.0;
  std::string disc = "fourier";
  int nw = 1024;
  int eig_count = 12;
  bool svg = false;
  std::string state;

  void apply_config(const std::map<std::string, std::string>& kv) {
    auto get = [&](const char* key) -> const std::string* {
      auto it = kv.find(key);
      return it == kv.end() ? nullptr : &it->second;
    };
    auto as_bool = [](const std::string& s) {
      return s == "1" || s == "true" || s == "on" || s == "yes";
    };
    if (auto v = get("b")) b = std::stod(*v);
    if (auto v = get("A")) A = std::stod(*v);
    if (auto v = get("xstar")) xstar = std::stod(*v);
    if (auto v = get("length")) length = std::stod(*v);
    if (auto v = get("n")) n = std::stoi(*v);
    if (auto v = get("dt")) dt = std::stod(*v);
    if (auto v = get("T")) T = std::stod(*v);
    if (auto v = get("window")) window = std::stod(*v);
    if (auto v = get("seed")) seed = static_cast<unsigned>(std::stoul(*v));
    if (auto v = get("out")) out = *v;
    if (auto v = get("form")) form = *v;
    if (auto v = get("initial")) initial = *v;
    if (auto v = get("perturb_amp")) perturb_amp = std::stod(*v);
    if (auto v = get("perturb_center")) perturb_center = std::stod(*v);
    if (auto v = get("gauss_amp")) gauss_amp = std::stod(*v);
    if (auto v = get("gauss_width")) gauss_width = std::stod(*v);
    if (auto v = get("peakon_speed")) peakon_speed = std::stod(*v);
    if (auto v = get("stride")) stride = std::stoi(*v);
    if (auto v = get("dealias")) dealias = as_bool(*v);
    if (auto v = get("positivity_guard")) positivity_guard = *v;
    if (auto v = get("cfl_check")) cfl_check = as_bool(*v);
    if (auto v = get("cfl")) cfl = std::stod(*v);
    if (auto v = get("blowup_factor")) blowup_factor = std::stod(*v);
    if (auto v = get("beta")) beta = std::stod(*v);
    if (auto v = get("x0")) x0 = std::stod(*v);
    if (auto v = get("t0")) t0 = std::stod(*v);
    if (auto v = get("disc")) disc = *v;
    if (auto v = get("nw")) nw = std::stoi(*v);
    if (auto v = get("eig_count")) eig_count = std::stoi(*v);
    if (auto v = get("svg")) svg = as_bool(*v);
    if (auto v = get("state")) state = *v;
  }

  SimConfig sim_config() const {
    SimConfig c;
    c.b = b;
    c.A = A;
    c.x_star = xstar;
    c.length = length;
    c.n = n;
    c.dt = dt;
    c.t_final = T;
    c.snapshot_stride = stride;
    c.cfl_safety = cfl;
    c.cfl_check = cfl_check;
    c.dealias_products = dealias;
    c.blowup_factor = blowup_factor;
    c.seed = seed;
    if (positivity_guard == "on")
      c.positivity_guard = SimConfig::Guard::on;
    else if (positivity_guard == "off")
      c.positivity_guard = SimConfig::Guard::off;
    else if (positivity_guard == "auto")
      c.positivity_guard = SimConfig::Guard::auto_default;
    else
      throw std::invalid_argument("positivity_guard must be auto|on|off");
    if (form == "momentum")
      c.form = FlowForm::momentum;
    else if (form == "velocity")
      c.form = FlowForm::velocity;
    else if (form == "linearized")
      c.form = FlowForm::linearized;
    else
      throw std::invalid_argument("form must be momentum|velocity|linearized");
    if (initial == "lefton")
      c.initial.kind = InitialKind::lefton;
    else if (initial == "lefton_perturbed")
      c.initial.kind = InitialKind::lefton_perturbed;
    else if (initial == "peakon")
      c.initial.kind = InitialKind::peakon;
    else if (initial == "gaussian")
      c.initial.kind = InitialKind::gaussian;
    else
      throw std::invalid_argument("initial must be lefton|lefton_perturbed|peakon|gaussian");
    c.initial.perturb_amp = perturb_amp;
    c.initial.perturb_center = perturb_center;
    c.initial.gauss_amp = gauss_amp;
    c.initial.gauss_width = gauss_width;
    c.initial.peakon_speed = peakon_speed;
    return c;
  }

  std::filesystem::path out_dir(const std::string& command) const {
    if (!out.empty()) return out;
    const char* root = std::getenv("BFAM_OUT_ROOT");
    return std::filesystem::path(root ? root : ".") / ("bfam_" + command);
  }

  RunManifest manifest(const std::string& command) const {
    RunManifest m;
    m.command = command;
    m.config_path = config_path;
    m.out_dir = out_dir(command).string();
    m.seed = seed;
    m.version = kVersion;
    m.settings["b"] = io::format_double(b);
    m.settings["A"] = io::format_double(A);
    m.settings["xstar"] = io::format_double(xstar);
    m.settings["length"] = io::format_double(length);
    m.settings["n"] = std::to_string(n);
    m.settings["dt"] = io::format_double(dt);
    m.settings["T"] = io::format_double(T);
    m.settings["window"] = io::format_double(window);
    m.settings["form"] = form;
    m.settings["disc"] = disc;
    return m;
  }
};

void add_common_options(CLI::App* cmd, Options& o) {
  cmd->add_option("--b", o.b, "regime parameter b");
  cmd->add_option("--A", o.A, "lefton amplitude");
  cmd->add_option("--xstar", o.xstar, "lefton center");
  cmd->add_option("--length", o.length, "domain length");
  cmd->add_option("--n", o.n, "grid points (even)");
  cmd->add_option("--dt", o.dt, "time step");
  cmd->add_option("--T", o.T, "final time");
  cmd->add_option("--window", o.window, "weighted-norm window half width");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--config", o.config_path, "key=value config file");
  cmd->add_option("--seed", o.seed, "seed for randomized suites");
}

int run_evolve(Options& o) {
  const SimConfig cfg = o.sim_config();
  Trajectory traj = evolve(cfg);
  const auto dir = o.out_dir("evolve");
  RunManifest man = o.manifest("evolve");
  traj.write_csv(dir / "trajectory.csv");
  man.outputs.push_back((dir / "trajectory.csv").string());
  traj.write_binary(dir / "trajectory.bin", dir / "trajectory.bin.json");
  man.outputs.push_back((dir / "trajectory.bin").string());
  man.outputs.push_back((dir / "trajectory.bin.json").string());
  if (cfg.form != FlowForm::linearized) {
    traj.invariants.write_csv(dir / "invariants.csv");
    man.outputs.push_back((dir / "invariants.csv").string());
  }
  man.write(dir / "manifest.json");
  std::cout << "evolve: " << traj.times.size() << " snapshots -> " << dir.string() << "\n";
  return 0;
}

int run_spectrum(Options& o) {
  const LeftonParams p(o.b, o.A, o.xstar);
  WindowGrid w = default_spectrum_window(p);
  w.count = o.nw;
  const Discretization disc =
      o.disc == "fd4" ? Discretization::fd4 : Discretization::fourier;
  const OperatorMatrix H = assemble_H(w, p, disc);
  const EigenReport rep = spectrum_H(H, p, o.eig_count);
  const auto dir = o.out_dir("spectrum");
  RunManifest man = o.manifest("spectrum");
  rep.write_json(dir / "eigenreport.json");
  man.outputs.push_back((dir / "eigenreport.json").string());
  man.write(dir / "manifest.json");
  std::cout << "lambda0 = " << io::format_double(rep.lambda0)
            << " (expected " << io::format_double(rep.lambda0_expected) << ")\n";
  return 0;
}

int run_verify(Options& o) {
  const LeftonParams p(o.b, o.A, o.xstar);
  const Grid g(o.length, o.n);
  VerificationReport rep = verify_operator_identities(g, p);

  // Composition equivalence on seeded random smooth fields.
  double worst_bl = 0.0, worst_lb = 0.0;
  for (unsigned i = 0; i < 10; ++i) {
    const Field v = random_smooth_field(g, p, o.seed + i);
    worst_bl = std::max(worst_bl, composition_residual(g, apply_BL_closed(g, v, p),
                                                       compose_B_of_Q_after_L(g, v, p), p,
                                                       o.window));
    worst_lb = std::max(worst_lb, composition_residual(g, apply_LB_closed(g, v, p),
                                                       compose_L_after_B_of_Q(g, v, p), p,
                                                       o.window));
  }
  rep.checks.push_back({"composition_BL", worst_bl, 1e-6, worst_bl <= 1e-6,
                        "closed form vs B(Q) after L, 10 seeded fields"});
  rep.checks.push_back({"composition_LB", worst_lb, 1e-6, worst_lb <= 1e-6,
                        "closed form vs L after B(Q), 10 seeded fields"});

  const double lam1 = coercivity_estimate(g, p, o.window);
  CoercivityOptions co;
  co.window = o.window;
  co.drop_sq_constraint = true;
  const double lam_nosq = coercivity_estimate_opts(g, p, co);
  rep.checks.push_back({"coercivity_positive", lam1, 0.0, lam1 > 0.0,
                        "constrained Rayleigh minimum"});
  rep.checks.push_back({"coercivity_drops_negative", lam_nosq, 0.0, lam_nosq < 0.0,
                        "minimum without the SQ constraint"});

  const auto dir = o.out_dir("verify");
  RunManifest man = o.manifest("verify");
  rep.write_json(dir / "verify.json");
  man.outputs.push_back((dir / "verify.json").string());
  man.write(dir / "manifest.json");
  for (const auto& c : rep.checks)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " residual "
              << io::format_double(c.residual) << "\n";
  return rep.all_pass() ? 0 : 1;
}

int run_modulate(Options& o) {
  if (o.state.empty()) throw std::invalid_argument("modulate requires state=<trajectory.bin>");
  std::ifstream sj(o.state + ".json");
  if (!sj) throw std::invalid_argument("missing sidecar: " + o.state + ".json");
  nlohmann::json meta = nlohmann::json::parse(sj);
  const size_t n_snap = meta.at("n_snapshots").get<size_t>();
  const size_t n_pts = meta.at("n_points").get<size_t>();
  Trajectory traj;
  traj.states = io::read_binary_columns(o.state, n_snap, n_pts);
  traj.times = meta.at("times").get<std::vector<double>>();
  const double length = meta.at("grid").at("length").get<double>();
  const LeftonParams p(meta.at("b").get<double>(), meta.at("A").get<double>(),
                       meta.at("x_star").get<double>());
  const Grid g(length, static_cast<int>(n_pts));
  DecomposeOptions dopts;
  dopts.window = o.window;
  const ModulationSeries series = modulation_series(g, traj, p, dopts);
  const auto dir = o.out_dir("modulate");
  RunManifest man = o.manifest("modulate");
  series.write_csv(dir / "modulation.csv");
  man.outputs.push_back((dir / "modulation.csv").string());
  man.write(dir / "manifest.json");
  std::cout << "modulate: " << series.frames.size() << " frames -> " << dir.string() << "\n";
  return 0;
}

int run_stability(Options& o) {
  StabilityOptions opts = default_stability_options();
  opts.config.b = o.b;
  opts.config.A = o.A;
  opts.config.x_star = o.xstar;
  opts.config.length = o.length;
  opts.config.n = o.n;
  opts.config.dt = o.dt;
  opts.config.t_final = o.T;
  opts.config.snapshot_stride = o.stride;
  opts.config.initial.perturb_amp = o.perturb_amp;
  opts.config.initial.perturb_center = o.perturb_center;
  opts.beta = o.beta;
  opts.out_dir = o.out_dir("stability");
  opts.svg = o.svg;
  ExperimentReport rep = experiment_stability(opts);
  RunManifest man = o.manifest("stability");
  rep.write_json(opts.out_dir / "stability.json");
  man.outputs.push_back((opts.out_dir / "stability.json").string());
  for (const auto& a : rep.artifacts) man.outputs.push_back(a);
  man.write(opts.out_dir / "manifest.json");
  for (const auto& c : rep.criteria)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured "
              << io::format_double(c.measured) << "\n";
  return rep.all_pass() ? 0 : 1;
}

int run_regimes(Options& o) {
  RegimesOptions opts;
  opts.length = o.length;
  opts.n = o.n;
  opts.gauss_amp = o.gauss_amp;
  opts.gauss_width = o.gauss_width;
  opts.dt = o.dt;
  opts.out_dir = o.out_dir("regimes");
  opts.svg = o.svg;
  ExperimentReport rep = experiment_regimes(opts);
  RunManifest man = o.manifest("regimes");
  rep.write_json(opts.out_dir / "regimes.json");
  man.outputs.push_back((opts.out_dir / "regimes.json").string());
  for (const auto& a : rep.artifacts) man.outputs.push_back(a);
  man.write(opts.out_dir / "manifest.json");
  for (const auto& c : rep.criteria)
    std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << " measured "
              << io::format_double(c.measured) << "\n";
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int dispatch(const std::vector<std::string>& args) {
  CLI::App app{"b-family lefton simulation and verification toolkit"};
  app.require_subcommand(1);

  Options o;

  // Config file first (when present), so command-line flags override it:
  // CLI11 only writes into bound variables for options actually given.
  try {
    for (size_t i = 0; i < args.size(); ++i) {
      if (args[i] == "--config" && i + 1 < args.size()) {
        o.config_path = args[i + 1];
      } else if (args[i].rfind("--config=", 0) == 0) {
        o.config_path = args[i].substr(9);
      }
    }
    if (!o.config_path.empty()) o.apply_config(load_config(o.config_path));
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }

  auto* cmd_evolve = app.add_subcommand("evolve", "time-evolve the nonlinear or linearized flow");
  auto* cmd_spectrum = app.add_subcommand("spectrum", "eigenreport of the transformed operator H");
  auto* cmd_verify = app.add_subcommand("verify", "operator-identity and coercivity suite");
  auto* cmd_modulate = app.add_subcommand("modulate", "decompose a stored trajectory");
  auto* cmd_stability = app.add_subcommand("stability", "perturbed-lefton stability experiment");
  auto* cmd_regimes = app.add_subcommand("regimes", "Gaussian-data scan over b regimes");
  for (auto* c : {cmd_evolve, cmd_spectrum, cmd_verify, cmd_modulate, cmd_stability, cmd_regimes})
    add_common_options(c, o);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    if (cmd_evolve->parsed()) return run_evolve(o);
    if (cmd_spectrum->parsed()) return run_spectrum(o);
    if (cmd_verify->parsed()) return run_verify(o);
    if (cmd_modulate->parsed()) return run_modulate(o);
    if (cmd_stability->parsed()) return run_stability(o);
    if (cmd_regimes->parsed()) return run_regimes(o);
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace bfam::cli
