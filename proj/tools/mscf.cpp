// Command line front end: simulate, estimate, compare, bench.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mscf/pipeline.hpp"

namespace fs = std::filesystem;
using namespace mscf;

namespace {

enum class Level { quiet = 0, info = 1, debug = 2 };

Level log_level() {
  const char* env = std::getenv("MSCF_LOG");
  if (!env) return Level::info;
  const std::string v = env;
  if (v == "quiet" || v == "0") return Level::quiet;
  if (v == "debug" || v == "2") return Level::debug;
  return Level::info;
}

void log(Level level, const std::string& msg) {
  if (static_cast<int>(level) <= static_cast<int>(log_level())) std::cerr << "[mscf] " << msg << '\n';
}

/// Warnings beyond the allowed count turn into exit code 3.
struct WarningLimit : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check_warnings(std::size_t count, std::size_t limit, const std::string& what) {
  if (count > 0) log(Level::info, what + ": " + std::to_string(count) + " zero-denominator warnings");
  if (count > limit)
    throw WarningLimit(what + ": " + std::to_string(count) + " warnings exceed --max-warnings " + std::to_string(limit));
}

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  return out;
}

void write_columns(const fs::path& path, const EventGrid& grid, const std::vector<std::string>& names,
                   const std::vector<Eigen::VectorXd>& cols) {
  auto out = open_out(path);
  out << 't';
  for (const auto& n : names) out << ',' << n;
  out << '\n';
  for (Index m = 0; m < grid.size(); ++m) {
    out << format_double(grid[m]);
    for (const auto& c : cols) out << ',' << format_double(c[m]);
    out << '\n';
  }
}

void write_occupation(const fs::path& path, const GridPtr& grid, const Eigen::MatrixXd& p, const StateSpace& states) {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  for (int j = 0; j < states.size(); ++j) {
    names.push_back("p_" + states.label(j));
    cols.push_back(p.col(j));
  }
  write_columns(path, *grid, names, cols);
}

void write_hazards(const fs::path& path, const HazardBundle1D& h) {
  std::vector<std::string> names;
  std::vector<Eigen::VectorXd> cols;
  const auto& s = h.states;
  for (int j = 0; j < s.size(); ++j)
    for (int k = 0; k < s.size(); ++k) {
      if (j == k || h.increments.col(h.column(j, k)).isZero(0.0)) continue;
      names.push_back("L_" + s.label(j) + "_" + s.label(k));
      cols.push_back(h.cumulative(j, k).values());
    }
  write_columns(path, *h.grid, names, cols);
}

void write_cashflow(const fs::path& path, const CashFlowCurve& cf, std::span<const double> times) {
  auto out = open_out(path);
  out << "t,A";
  if (cf.std_error) out << ",se";
  if (cf.band) out << ",lower,upper";
  out << '\n';
  for (double t : times) {
    out << format_double(t) << ',' << format_double(cf.values(t));
    if (cf.std_error) out << ',' << format_double((*cf.std_error)(t));
    if (cf.band) out << ',' << format_double(cf.band->lower(t)) << ',' << format_double(cf.band->upper(t));
    out << '\n';
  }
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<StatePair> parse_pairs(const std::string& text, const StateSpace& states) {
  std::vector<StatePair> out;
  for (const auto& item : split(text, ';')) {
    const auto parts = split(item, ',');
    if (parts.size() != 2) throw ConfigError("--surfaces expects 'j1,j2;j1,j2;...'");
    out.push_back({states.index_of(parts[0]), states.index_of(parts[1])});
  }
  return out;
}

Model resolve_model(const std::string& name) {
  if (name.empty() || name == "freepolicy6") return freepolicy6_model();
  return load_model(name);
}

struct Global {
  unsigned threads = 0;
  std::string model;
};

struct SimulateArgs {
  std::size_t n = 0;
  std::uint64_t seed = 1;
  std::string censoring = "unif:20,80";
  std::string out;
};

int cmd_simulate(const Global& g, const SimulateArgs& a) {
  const Model model = resolve_model(g.model);
  const Dataset data = simulate_dataset(model, a.n, a.seed, Censoring::parse(a.censoring), g.threads);
  if (a.out.empty() || a.out == "-")
    write_dataset(std::cout, data);
  else
    write_dataset(a.out, data);
  log(Level::info, "simulated " + std::to_string(a.n) + " paths");
  return 0;
}

struct EstimateArgs {
  std::string in;
  std::string method = "saj";
  std::uint64_t aux_seed = 1;
  double eps = 0.0;
  std::string scaler = "exercise";
  std::string surfaces;
  std::size_t surface_points = 201;
  std::string h_at_jump = "right";
  std::string dump_empirical;
  std::string out = "out";
  double report_step = 0.25;
  std::size_t max_warnings = 0;
  std::size_t bootstrap = 0;
  double level = 0.9;
  std::uint64_t bootstrap_seed = 1;
};

int cmd_estimate(const Global& g, const EstimateArgs& a) {
  const Model model = resolve_model(g.model);
  const Dataset data = read_dataset(a.in, model);
  PipelineOptions opt;
  opt.eps = a.eps;
  opt.convention = parse_h_at_jump(a.h_at_jump);
  opt.report = report_times(model.horizon, a.report_step);
  opt.threads = g.threads;
  opt.aux_seed = a.aux_seed;
  const fs::path out = a.out;
  fs::create_directories(out);

  if (!a.dump_empirical.empty()) {
    const GridPtr grid = event_grid(data, model.horizon, opt.report);
    const Empirical1D e = build_1d(data, model.payments, grid, opt.convention);
    const fs::path dir = a.dump_empirical;
    const auto& s = data.states;
    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> cols;
    for (int j = 0; j < s.size(); ++j) {
      names.push_back("I_" + s.label(j));
      cols.push_back(e.at_risk.col(j));
      names.push_back("I0_" + s.label(j));
      cols.push_back(e.at_risk_unscaled.col(j));
      names.push_back("C_" + s.label(j));
      cols.push_back(e.censored.col(j));
      names.push_back("C0_" + s.label(j));
      cols.push_back(e.censored_unscaled.col(j));
    }
    for (int j = 0; j < s.size(); ++j)
      for (int k = 0; k < s.size(); ++k) {
        if (j == k || e.events_unscaled.col(e.column(j, k)).isZero(0.0)) continue;
        names.push_back("N_" + s.label(j) + "_" + s.label(k));
        cols.push_back(e.events.col(e.column(j, k)));
        names.push_back("N0_" + s.label(j) + "_" + s.label(k));
        cols.push_back(e.events_unscaled.col(e.column(j, k)));
      }
    write_columns(dir / "empirical.csv", *grid, names, cols);
  }

  auto bootstrap = [&](CashFlowCurve& cf, const std::function<CashFlowCurve(const Dataset&)>& run) {
    if (a.bootstrap == 0) return;
    const GridPtr report = make_grid(EventGrid(opt.report));
    cf.band = bootstrap_band(
        data, [&](const Dataset& d) { return sample(run(d).values, opt.report); }, report, a.bootstrap, a.level,
        a.bootstrap_seed, g.threads);
  };

  if (a.method == "saj") {
    SajRun r = run_saj(data, model, opt);
    check_warnings(r.warnings(), a.max_warnings, "saj");
    write_hazards(out / "lambda.csv", r.scaled);
    write_occupation(out / "p.csv", r.p_scaled.grid, r.p_scaled.p, data.states);
    bootstrap(r.cashflow, [&](const Dataset& d) { return run_saj(d, model, opt).cashflow; });
    write_cashflow(out / "cashflow.csv", r.cashflow, opt.report);
  } else if (a.method == "cmaj") {
    if (model.rho_bound > 1.0) throw ConfigError("cmaj: scaling factor exceeds 1; reparametrize the model");
    CmajRun r = run_cmaj(data, model, opt);
    check_warnings(r.hazards.warnings, a.max_warnings, "cmaj");
    write_hazards(out / "lambda.csv", r.hazards);
    write_occupation(out / "p.csv", r.p.grid, r.p.p, r.transformed.states);
    bootstrap(r.cashflow, [&](const Dataset& d) { return run_cmaj(d, model, opt).cashflow; });
    write_cashflow(out / "cashflow.csv", r.cashflow, opt.report);
  } else if (a.method == "2daj") {
    const auto pairs = parse_pairs(a.surfaces, data.states);
    const GridPtr grid = event_grid(data, model.horizon, opt.report);
    const GridPtr eval = thin_grid(*grid, a.surface_points);
    TwoDimRun r = run_2daj(data, model, opt, pairs, eval);
    check_warnings(r.warnings(), a.max_warnings, "2daj");
    for (const auto& p : pairs) {
      auto f = open_out(out / ("surface_" + data.states.label(p.first) + "_" + data.states.label(p.second) + ".csv"));
      write_csv(f, r.surfaces.surface(p), "p");
    }
    write_occupation(out / "p.csv", r.p_plain.grid, r.p_plain.p, data.states);
    bootstrap(r.cashflow, [&](const Dataset& d) { return run_2daj(d, model, opt).cashflow; });
    write_cashflow(out / "cashflow.csv", r.cashflow, opt.report);
  } else if (a.method == "barsaj") {
    const auto scaler = parse_scaler(a.scaler, model);
    const BarRun r = run_barsaj(data, model, *scaler, opt);
    check_warnings(r.bundle.warnings, a.max_warnings, "barsaj");
    write_occupation(out / "p.csv", r.bundle.grid, r.p, data.states);
    std::vector<std::string> names;
    std::vector<Eigen::VectorXd> cols;
    for (int j = 0; j < data.states.size(); ++j) {
      names.push_back("dH_" + data.states.label(j));
      cols.push_back(r.bundle.dH.col(j));
    }
    write_columns(out / "forward_rates.csv", *r.bundle.grid, names, cols);
  } else {
    throw ConfigError("unknown method '" + a.method + "' (saj, cmaj, 2daj, barsaj)");
  }
  log(Level::info, "wrote " + out.string());
  return 0;
}

struct CompareArgs {
  std::string in;
  std::string methods = "saj,cmaj,2daj";
  std::string oracle = "mc:10000";
  std::uint64_t oracle_seed = 1;
  std::uint64_t aux_seed = 1;
  std::string out = "report";
  double report_step = 0.25;
  double assert_until = 35.0;
  std::size_t max_warnings = 0;
};

int cmd_compare(const Global& g, const CompareArgs& a) {
  const Model model = resolve_model(g.model);
  const Dataset data = read_dataset(a.in, model);
  PipelineOptions opt;
  opt.report = report_times(model.horizon, a.report_step);
  opt.threads = g.threads;
  opt.aux_seed = a.aux_seed;
  const fs::path out = a.out;
  fs::create_directories(out);

  if (a.oracle.rfind("mc:", 0) != 0) throw ConfigError("--oracle must be mc:<paths>");
  std::size_t n_mc = 0;
  try {
    n_mc = std::stoul(a.oracle.substr(3));
  } catch (const std::logic_error&) {
    throw ConfigError("--oracle must be mc:<paths>");
  }
  const GridPtr report = make_grid(EventGrid(opt.report));
  const CashFlowCurve oracle = mc_oracle(model, n_mc, a.oracle_seed, report, g.threads);
  write_cashflow(out / "oracle.csv", oracle, opt.report);

  auto summary = open_out(out / "summary.csv");
  summary << "method,n,sup_abs_dev,sup_rel_dev,until,warnings\n";
  auto timings = open_out(out / "timings.csv");
  timings << "method,seconds\n";
  std::size_t total_warnings = 0;
  for (const auto& method : split(a.methods, ',')) {
    const auto start = std::chrono::steady_clock::now();
    CashFlowCurve cf;
    std::size_t warnings = 0;
    if (method == "saj") {
      auto r = run_saj(data, model, opt);
      cf = std::move(r.cashflow);
      warnings = r.warnings();
    } else if (method == "cmaj") {
      auto r = run_cmaj(data, model, opt);
      cf = std::move(r.cashflow);
      warnings = r.hazards.warnings;
    } else if (method == "2daj") {
      auto r = run_2daj(data, model, opt);
      cf = std::move(r.cashflow);
      warnings = r.warnings();
    } else {
      throw ConfigError("unknown method '" + method + "' (saj, cmaj, 2daj)");
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    double sup_abs = 0.0, sup_rel = 0.0;
    for (double t : opt.report) {
      if (t > a.assert_until) break;
      const double ref = oracle.values(t);
      const double dev = std::abs(cf.values(t) - ref);
      sup_abs = std::max(sup_abs, dev);
      sup_rel = std::max(sup_rel, dev / (1.0 + std::abs(ref)));
    }
    write_cashflow(out / ("cashflow_" + method + ".csv"), cf, opt.report);
    summary << method << ',' << data.size() << ',' << format_double(sup_abs) << ',' << format_double(sup_rel) << ','
            << format_double(a.assert_until) << ',' << warnings << '\n';
    timings << method << ',' << format_double(seconds) << '\n';
    total_warnings += warnings;
    log(Level::info, method + ": sup |A - A_MC| = " + format_double(sup_abs) + " in " + format_double(seconds) + " s");
  }
  check_warnings(total_warnings, a.max_warnings, "compare");
  return 0;
}

struct BenchArgs {
  std::string sizes = "500,1000,2000";
  std::uint64_t seed = 1;
  std::string censoring = "unif:20,80";
  std::size_t repeats = 3;
  std::string out;
};

int cmd_bench(const Global& g, const BenchArgs& a) {
  const Model model = resolve_model(g.model);
  PipelineOptions opt;
  opt.threads = g.threads;
  std::vector<std::size_t> sizes;
  for (const auto& s : split(a.sizes, ',')) sizes.push_back(std::stoul(s));
  if (sizes.empty()) throw ConfigError("--sizes is empty");
  auto time_min = [&](const std::function<void()>& fn, std::size_t repeats) {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < repeats; ++r) {
      const auto start = std::chrono::steady_clock::now();
      fn();
      best = std::min(best, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    }
    return best;
  };
  std::ostringstream table;
  table << "n,saj_seconds,twodaj_seconds\n";
  std::vector<double> saj, twod;
  for (std::size_t n : sizes) {
    const Dataset data = simulate_dataset(model, n, a.seed, Censoring::parse(a.censoring), g.threads);
    // The one-dimensional run is short, so it is repeated more often.
    saj.push_back(time_min([&] { (void)run_saj(data, model, opt); }, a.repeats * 5));
    twod.push_back(time_min([&] { (void)run_2daj(data, model, opt); }, a.repeats));
    table << n << ',' << format_double(saj.back()) << ',' << format_double(twod.back()) << '\n';
    log(Level::info, "n=" + std::to_string(n) + " saj " + format_double(saj.back()) + " s, 2daj " +
                         format_double(twod.back()) + " s");
  }
  if (a.out.empty()) {
    std::cout << table.str();
  } else {
    auto f = open_out(a.out);
    f << table.str();
  }
  for (std::size_t i = 1; i < sizes.size(); ++i)
    std::cout << "ratio n=" << sizes[i - 1] << "->" << sizes[i] << ": saj " << format_double(saj[i] / saj[i - 1])
              << ", 2daj " << format_double(twod[i] / twod[i - 1]) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Scaled multi-state cash-flow estimation"};
  app.require_subcommand(1);
  Global g;
  app.add_option("--threads", g.threads, "Worker threads (0 = logical cores)");
  app.add_option("--model", g.model, "Model config (JSON) or 'freepolicy6'");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Simulate a censored dataset");
  s->add_option("--model", g.model, "Model config (JSON) or 'freepolicy6'");
  s->add_option("--n", sim.n, "Number of paths")->required();
  s->add_option("--seed", sim.seed, "Master seed");
  s->add_option("--censoring", sim.censoring, "none | unif:<lo>,<hi>");
  s->add_option("--out", sim.out, "Output file ('-' for stdout)");

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate occupation probabilities and cash flows");
  e->add_option("--model", g.model, "Model config (JSON) or 'freepolicy6'");
  e->add_option("--in", est.in, "Dataset file")->required();
  e->add_option("--method", est.method, "saj | cmaj | 2daj | barsaj");
  e->add_option("--aux-seed", est.aux_seed, "Seed of the auxiliary uniforms (cmaj)");
  e->add_option("--eps", est.eps, "Denominator floor");
  e->add_option("--scaler", est.scaler, "exercise | discount:delta=<x>[,<state>=<x>] (barsaj)");
  e->add_option("--surfaces", est.surfaces, "Pairs to export, e.g. '1,1;1,2' (2daj)");
  e->add_option("--surface-points", est.surface_points, "Evaluation points per axis for --surfaces");
  e->add_option("--h-at-jump", est.h_at_jump, "right | left");
  e->add_option("--dump-empirical", est.dump_empirical, "Directory for the empirical processes");
  e->add_option("--out", est.out, "Output directory");
  e->add_option("--report-step", est.report_step, "Spacing of the cash-flow report times");
  e->add_option("--max-warnings", est.max_warnings, "Allowed zero-denominator warnings");
  e->add_option("--bootstrap", est.bootstrap, "Bootstrap replicates for a band (0 = none)");
  e->add_option("--level", est.level, "Band level");
  e->add_option("--bootstrap-seed", est.bootstrap_seed, "Bootstrap seed");

  CompareArgs cmp;
  auto* c = app.add_subcommand("compare", "Compare estimators against a Monte Carlo oracle");
  c->add_option("--model", g.model, "Model config (JSON) or 'freepolicy6'");
  c->add_option("--in", cmp.in, "Dataset file")->required();
  c->add_option("--methods", cmp.methods, "Comma-separated methods");
  c->add_option("--oracle", cmp.oracle, "mc:<paths>");
  c->add_option("--oracle-seed", cmp.oracle_seed, "Oracle seed");
  c->add_option("--aux-seed", cmp.aux_seed, "Seed of the auxiliary uniforms (cmaj)");
  c->add_option("--out", cmp.out, "Report directory");
  c->add_option("--report-step", cmp.report_step, "Spacing of the report times");
  c->add_option("--until", cmp.assert_until, "Last time entering the sup deviations");
  c->add_option("--max-warnings", cmp.max_warnings, "Allowed zero-denominator warnings");

  BenchArgs bench;
  auto* b = app.add_subcommand("bench", "Time SAJ and 2dAJ against n");
  b->add_option("--model", g.model, "Model config (JSON) or 'freepolicy6'");
  b->add_option("--sizes", bench.sizes, "Comma-separated sample sizes");
  b->add_option("--seed", bench.seed, "Master seed");
  b->add_option("--censoring", bench.censoring, "none | unif:<lo>,<hi>");
  b->add_option("--repeats", bench.repeats, "Repetitions (minimum is reported)");
  b->add_option("--out", bench.out, "CSV output (stdout if empty)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? 0 : 2;
  }
  try {
    if (*s) return cmd_simulate(g, sim);
    if (*e) return cmd_estimate(g, est);
    if (*c) return cmd_compare(g, cmp);
    if (*b) return cmd_bench(g, bench);
  } catch (const WarningLimit& err) {
    std::cerr << "mscf: " << err.what() << '\n';
    return 3;
  } catch (const ConfigError& err) {
    std::cerr << "mscf: " << err.what() << '\n';
    return 2;
  } catch (const ParseError& err) {
    std::cerr << "mscf: " << err.what() << '\n';
    return 2;
  } catch (const std::exception& err) {
    std::cerr << "mscf: " << err.what() << '\n';
    return 1;
  }
  return 0;
}
