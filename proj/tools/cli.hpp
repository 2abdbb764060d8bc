#pragma once

// Command-line front end. run() parses argv, executes one subcommand and
// returns the process exit code: 0 success, 2 usage, 3 numerical failure,
// 1 anything else. Errors are reported on the error stream as one JSON
// object {"error": {"category": ..., "message": ...}}.

#include <CLI11.hpp>
#include <json.hpp>

#include <boost/version.hpp>
#include <gsl/gsl_version.h>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "rwb/rwb.hpp"

namespace rwb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr const char* kVersion = "1.0.0";
inline constexpr int kManifestSchema = 1;

struct Options {
  std::string command;
  int d = 3;
  std::uint64_t n = 1024;
  std::vector<std::uint64_t> n_grid;
  std::uint64_t replicas = 100;
  std::uint64_t direct_replicas = 0;
  std::uint64_t seed = 1;
  int radius = 32;
  double tol = 1e-8;
  std::uint64_t horizon = 10000;
  int checkpoints = 0;
  int workers = 1;
  std::string out_dir = ".";
  std::string format = "csv";
  std::string functional = "boundary";
  int levels = -1;
  std::string cache_dir = "green-cache";
  bool radius_given = false;
};

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericalFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<json>> rows;
};

inline std::string cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  return v.dump();
}

class Run {
 public:
  Run(const Options& o, std::ostream& out) : opt_(o), out_(out), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(opt_.out_dir);
  }

  // Writes a table as <stem>.csv or <stem>.json and records it.
  void write_table(const std::string& stem, const Table& t) {
    std::ostringstream os;
    if (opt_.format == "json") {
      json arr = json::array();
      for (const auto& r : t.rows) {
        json obj = json::object();
        for (std::size_t i = 0; i < t.columns.size(); ++i) obj[t.columns[i]] = r[i];
        arr.push_back(obj);
      }
      os << arr.dump(2) << "\n";
    } else {
      for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
      os << "\n";
      for (const auto& r : t.rows) {
        for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << cell(r[i]);
        os << "\n";
      }
    }
    write_file(stem + (opt_.format == "json" ? ".json" : ".csv"), os.str());
  }

  void write_file(const std::string& name, const std::string& content) {
    fs::path p = fs::path(opt_.out_dir) / name;
    atomic_write(p, content);
    outputs_.push_back(name);
  }

  void set_green(const json& g) { green_ = g; }
  void set_result(const json& r) { result_ = r; }

  void finish() {
    double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    json m;
    m["schema_version"] = kManifestSchema;
    m["subcommand"] = opt_.command;
    m["config"] = config_json();
    m["master_seed"] = opt_.seed;
    m["green_table"] = green_;
    m["versions"] = {{"rwb", kVersion},
                     {"compiler", __VERSION__},
                     {"cxx_standard", __cplusplus},
                     {"gsl", GSL_VERSION},
                     {"boost", BOOST_LIB_VERSION},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                   std::to_string(EIGEN_MINOR_VERSION)}};
    m["outputs"] = outputs_;
    m["result"] = result_;
    m["wall_time_seconds"] = wall;
    atomic_write(fs::path(opt_.out_dir) / "manifest.json", m.dump(2) + "\n");
  }

  json config_json() const {
    return {{"d", opt_.d},
            {"n", opt_.n},
            {"n_grid", opt_.n_grid},
            {"replicas", opt_.replicas},
            {"direct_replicas", opt_.direct_replicas},
            {"seed", opt_.seed},
            {"green_radius", opt_.radius},
            {"tol", opt_.tol},
            {"horizon", opt_.horizon},
            {"checkpoints", opt_.checkpoints},
            {"workers", opt_.workers},
            {"out_dir", opt_.out_dir},
            {"format", opt_.format},
            {"functional", opt_.functional},
            {"levels", opt_.levels},
            {"cache_dir", opt_.cache_dir}};
  }

  std::ostream& out() { return out_; }

  static void atomic_write(const fs::path& p, const std::string& content) {
    fs::path tmp = p;
    tmp += ".tmp";
    {
      std::ofstream f(tmp, std::ios::binary);
      if (!f) throw std::runtime_error("cannot write " + tmp.string());
      f << content;
      if (!f) throw std::runtime_error("write failed for " + tmp.string());
    }
    fs::rename(tmp, p);
  }

 private:
  const Options& opt_;
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
  json green_ = nullptr;
  json result_ = nullptr;
};

inline std::string hex64(std::uint64_t x) {
  std::ostringstream os;
  os << std::hex << std::setw(16) << std::setfill('0') << x;
  return os.str();
}

template <int D>
json green_json(const GreenTable<D>& g) {
  return {{"d", D},
          {"radius", g.radius()},
          {"tol", g.tol()},
          {"eps", g.eps()},
          {"g00", g.g00()},
          {"far_constant", g.far_constant()},
          {"fingerprint", hex64(g.fingerprint())}};
}

// Explicit grid, else `checkpoints` geometric times ending at n, else powers
// of two up to n together with n.
inline std::vector<std::uint64_t> resolve_grid(const Options& o) {
  std::vector<std::uint64_t> g;
  if (!o.n_grid.empty()) {
    g = o.n_grid;
  } else if (o.checkpoints > 0) {
    for (int i = 1; i <= o.checkpoints; ++i) {
      double t = std::pow(double(o.n), double(i) / o.checkpoints);
      g.push_back(static_cast<std::uint64_t>(std::llround(t)));
    }
  } else {
    for (std::uint64_t p = 1; p < o.n; p *= 2) g.push_back(p);
    g.push_back(o.n);
  }
  std::sort(g.begin(), g.end());
  g.erase(std::unique(g.begin(), g.end()), g.end());
  return g;
}

inline ExperimentConfig make_config(const Options& o) {
  ExperimentConfig c;
  c.d = o.d;
  c.n_grid = resolve_grid(o);
  c.replicas = o.replicas;
  c.direct_replicas = o.direct_replicas;
  c.seed = o.seed;
  c.green_radius = o.radius;
  c.tol = o.tol;
  c.horizon = o.horizon;
  c.workers = o.workers;
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  return c;
}

template <int D>
GreenTable<D> obtain_green(const Options& o, Run& run) {
  auto g = load_or_build_green_table<D>(o.cache_dir, o.radius, o.tol);
  run.set_green(green_json(g));
  return g;
}

// ---------------------------------------------------------------------------
// Subcommands.

template <int D>
void cmd_green_build(const Options& o, Run& run) {
  bool built = false;
  auto t0 = std::chrono::steady_clock::now();
  auto g = load_or_build_green_table<D>(o.cache_dir, o.radius, o.tol, &built);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  run.set_green(green_json(g));
  std::ostringstream text;
  save_text(g, text);
  run.write_file("green_table.txt", text.str());
  Table t{{"d", "radius", "tol", "eps", "g00", "far_constant", "fingerprint", "points", "built"}, {}};
  t.rows.push_back({D, g.radius(), g.tol(), g.eps(), g.g00(), g.far_constant(), hex64(g.fingerprint()), g.size(), built});
  run.write_table("green_summary", t);
  run.set_result({{"g00", g.g00()}, {"seconds", secs}, {"built", built}});
  run.out() << "green table d=" << D << " R=" << g.radius() << " g00=" << std::setprecision(15) << g.g00() << (built ? " (built)" : " (cached)")
            << "\n";
}

template <int D>
void cmd_simulate(const Options& o, Run& run) {
  auto cfg = make_config(o);
  auto res = simulate<D>(cfg);
  const auto& reps = ClassTable<D>::instance().representatives();
  Table t{{"replica", "n", "range", "boundary"}, {}};
  for (auto rep : reps) t.columns.push_back("class_" + std::to_string(rep.bits));
  for (const auto& rows : res) {
    for (const auto& r : rows) {
      std::vector<json> row{r.replica, r.n, r.range, r.boundary};
      for (auto c : r.class_counts) row.push_back(c);
      t.rows.push_back(std::move(row));
    }
  }
  run.write_table("simulate", t);
}

template <int D>
void cmd_decompose(const Options& o, Run& run) {
  auto cfg = make_config(o);
  auto g = obtain_green<D>(o, run);
  MaskCover<D> cover(g);
  auto traces = run_replicas(cfg.replicas, cfg.workers, [&](std::uint64_t r) {
    Rng rng = Rng::for_replica(cfg.seed, r);
    auto path = gen_srw<D>(cfg.n_grid.back(), rng);
    return trace(path, cfg.n_grid, cover);
  });
  Table t{{"replica", "n", "boundary", "A", "X", "M", "E", "X_error_bound"}, {}};
  for (std::size_t r = 0; r < traces.size(); ++r)
    for (const auto& p : traces[r].points) t.rows.push_back({r, p.n, p.boundary, p.A, p.X, p.M, p.E, p.X_error_bound});
  run.write_table("decompose", t);
}

template <int D>
void cmd_estimate_nu(const Options& o, Run& run) {
  auto cfg = make_config(o);
  auto g = obtain_green<D>(o, run);
  auto e = estimate_nu<D>(cfg, g);
  Table t{{"estimator", "value", "se", "ci_lo", "ci_hi", "bias_bound", "time", "replicas"}, {}};
  t.rows.push_back({"time_average", e.direct_mean, e.direct_se, e.direct_mean - 3 * e.direct_se, e.direct_mean + 3 * e.direct_se, 0.0,
                    e.n, e.direct_replicas});
  t.rows.push_back({"two_walk", e.event_mean, e.event_se, e.event_mean - 3 * e.event_se, e.event_mean + 3 * e.event_se, e.bias_bound,
                    e.horizon, e.event_replicas});
  run.write_table("estimate_nu", t);
  run.set_result({{"consistent", e.consistent()},
                  {"difference", e.direct_mean - e.event_mean},
                  {"allowed", 3 * e.combined_se() + e.bias_bound}});
  run.out() << "nu_" << D << ": time-average " << e.direct_mean << " +- " << 3 * e.direct_se << ", two-walk " << e.event_mean << " +- "
            << 3 * e.event_se << " (bias <= " << e.bias_bound << ")" << (e.consistent() ? ", consistent" : ", INCONSISTENT") << "\n";
}

template <int D>
void cmd_variance_scan(const Options& o, Run& run) {
  auto cfg = make_config(o);
  Functional f;
  try {
    f = Functional::parse(o.functional, D);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
  std::vector<VarianceRow> rows;
  if (f.needs_green()) {
    auto g = obtain_green<D>(o, run);
    MaskCover<D> cover(g);
    rows = variance_scan<D>(cfg, f, &cover);
  } else {
    rows = variance_scan<D>(cfg, f);
  }
  Table t{{"functional", "n", "mean", "var", "se", "ci_lo", "ci_hi", "var_over_n", "var_over_nlogn"}, {}};
  for (const auto& r : rows)
    t.rows.push_back({f.name(), r.n, r.mean, r.var.variance, r.var.se, r.var.lo, r.var.hi, r.var_over_n, r.var_over_nlogn});
  run.write_table("variance_scan", t);
}

template <int D>
void cmd_clt_test(const Options& o, Run& run) {
  auto cfg = make_config(o);
  CltReport rep;
  try {
    rep = clt_test<D>(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  // Desk-chosen KS thresholds; d = 3 is exploratory.
  json threshold = D >= 5 ? json(0.05) : D == 4 ? json(0.07) : json(nullptr);
  Table t{{"n", "replicas", "mean", "sd", "ks", "skewness", "excess_kurtosis", "ks_threshold"}, {}};
  t.rows.push_back({rep.n, rep.replicas, rep.mean, rep.sd, rep.ks, rep.skewness, rep.excess_kurtosis, threshold});
  run.write_table("clt_test", t);
  bool pass = threshold.is_null() || rep.ks < threshold.get<double>();
  run.set_result({{"ks", rep.ks}, {"ks_threshold", threshold}, {"ks_below_threshold", pass}});
  run.out() << "KS=" << rep.ks << " skew=" << rep.skewness << " exkurt=" << rep.excess_kurtosis << "\n";
}

template <int D>
void cmd_dyadic(const Options& o, Run& run) {
  auto cfg = make_config(o);
  if (o.n_grid.empty() && o.checkpoints == 0) cfg.n_grid = {o.n};
  int L = o.levels >= 0 ? o.levels : dyadic_level_for(cfg.n_grid.front());
  if ((std::uint64_t{1} << L) > cfg.n_grid.front()) throw UsageError("2^levels exceeds the smallest n");
  auto rows = dyadic_experiment<D>(cfg, L);
  Table t{{"replica", "n", "L", "error", "bound"}, {}};
  for (const auto& r : rows) t.rows.push_back({r.replica, r.n, r.L, r.result.error, r.result.bound});
  run.write_table("dyadic", t);
}

template <int D>
void cmd_enumerate(const Options& o, Run& run) {
  Functional f;
  ExactDistribution dist;
  try {
    f = Functional::parse(o.functional, D);
    dist = enumerate_exact<D>(static_cast<int>(o.n), f);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  Table t{{"functional", "n", "value", "count", "denominator", "probability"}, {}};
  for (const auto& [v, c] : dist.counts) t.rows.push_back({f.name(), o.n, v, c, dist.denominator, dist.probability_string(v)});
  run.write_table("enumerate", t);
  auto [p, q] = dist.mean_fraction();
  std::string mean = std::to_string(p) + "/" + std::to_string(q);
  run.set_result({{"mean", mean}, {"denominator", dist.denominator}});
  run.out() << f.name() << " n=" << o.n << " d=" << D << "\n";
  for (const auto& [v, c] : dist.counts) run.out() << "  P(" << v << ") = " << dist.probability_string(v) << "\n";
  run.out() << "  mean = " << mean << "\n";
}

struct SelftestCheck {
  std::string name;
  double value;
  double limit;
  bool pass() const { return std::abs(value) <= limit; }
};

template <int D>
std::vector<SelftestCheck> green_selftest(const GreenTable<D>& g) {
  std::vector<SelftestCheck> out;
  double neighbor = 0.0;
  for (int i = 0; i < 2 * D; ++i) neighbor = std::max(neighbor, std::abs(g(direction<D>(i)) - (g.g00() - 1.0)));
  out.push_back({"neighbor_identity", neighbor, 2 * g.tol()});
  double harm = 0.0;
  const int r = std::min(g.radius() - 1, 12);
  Point<D> z{};
  auto rec = [&](auto&& self, int j) -> void {
    if (j == D) {
      double s = 0.0;
      for (int i = 0; i < 2 * D; ++i) s += g(z + direction<D>(i));
      s /= 2 * D;
      bool at0 = z == origin<D>();
      harm = std::max(harm, std::abs(s - (g(z) - (at0 ? 1.0 : 0.0))));
      return;
    }
    for (int v = 0; v <= r; ++v) {
      z[j] = v;
      self(self, j + 1);
    }
  };
  if (r >= 0) rec(rec, 0);
  out.push_back({"harmonicity", harm, 2 * g.tol()});
  auto [partial, tail] = green_origin_partial_sum(D, 2000);
  out.push_back({"g00_vs_return_sum", g.g00() - (partial + tail), 1e-4});
  return out;
}

template <int D>
void cmd_selftest(const Options& o, Run& run) {
  std::vector<fs::path> files;
  if (!o.radius_given && fs::is_directory(o.cache_dir)) {
    std::string prefix = "green_d" + std::to_string(D) + "_";
    for (const auto& e : fs::directory_iterator(o.cache_dir)) {
      auto name = e.path().filename().string();
      if (name.rfind(prefix, 0) == 0 && e.path().extension() == ".bin") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
  }
  std::vector<GreenTable<D>> tables;
  for (const auto& f : files) {
    std::ifstream in(f, std::ios::binary);
    tables.push_back(load_binary<D>(in));
  }
  if (tables.empty()) tables.push_back(load_or_build_green_table<D>(o.cache_dir, o.radius, o.tol));
  Table t{{"d", "radius", "tol", "check", "value", "limit", "pass"}, {}};
  bool all = true;
  json greens = json::array();
  for (const auto& g : tables) {
    greens.push_back(green_json(g));
    for (const auto& c : green_selftest(g)) {
      t.rows.push_back({D, g.radius(), g.tol(), c.name, c.value, c.limit, c.pass()});
      all = all && c.pass();
      run.out() << (c.pass() ? "PASS " : "FAIL ") << "R=" << g.radius() << " " << c.name << " |" << c.value << "| <= " << c.limit << "\n";
    }
  }
  run.set_green(greens);
  run.write_table("selftest", t);
  run.set_result({{"pass", all}});
  if (!all) throw NumericalFailure("selftest failed");
}

template <int D>
void dispatch(const Options& o, Run& run) {
  const std::string& c = o.command;
  if (c == "green-build") return cmd_green_build<D>(o, run);
  if (c == "simulate") return cmd_simulate<D>(o, run);
  if (c == "decompose") return cmd_decompose<D>(o, run);
  if (c == "estimate-nu") return cmd_estimate_nu<D>(o, run);
  if (c == "variance-scan") return cmd_variance_scan<D>(o, run);
  if (c == "clt-test") return cmd_clt_test<D>(o, run);
  if (c == "dyadic") return cmd_dyadic<D>(o, run);
  if (c == "enumerate") return cmd_enumerate<D>(o, run);
  if (c == "selftest") return cmd_selftest<D>(o, run);
  throw UsageError("unknown subcommand " + c);
}

inline int report(std::ostream& err, const std::string& category, const std::string& message, int code) {
  err << json{{"error", {{"category", category}, {"message", message}}}}.dump() << "\n";
  return code;
}

inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  Options o;
  CLI::App app{"Boundary of the range of transient random walk: simulation and verification workbench", "rwb"};
  app.set_config("--config", "", "flat key=value file mirroring the long flags; flags win");
  app.require_subcommand(1);
  app.fallthrough();
  app.add_option("--d", o.d, "lattice dimension (3, 4 or 5)");
  app.add_option("--n", o.n, "horizon");
  app.add_option("--n-grid", o.n_grid, "explicit increasing list of times")->delimiter(',');
  app.add_option("--replicas", o.replicas, "Monte Carlo replicas");
  app.add_option("--direct-replicas", o.direct_replicas, "replicas for the time-average nu estimator (0: --replicas)");
  app.add_option("--seed", o.seed, "master seed");
  auto* radius = app.add_option("--green-radius,--radius", o.radius, "green table radius (sup norm)");
  app.add_option("--tol", o.tol, "green quadrature tolerance");
  app.add_option("--horizon", o.horizon, "truncation horizon T");
  app.add_option("--checkpoints", o.checkpoints, "number of geometric checkpoints up to n (0: powers of two)");
  app.add_option("--workers", o.workers, "worker threads");
  app.add_option("--out-dir", o.out_dir, "output directory");
  app.add_option("--format", o.format, "table format")->check(CLI::IsMember({"csv", "json"}));
  app.add_option("--functional", o.functional, "functional name, optionally <name>:<mask bits>");
  app.add_option("--levels", o.levels, "dyadic depth L (default: 2^L ~ sqrt(n)/log(n)^2)");
  app.add_option("--cache-dir", o.cache_dir, "green table cache directory (empty disables)");
  const std::pair<const char*, const char*> subs[] = {
      {"green-build", "build or load a Green's function table"},
      {"simulate", "range, boundary and class counts on a time grid"},
      {"decompose", "boundary = A + M + E along sampled paths"},
      {"estimate-nu", "two estimators of the boundary growth constant"},
      {"variance-scan", "variance of a functional across the time grid"},
      {"clt-test", "normality of the standardized boundary size"},
      {"dyadic", "dyadic splitting error and its bound"},
      {"enumerate", "exact law of a functional over all paths of length n"},
      {"selftest", "check Green table identities"},
  };
  for (const auto& [n, desc] : subs) app.add_subcommand(n, desc);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    return report(err, "usage", e.what(), 2);
  }
  o.command = app.get_subcommands().front()->get_name();
  o.radius_given = radius->count() > 0;

  try {
    if (o.d < 3 || o.d > 5) throw UsageError("--d must be 3, 4 or 5");
    if (o.workers < 1) throw UsageError("--workers must be positive");
    if (!(o.tol > 0)) throw UsageError("--tol must be positive");
    if (o.radius < 1) throw UsageError("--green-radius must be positive");
    Run run(o, out);
    switch (o.d) {
      case 3:
        dispatch<3>(o, run);
        break;
      case 4:
        dispatch<4>(o, run);
        break;
      default:
        dispatch<5>(o, run);
        break;
    }
    run.finish();
    return 0;
  } catch (const UsageError& e) {
    return report(err, "usage", e.what(), 2);
  } catch (const GreenConvergenceError& e) {
    return report(err, "numerical", e.what(), 3);
  } catch (const GreenCoverageError& e) {
    return report(err, "numerical", e.what(), 3);
  } catch (const HittingSolveError& e) {
    return report(err, "numerical", e.what(), 3);
  } catch (const NumericalFailure& e) {
    return report(err, "numerical", e.what(), 3);
  } catch (const std::exception& e) {
    return report(err, "runtime", e.what(), 1);
  }
}

}  // namespace rwb::cli
