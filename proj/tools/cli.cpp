#include "cli.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "ridematch/metrics.hpp"
#include "ridematch/ppo.hpp"

#ifndef RIDEMATCH_VERSION
#define RIDEMATCH_VERSION "0.0.0"
#endif

namespace ridematch::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

/// Numeric failure surfaced after outputs are written.
struct NumericFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string scenario;
  std::string mode;
  std::optional<std::uint64_t> seed;
  std::string out;
  int jobs = 1;
  bool trace = false;
  std::string config;
};

struct Layout {
  fs::path root;
  fs::path logs() const { return root / "logs"; }
  fs::path checkpoints() const { return root / "checkpoints"; }
  fs::path reports() const { return root / "reports"; }
};

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::uint64_t resolve_seed(const Common& c, std::ostream& err) {
  if (c.seed) return *c.seed;
  std::random_device rd;
  const std::uint64_t s = ((static_cast<std::uint64_t>(rd()) << 32) | rd()) >> 1;
  err << "no --seed given; using " << s << " (recorded in manifest.json)\n";
  return s;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out.flush()) throw std::runtime_error("write failed: " + path.string());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

Layout prepare(const std::string& out_dir) {
  Layout l{out_dir};
  for (const auto& d : {l.root, l.logs(), l.checkpoints(), l.reports()}) {
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec || !fs::is_directory(d)) throw std::runtime_error("cannot create directory " + d.string());
  }
  return l;
}

Scenario load_with_mode(const Common& c) {
  Scenario s = load_scenario(c.scenario);
  if (!c.mode.empty()) {
    s.sim.mode = parse_service_mode(c.mode);
    validate(s);
  }
  return s;
}

/// The invocation with the resolved seed pinned, so it re-runs exactly.
ordered_json rerun_args(const std::vector<std::string>& args, std::uint64_t seed, bool seed_given) {
  ordered_json a = ordered_json::array();
  a.push_back("ridematch");
  for (const auto& s : args) a.push_back(s);
  if (!seed_given) {
    a.push_back("--seed");
    a.push_back(std::to_string(seed));
  }
  return a;
}

void write_manifest(const Layout& l, const std::string& sub, const std::vector<std::string>& args,
                    const Common& c, std::uint64_t seed, const Scenario* scenario,
                    ordered_json config) {
  ordered_json m;
  m["subcommand"] = sub;
  m["tool_version"] = RIDEMATCH_VERSION;
  m["timestamp"] = utc_timestamp();
  m["seed"] = seed;
  m["seed_source"] = c.seed ? "flag" : "random";
  m["scenario_path"] = c.scenario;
  if (scenario) {
    m["mode"] = std::string(to_string(scenario->sim.mode));
    m["scenario"] = ordered_json::parse(scenario_to_json(*scenario));
  }
  m["output_dir"] = l.root.string();
  m["config"] = std::move(config);
  m["rerun"] = rerun_args(args, seed, c.seed.has_value());
  write_text(l.root / "manifest.json", m.dump(2) + "\n");
}

std::string fmt_metric(const MetricSummary& m, bool best) {
  if (m.n == 0) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f+-%.2f%s", m.mean, 1.96 * m.se, best ? "*" : "");
  return buf;
}

/// Fixed-width table: one row per strategy, 95% half-widths, '*' marks the best.
std::string summary_table(const Comparison& c, const std::string& scenario, std::uint64_t seed) {
  static const std::vector<std::pair<std::string, std::string>> cols{
      {"avg_matching_time", "matching_s"}, {"avg_pickup_time", "pickup_s"},
      {"avg_detour_delay", "detour_s"},    {"avg_total_waiting_time", "total_wait_s"},
      {"served_count", "served"},          {"cancelled_count", "cancelled"},
      {"unserved_count", "unserved"},
      {"natural_return", "return"},        {"action_rate", "action_rate"}};
  std::ostringstream s;
  s << "scenario " << scenario << ", seed " << seed << ", " << c.episodes
    << " episodes per strategy; mean +- 95% half-width, * marks the best\n";
  int width = 18;
  for (const auto& r : c.rows) width = std::max(width, static_cast<int>(r.label.size()));
  auto cell = [&](const std::string& text, int w, bool left) {
    s << (left ? "" : " ") << std::setw(w) << (left ? std::left : std::right) << text;
  };
  cell("strategy", width, true);
  for (const auto& [_, head] : cols) cell(head, 18, false);
  std::string label;
  for (const auto& r : c.rows) {
    if (r.label == label) continue;
    label = r.label;
    s << '\n';
    cell(label, width, true);
    for (const auto& [metric, _] : cols) {
      for (const auto& q : c.rows) {
        if (q.label == label && q.metric == metric) cell(fmt_metric(q.value, q.best), 18, false);
      }
    }
  }
  s << "\n";
  return s.str();
}

void write_reports(const Layout& l, const std::string& stem, const std::vector<AggregateReport>& reports,
                   std::uint64_t seed, std::ostream& out) {
  const Comparison c = compare(reports);
  {
    auto f = open_out(l.reports() / (stem + ".csv"));
    write_csv(c, f);
  }
  std::string json = "[\n";
  for (std::size_t k = 0; k < reports.size(); ++k) {
    json += report_to_json(reports[k]) + (k + 1 < reports.size() ? ",\n" : "\n");
  }
  write_text(l.reports() / (stem + ".json"), json + "]\n");
  const std::string table = summary_table(c, reports[0].scenario, seed);
  write_text(l.reports() / (stem + "_summary.txt"), table);
  out << table;
}

// ---------------------------------------------------------------- gen

int cmd_gen(const std::vector<std::string>& args, const Common& c, int episodes, std::ostream& out,
            std::ostream& err) {
  const Scenario s = load_with_mode(c);
  const std::uint64_t seed = resolve_seed(c, err);
  const Layout l = prepare(c.out);
  fs::create_directories(l.root / "episodes");
  write_manifest(l, "gen", args, c, seed, &s, {{"episodes", episodes}});
  for (int k = 0; k < episodes; ++k) {
    char name[32];
    std::snprintf(name, sizeof name, "episode-%05d.json", k);
    const EpisodeData e = generate_episode(s, derive_seed(seed, "gen-episode", static_cast<std::uint64_t>(k)));
    save_episode(e, l.root / "episodes" / name);
  }
  out << "wrote " << episodes << " episode(s) to " << (l.root / "episodes").string() << "\n";
  return kOk;
}

// ---------------------------------------------------------------- train

PpoConfig read_ppo_config(const Common& c) {
  PpoConfig cfg;
  if (c.config.empty()) return cfg;
  std::ifstream in(c.config, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + c.config);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_ppo_config(text.str(), cfg);
}

double window_mean(const std::vector<IterationLog>& log, std::size_t from, std::size_t to) {
  double sum = 0.0;
  int n = 0;
  for (std::size_t i = from; i < to; ++i) {
    for (const auto& e : log[i].episodes) {
      sum += e.natural_return;
      ++n;
    }
  }
  return n > 0 ? sum / n : std::nan("");
}

int cmd_train(const std::vector<std::string>& args, const Common& c, std::optional<int> episodes,
              std::optional<int> iterations, std::ostream& out, std::ostream& err) {
  const Scenario s = load_with_mode(c);
  PpoConfig cfg = read_ppo_config(c);
  const std::uint64_t seed = resolve_seed(c, err);
  cfg.seed = seed;
  cfg.jobs = c.jobs;
  if (iterations) {
    cfg.iterations = *iterations;
    cfg.total_episodes = 0;
  }
  if (episodes) cfg.total_episodes = *episodes;
  cfg.validate();

  const Layout l = prepare(c.out);
  ordered_json config = ordered_json::parse(ppo_config_to_json(cfg));
  config["resolved_iterations"] = cfg.resolved_iterations(s.sim.horizon);
  write_manifest(l, "train", args, c, seed, &s, config);

  auto log = open_out(l.logs() / "train.jsonl");
  std::ofstream trace;
  TrainHooks hooks;
  hooks.log = &log;
  hooks.checkpoint_dir = l.checkpoints();
  if (c.trace) {
    trace = open_out(l.logs() / "trace.jsonl");
    hooks.trace = &trace;
  }
  const TrainResult r = train(s, cfg, hooks);

  const std::size_t n = r.log.size();
  const std::size_t w = std::max<std::size_t>(1, n / 10);
  ordered_json summary;
  summary["iterations_completed"] = n;
  summary["halted"] = r.halted;
  summary["message"] = r.message;
  if (n > 0) {
    summary["first_10pct_mean_return"] = window_mean(r.log, 0, std::min(w, n));
    summary["last_10pct_mean_return"] = window_mean(r.log, n - std::min(w, n), n);
    summary["last_action_rate"] = r.log.back().action_rate;
  }
  summary["checkpoint"] = "checkpoints/policy-final.ckpt";  // relative to the output directory
  write_text(l.reports() / "train_summary.json", summary.dump(2) + "\n");

  if (r.halted) {
    throw NumericFailure(r.message + "; last good parameters saved to " +
                         (l.checkpoints() / "policy-final.ckpt").string());
  }
  out << "trained " << n << " iteration(s); checkpoint " << (l.checkpoints() / "policy-final.ckpt").string()
      << "\n";
  return kOk;
}

// ---------------------------------------------------------------- eval / sweep

void trace_first_episode(const TimingPolicy& p, const Scenario& s, std::uint64_t seed, const Layout& l) {
  auto trace = open_out(l.logs() / "trace.jsonl");
  Engine rng = make_stream(seed, "eval-policy", 0);
  run_episode(p, s, generate_episode(s, eval_episode_seed(seed, 0)), rng, &trace);
}

int cmd_eval(const std::vector<std::string>& args, const Common& c, const std::vector<std::string>& policies,
             int episodes, bool stochastic, std::ostream& out, std::ostream& err) {
  const Scenario s = load_with_mode(c);
  std::vector<TimingPolicy> parsed;
  for (const auto& spec : policies) parsed.push_back(parse_policy(spec, stochastic));
  const std::uint64_t seed = resolve_seed(c, err);
  const Layout l = prepare(c.out);
  write_manifest(l, "eval", args, c, seed, &s,
                 {{"policies", policies}, {"episodes", episodes}, {"stochastic", stochastic}, {"jobs", c.jobs}});
  std::vector<AggregateReport> reports;
  for (const auto& p : parsed) reports.push_back(evaluate(p, s, episodes, seed, c.jobs));
  if (c.trace) trace_first_episode(parsed.front(), s, seed, l);
  write_reports(l, "eval", reports, seed, out);
  return kOk;
}

std::vector<int> default_intervals(ServiceMode m) {
  return m == ServiceMode::pooling ? std::vector<int>{1, 10, 20, 40, 80} : std::vector<int>{1, 5, 15, 30, 60};
}

int cmd_sweep(const std::vector<std::string>& args, const Common& c, std::vector<int> intervals,
              const std::vector<std::string>& policies, int episodes, bool stochastic, std::ostream& out,
              std::ostream& err) {
  const Scenario s = load_with_mode(c);
  if (intervals.empty()) intervals = default_intervals(s.sim.mode);
  std::vector<TimingPolicy> parsed;
  for (int k : intervals) {
    if (k < 1) throw std::invalid_argument("sweep intervals must be >= 1 tick");
    parsed.push_back(k == 1 ? TimingPolicy::first_dispatch() : TimingPolicy::fixed_interval(k));
  }
  for (const auto& spec : policies) parsed.push_back(parse_policy(spec, stochastic));
  const std::uint64_t seed = resolve_seed(c, err);
  const Layout l = prepare(c.out);
  write_manifest(l, "sweep", args, c, seed, &s,
                 {{"intervals", intervals},
                  {"policies", policies},
                  {"episodes", episodes},
                  {"stochastic", stochastic},
                  {"jobs", c.jobs}});
  std::vector<AggregateReport> reports;
  for (const auto& p : parsed) reports.push_back(evaluate(p, s, episodes, seed, c.jobs));
  write_reports(l, "sweep", reports, seed, out);
  return kOk;
}

void add_common(CLI::App* sub, Common& c, bool needs_mode = true) {
  sub->add_option("--scenario", c.scenario, "scenario JSON file")->required();
  if (needs_mode) sub->add_option("--mode", c.mode, "override the scenario's mode")->check(CLI::IsMember({"hailing", "pooling"}));
  sub->add_option("--seed", c.seed, "master seed; drawn at random and recorded when absent");
  sub->add_option("--out", c.out, "output directory")->required();
  sub->add_option("--jobs", c.jobs, "worker threads")->check(CLI::Range(1, 1024));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned match timing for ride-hailing and ride-pooling dispatch", "ridematch"};
  app.set_version_flag("--version", RIDEMATCH_VERSION);
  app.require_subcommand(1);

  Common c;
  int gen_episodes = 1;
  std::optional<int> train_episodes, train_iterations;
  std::vector<std::string> policies;
  int eval_episodes = 200;
  bool stochastic = false;
  std::vector<int> intervals;

  auto* gen = app.add_subcommand("gen", "write generated episodes");
  add_common(gen, c);
  gen->add_option("--episodes", gen_episodes, "number of episodes")->check(CLI::NonNegativeNumber);

  auto* tr = app.add_subcommand("train", "train a timing policy with PPO");
  add_common(tr, c);
  tr->add_option("--config", c.config, "JSON file of PPO overrides");
  tr->add_option("--episodes", train_episodes, "training length in episodes")->check(CLI::PositiveNumber);
  tr->add_option("--iterations", train_iterations, "training length in PPO iterations")->check(CLI::NonNegativeNumber);
  tr->add_flag("--trace", c.trace, "write a per-step trace of training env 0");

  auto* ev = app.add_subcommand("eval", "evaluate timing policies on paired episodes");
  add_common(ev, c);
  ev->add_option("--policy", policies, "first-dispatch, fixed:K or learned:PATH (repeatable)");
  ev->add_option("--episodes", eval_episodes, "episodes per policy")->check(CLI::PositiveNumber);
  ev->add_flag("--stochastic", stochastic, "sample learned actions instead of thresholding at 0.5");
  ev->add_flag("--trace", c.trace, "write a per-step trace of the first episode");

  auto* sw = app.add_subcommand("sweep", "compare first dispatch, fixed intervals and learned policies");
  add_common(sw, c);
  sw->add_option("--intervals", intervals, "intervals in ticks; 1 is first dispatch")->delimiter(',');
  sw->add_option("--policy", policies, "extra policies to include (repeatable)");
  sw->add_option("--episodes", eval_episodes, "episodes per policy")->check(CLI::PositiveNumber);
  sw->add_flag("--stochastic", stochastic, "sample learned actions");

  std::vector<std::string> argv_store{"ridematch"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*gen) return cmd_gen(args, c, gen_episodes, out, err);
    if (*tr) return cmd_train(args, c, train_episodes, train_iterations, out, err);
    if (policies.empty() && *ev) policies.push_back("first-dispatch");
    if (*ev) return cmd_eval(args, c, policies, eval_episodes, stochastic, out, err);
    if (*sw) return cmd_sweep(args, c, intervals, policies, eval_episodes, stochastic, out, err);
  } catch (const NumericFailure& e) {
    err << "error: " << e.what() << "\n";
    return kNumericError;
  } catch (const SchemaError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const CheckpointError& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  } catch (const std::runtime_error& e) {
    err << "error: " << e.what() << "\n";
    return kIoError;
  }
  return kConfigError;
}

}  // namespace ridematch::cli
