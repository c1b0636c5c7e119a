#include "ridematch/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iomanip>
#include <limits>
#include <stdexcept>
#include <thread>

#include "json.hpp"

namespace ridematch {

EpisodeMetrics summarize_episode(const MatchEnv& env, double natural_return, double shaped_return) {
  EpisodeMetrics m;
  for (const auto& r : env.passengers()) {
    if (r.served()) {
      ++m.served_count;
      m.total_pickup_time += r.pickup_seconds;
      m.total_matching_time += r.matching_seconds;
      m.total_detour_delay += r.detour_seconds;
      m.total_waiting_time += r.matching_seconds + r.pickup_seconds + r.detour_seconds;
    } else if (r.cancelled()) {
      ++m.cancelled_count;
    } else {
      ++m.unserved_count;
    }
  }
  if (m.served_count > 0) {
    const double n = m.served_count;
    m.avg_pickup_time = m.total_pickup_time / n;
    m.avg_matching_time = m.total_matching_time / n;
    m.avg_detour_delay = m.total_detour_delay / n;
    m.avg_total_waiting_time = m.total_waiting_time / n;
  }
  const auto& ticks = env.match_ticks();
  for (std::size_t k = 1; k < ticks.size(); ++k) m.match_intervals.push_back(ticks[k] - ticks[k - 1]);
  m.action_rate = env.sim().horizon > 0 ? static_cast<double>(ticks.size()) / env.sim().horizon : 0.0;
  m.natural_return = natural_return;
  m.shaped_return = shaped_return;
  return m;
}

EpisodeMetrics run_episode(const TimingPolicy& policy, const Scenario& scenario,
                           const EpisodeData& episode, Engine& rng, std::ostream* trace) {
  EnvOptions opts;
  opts.shaping = false;
  opts.trace = trace;
  MatchEnv env(scenario, opts);
  env.reset(episode);
  double natural = 0.0;
  while (!env.done()) {
    const int a = policy.decide(DecisionContext::from(env), rng);
    natural += env.step(a).reward;
  }
  return summarize_episode(env, natural, natural);
}

const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{
      "avg_pickup_time",   "avg_matching_time",  "avg_detour_delay", "avg_total_waiting_time",
      "total_pickup_time", "total_matching_time", "total_detour_delay", "total_waiting_time",
      "served_count",      "cancelled_count",    "unserved_count",   "natural_return",
      "action_rate"};
  return names;
}

std::uint64_t eval_episode_seed(std::uint64_t seed, int k) {
  return derive_seed(seed, "eval-episode", static_cast<std::uint64_t>(k));
}

namespace {

MetricSummary summarize(const std::vector<double>& xs) {
  MetricSummary s;
  s.n = static_cast<int>(xs.size());
  if (xs.empty()) return s;
  double sum = 0.0;
  for (double x : xs) sum += x;
  s.mean = sum / s.n;
  if (s.n > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (s.n - 1) / s.n);
  }
  return s;
}

}  // namespace

AggregateReport aggregate(const std::string& label, const std::string& scenario,
                          std::uint64_t seed, const std::vector<EpisodeMetrics>& episodes) {
  AggregateReport r;
  r.label = label;
  r.scenario = scenario;
  r.seed = seed;
  r.episodes = static_cast<int>(episodes.size());
  std::map<std::string, std::vector<double>> cols;
  for (const auto& e : episodes) {
    auto opt = [&](const char* name, const std::optional<double>& v) {
      auto& c = cols[name];
      if (v) c.push_back(*v);
    };
    opt("avg_pickup_time", e.avg_pickup_time);
    opt("avg_matching_time", e.avg_matching_time);
    opt("avg_detour_delay", e.avg_detour_delay);
    opt("avg_total_waiting_time", e.avg_total_waiting_time);
    cols["total_pickup_time"].push_back(e.total_pickup_time);
    cols["total_matching_time"].push_back(e.total_matching_time);
    cols["total_detour_delay"].push_back(e.total_detour_delay);
    cols["total_waiting_time"].push_back(e.total_waiting_time);
    cols["served_count"].push_back(e.served_count);
    cols["cancelled_count"].push_back(e.cancelled_count);
    cols["unserved_count"].push_back(e.unserved_count);
    cols["natural_return"].push_back(e.natural_return);
    cols["action_rate"].push_back(e.action_rate);
    r.match_intervals.insert(r.match_intervals.end(), e.match_intervals.begin(), e.match_intervals.end());
    r.per_episode_total_waiting.push_back(e.avg_total_waiting_time.value_or(std::numeric_limits<double>::quiet_NaN()));
  }
  for (const auto& name : metric_names()) r.metrics[name] = summarize(cols[name]);
  return r;
}

AggregateReport evaluate(const TimingPolicy& policy, const Scenario& scenario, int n_episodes,
                         std::uint64_t seed, int jobs) {
  if (n_episodes < 1) throw std::invalid_argument("evaluate: n_episodes must be >= 1");
  std::vector<EpisodeMetrics> results(static_cast<std::size_t>(n_episodes));
  auto run = [&](int k) {
    const EpisodeData ep = generate_episode(scenario, eval_episode_seed(seed, k));
    Engine rng = make_stream(seed, "eval-policy", static_cast<std::uint64_t>(k));
    results[static_cast<std::size_t>(k)] = run_episode(policy, scenario, ep, rng);
  };
  const int workers = std::clamp(jobs, 1, n_episodes);
  if (workers == 1) {
    for (int k = 0; k < n_episodes; ++k) run(k);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int k = next++; k < n_episodes; k = next++) run(k);
      });
    }
    for (auto& t : pool) t.join();
  }
  return aggregate(policy.label(), scenario.name, seed, results);
}

Quartiles quartiles(std::vector<double> v) {
  Quartiles q;
  if (v.empty()) return q;
  std::sort(v.begin(), v.end());
  auto at = [&](double f) {
    const double pos = f * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
  };
  q.q1 = at(0.25);
  q.median = at(0.5);
  q.q3 = at(0.75);
  return q;
}

std::vector<int> histogram(const std::vector<int>& intervals, int width, int bins) {
  if (width < 1 || bins < 1) throw std::invalid_argument("histogram: width and bins must be >= 1");
  std::vector<int> h(static_cast<std::size_t>(bins), 0);
  for (int x : intervals) {
    const int b = std::min(bins - 1, std::max(0, x / width));
    ++h[static_cast<std::size_t>(b)];
  }
  return h;
}

Comparison compare(const std::vector<AggregateReport>& reports, std::size_t baseline) {
  if (reports.empty()) throw std::invalid_argument("compare: need at least one report");
  if (baseline >= reports.size()) throw std::invalid_argument("compare: baseline index out of range");
  for (const auto& r : reports) {
    if (r.scenario != reports[0].scenario || r.seed != reports[0].seed ||
        r.episodes != reports[0].episodes) {
      throw std::invalid_argument("compare: reports must share scenario, seed and episode count");
    }
  }
  Comparison c;
  c.baseline = reports[baseline].label;
  c.episodes = reports[0].episodes;
  std::map<std::string, double> best;
  for (const auto& name : metric_names()) {
    const bool higher_better = name == "served_count" || name == "natural_return";
    double b = higher_better ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
    for (const auto& r : reports) {
      const auto& m = r.at(name);
      if (m.n == 0) continue;
      b = higher_better ? std::max(b, m.mean) : std::min(b, m.mean);
    }
    best[name] = b;
  }
  for (const auto& r : reports) {
    for (const auto& name : metric_names()) {
      ComparisonRow row;
      row.label = r.label;
      row.metric = name;
      row.value = r.at(name);
      row.diff_vs_baseline = row.value.mean - reports[baseline].at(name).mean;
      row.best = row.value.n > 0 && row.value.mean == best[name] && name != "action_rate";
      c.rows.push_back(row);
    }
  }
  return c;
}

void write_csv(const Comparison& c, std::ostream& out) {
  std::vector<std::string> labels;
  for (const auto& r : c.rows) {
    if (labels.empty() || labels.back() != r.label) labels.push_back(r.label);
  }
  out << "strategy,episodes";
  for (const auto& m : metric_names()) {
    out << ',' << m << "_mean," << m << "_se," << m << "_ci95_low," << m << "_ci95_high," << m
        << "_n," << m << "_diff_vs_" << c.baseline << ',' << m << "_best";
  }
  out << '\n' << std::setprecision(10);
  std::size_t k = 0;
  for (const auto& label : labels) {
    bool first = true;
    for (; k < c.rows.size() && c.rows[k].label == label; ++k) {
      const auto& r = c.rows[k];
      if (first) out << label << ',' << c.episodes;
      first = false;
      out << ',' << r.value.mean << ',' << r.value.se << ',' << r.value.ci_low() << ','
          << r.value.ci_high() << ',' << r.value.n << ',' << r.diff_vs_baseline << ','
          << (r.best ? 1 : 0);
    }
    out << '\n';
  }
}

std::string report_to_json(const AggregateReport& r) {
  nlohmann::json j;
  j["strategy"] = r.label;
  j["scenario"] = r.scenario;
  j["seed"] = r.seed;
  j["episodes"] = r.episodes;
  for (const auto& [name, m] : r.metrics) {
    j["metrics"][name] = {{"mean", m.mean}, {"se", m.se}, {"ci95", {m.ci_low(), m.ci_high()}}, {"n", m.n}};
  }
  std::vector<double> iv(r.match_intervals.begin(), r.match_intervals.end());
  const Quartiles q = quartiles(iv);
  j["match_intervals"] = {{"count", r.match_intervals.size()},
                          {"q1", q.q1},
                          {"median", q.median},
                          {"q3", q.q3},
                          {"iqr", q.iqr()},
                          {"histogram_10_ticks", histogram(r.match_intervals, 10, 12)}};
  return j.dump();
}

}  // namespace ridematch
