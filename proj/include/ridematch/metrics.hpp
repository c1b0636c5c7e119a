#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ridematch/baselines.hpp"
#include "ridematch/scenario.hpp"

namespace ridematch {

/// Per-episode outcome. Averages are over served passengers and are absent
/// when nobody was served. Times in seconds.
struct EpisodeMetrics {
  std::optional<double> avg_pickup_time;
  std::optional<double> avg_matching_time;
  std::optional<double> avg_detour_delay;
  std::optional<double> avg_total_waiting_time;
  double total_pickup_time = 0.0;
  double total_matching_time = 0.0;
  double total_detour_delay = 0.0;
  double total_waiting_time = 0.0;
  int served_count = 0;
  int cancelled_count = 0;
  int unserved_count = 0;  // still waiting or never injected at the horizon
  double natural_return = 0.0;
  double shaped_return = 0.0;
  double action_rate = 0.0;          // fraction of ticks with a = 1
  std::vector<int> match_intervals;  // ticks between consecutive a = 1
};

/// Reduces the passenger records of a finished episode.
EpisodeMetrics summarize_episode(const MatchEnv& env, double natural_return, double shaped_return);

/// Plays one episode with `policy` and returns its metrics. `rng` feeds a
/// stochastic policy only.
EpisodeMetrics run_episode(const TimingPolicy& policy, const Scenario& scenario,
                           const EpisodeData& episode, Engine& rng, std::ostream* trace = nullptr);

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;  // standard error of the mean
  int n = 0;        // episodes contributing
  double ci_low() const { return mean - 1.96 * se; }
  double ci_high() const { return mean + 1.96 * se; }
};

/// Names, in report order, of the per-episode metrics aggregated by evaluate.
const std::vector<std::string>& metric_names();

struct AggregateReport {
  std::string label;
  std::string scenario;
  std::uint64_t seed = 0;
  int episodes = 0;
  std::map<std::string, MetricSummary> metrics;
  std::vector<int> match_intervals;  // pooled over episodes
  std::vector<double> per_episode_total_waiting;  // NaN where nobody was served

  const MetricSummary& at(const std::string& name) const { return metrics.at(name); }
};

/// Episode k uses generate_episode(scenario, derive_seed(seed, "eval-episode", k)),
/// so every policy evaluated with the same seed sees the same episodes.
std::uint64_t eval_episode_seed(std::uint64_t seed, int k);

/// Throws std::invalid_argument when n_episodes < 1. `jobs` > 1 runs episodes
/// on that many threads; the result does not depend on `jobs`.
AggregateReport evaluate(const TimingPolicy& policy, const Scenario& scenario, int n_episodes,
                         std::uint64_t seed, int jobs = 1);

AggregateReport aggregate(const std::string& label, const std::string& scenario,
                          std::uint64_t seed, const std::vector<EpisodeMetrics>& episodes);

struct Quartiles {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double iqr() const { return q3 - q1; }
};

/// Linear-interpolation quartiles; all zero for an empty sample.
Quartiles quartiles(std::vector<double> values);

/// Count of intervals per bin [k*width, (k+1)*width).
std::vector<int> histogram(const std::vector<int>& intervals, int width, int bins);

struct ComparisonRow {
  std::string label;
  std::string metric;
  MetricSummary value;
  double diff_vs_baseline = 0.0;
  bool best = false;  // lowest mean for the metric (highest for served_count)
};

struct Comparison {
  std::string baseline;
  int episodes = 0;
  std::vector<ComparisonRow> rows;  // strategy-major, metric_names() order
};

/// Throws std::invalid_argument unless the reports are non-empty and share
/// scenario, seed and episode count.
Comparison compare(const std::vector<AggregateReport>& reports, std::size_t baseline = 0);

/// One row per strategy; per metric: mean, se, 95% CI, n, difference from
/// the baseline and a 0/1 best marker.
void write_csv(const Comparison& c, std::ostream& out);
/// One JSON object per report.
std::string report_to_json(const AggregateReport& r);

}  // namespace ridematch
