#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "ridematch/domain.hpp"

namespace ridematch {

/// Divisors applied to the raw observation features. The time feature is
/// always divided by the horizon.
struct ObservationScale {
  double since_match = 60.0;
  double pool = 50.0;
  double mean_wait = 300.0;
  double max_wait = 300.0;
  double drivers = 50.0;
};

struct Scenario {
  std::string name;
  std::vector<Zone> zones;
  std::vector<std::vector<double>> lambda;  // [zone][bucket], requests per tick
  std::vector<std::vector<double>> od;      // row-stochastic, [origin][destination]
  int fleet_size = 0;
  std::vector<double> spawn_weights;  // per zone
  SimParams sim;
  ObservationScale obs_scale;

  /// Arrival rate of `zone` at tick `t` (piecewise constant over equal buckets).
  double rate(std::size_t zone, int t) const;
};

/// Malformed file: bad syntax, missing field, or wrong type.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& source, int line, const std::string& field,
              const std::string& what);
  int line() const { return line_; }
  const std::string& field() const { return field_; }

 private:
  int line_;
  std::string field_;
};

/// Well-formed file whose contents break a scenario invariant.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Throws ValidationError naming the first broken invariant.
void validate(const Scenario& s);

Scenario parse_scenario(const std::string& text, const std::string& source = "<string>");
Scenario load_scenario(const std::filesystem::path& path);
std::string scenario_to_json(const Scenario& s);

struct EpisodeData {
  std::vector<Order> arrivals;  // sorted by request_time, ids 0..n-1
  std::vector<DriverState> initial_drivers;
  std::uint64_t seed = 0;
};

/// Poisson arrivals per zone and tick; origins and destinations uniform in
/// zone disks, destination zone drawn from the origin's od row.
std::vector<Order> sample_arrivals(const Scenario& s, std::uint64_t seed);

/// fleet_size idle drivers placed in zones drawn by spawn weight.
std::vector<DriverState> sample_drivers(const Scenario& s, std::uint64_t seed);

EpisodeData generate_episode(const Scenario& s, std::uint64_t seed);

std::string episode_to_json(const EpisodeData& e);
EpisodeData parse_episode(const std::string& text, const std::string& source = "<string>");
void save_episode(const EpisodeData& e, const std::filesystem::path& path);
EpisodeData load_episode(const std::filesystem::path& path);

}  // namespace ridematch
