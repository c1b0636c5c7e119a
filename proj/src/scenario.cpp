#include "ridematch/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "json.hpp"
#include "ridematch/rng.hpp"

namespace ridematch {
namespace {

using nlohmann::json;

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<long>(offset), '\n'));
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(source, line_of_offset(text, e.byte), "", e.what());
  }
}

// Typed field access that reports the dotted path of whatever is missing.
class Reader {
 public:
  Reader(const json& j, std::string path, const std::string& source)
      : j_(j), path_(std::move(path)), source_(source) {}

  bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

  Reader at(const char* key) const {
    if (!j_.is_object() || !j_.contains(key)) fail(join(key), "missing field");
    return Reader(j_.at(key), join(key), source_);
  }

  Reader at(std::size_t k) const {
    return Reader(j_.at(k), path_ + "[" + std::to_string(k) + "]", source_);
  }

  std::size_t size() const {
    if (!j_.is_array()) fail(path_, "expected an array");
    return j_.size();
  }

  double number() const {
    if (!j_.is_number()) fail(path_, "expected a number");
    return j_.get<double>();
  }

  int integer() const {
    if (!j_.is_number_integer()) fail(path_, "expected an integer");
    return j_.get<int>();
  }

  std::uint64_t uint64() const {
    if (!j_.is_number_unsigned() && !(j_.is_number_integer() && j_.get<std::int64_t>() >= 0)) {
      fail(path_, "expected a non-negative integer");
    }
    return j_.get<std::uint64_t>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail(path_, "expected a boolean");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail(path_, "expected a string");
    return j_.get<std::string>();
  }

  std::vector<double> numbers() const {
    std::vector<double> out(size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = at(k).number();
    return out;
  }

  [[noreturn]] void fail(const std::string& field, const std::string& what) const {
    throw SchemaError(source_, 0, field, what);
  }

 private:
  std::string join(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
  const std::string& source_;
};

template <class T>
void read_opt(const Reader& r, const char* key, T& out) {
  if (!r.has(key)) return;
  if constexpr (std::is_same_v<T, int>) {
    out = r.at(key).integer();
  } else if constexpr (std::is_same_v<T, bool>) {
    out = r.at(key).boolean();
  } else {
    out = r.at(key).number();
  }
}

Point uniform_in_disk(const Zone& z, Engine& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double r = z.radius * std::sqrt(u(rng));
  const double th = 2.0 * std::numbers::pi * u(rng);
  return {z.centroid.x + r * std::cos(th), z.centroid.y + r * std::sin(th)};
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

SchemaError::SchemaError(const std::string& source, int line, const std::string& field,
                         const std::string& what)
    : std::runtime_error(source + (line > 0 ? ":" + std::to_string(line) : std::string()) +
                         (field.empty() ? std::string() : ": " + field) + ": " + what),
      line_(line),
      field_(field) {}

double Scenario::rate(std::size_t zone, int t) const {
  const auto& row = lambda[zone];
  if (row.empty()) return 0.0;
  const std::size_t buckets = row.size();
  const auto b = static_cast<std::size_t>(static_cast<long long>(t) * static_cast<long long>(buckets) /
                                          std::max(1, sim.horizon));
  return row[std::min(b, buckets - 1)];
}

void validate(const Scenario& s) {
  try {
    s.sim.validate();
  } catch (const std::invalid_argument& e) {
    throw ValidationError(e.what());
  }
  const std::size_t n = s.zones.size();
  for (std::size_t a = 0; a < n; ++a) {
    const Zone& z = s.zones[a];
    if (!(z.radius >= 0.0) || !std::isfinite(z.radius)) {
      throw ValidationError("zone " + std::to_string(z.id) + ": radius must be >= 0");
    }
    if (!std::isfinite(z.centroid.x) || !std::isfinite(z.centroid.y)) {
      throw ValidationError("zone " + std::to_string(z.id) + ": centroid must be finite");
    }
    for (std::size_t b = 0; b < a; ++b) {
      if (s.zones[b].id == z.id) throw ValidationError("zone id " + std::to_string(z.id) + " is not unique");
    }
  }
  if (s.lambda.size() != n) throw ValidationError("lambda: expected one row per zone");
  if (s.od.size() != n) throw ValidationError("od: expected one row per zone");
  if (s.spawn_weights.size() != n) throw ValidationError("spawn_weights: expected one entry per zone");
  for (std::size_t a = 0; a < n; ++a) {
    const std::string zone = "zone " + std::to_string(s.zones[a].id);
    if (s.lambda[a].empty()) throw ValidationError(zone + ": lambda needs at least one bucket");
    if (s.lambda[a].size() != s.lambda[0].size()) {
      throw ValidationError(zone + ": lambda bucket count differs from zone " +
                            std::to_string(s.zones[0].id));
    }
    for (double l : s.lambda[a]) {
      if (!(l >= 0.0) || !std::isfinite(l)) throw ValidationError(zone + ": lambda must be >= 0");
    }
    if (s.od[a].size() != n) throw ValidationError(zone + ": od row needs one entry per zone");
    double sum = 0.0;
    for (double p : s.od[a]) {
      if (!(p >= 0.0)) throw ValidationError(zone + ": od entries must be >= 0");
      sum += p;
    }
    // A zone without demand never draws from its row, so all zeros is allowed.
    const bool has_demand =
        std::any_of(s.lambda[a].begin(), s.lambda[a].end(), [](double l) { return l > 0.0; });
    if (std::abs(sum - 1.0) > 1e-9 && (has_demand || sum != 0.0)) {
      std::ostringstream msg;
      msg << zone << ": od row sums to " << sum << ", expected 1";
      throw ValidationError(msg.str());
    }
    if (has_demand && s.zones[a].radius == 0.0 && s.od[a][a] > 0.0) {
      throw ValidationError(zone + ": zero radius with intra-zone demand makes origin equal destination");
    }
    if (!(s.spawn_weights[a] >= 0.0)) throw ValidationError(zone + ": spawn weight must be >= 0");
  }
  if (s.fleet_size < 0) throw ValidationError("fleet_size must be >= 0");
  if (s.fleet_size > 0) {
    double w = 0.0;
    for (double x : s.spawn_weights) w += x;
    if (!(w > 0.0)) throw ValidationError("spawn_weights are all zero but fleet_size > 0");
  }
  const ObservationScale& o = s.obs_scale;
  for (double d : {o.since_match, o.pool, o.mean_wait, o.max_wait, o.drivers}) {
    if (!(d > 0.0)) throw ValidationError("obs_scale divisors must be > 0");
  }
}

Scenario parse_scenario(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  const Reader root(j, "", source);
  Scenario s;
  if (root.has("name")) s.name = root.at("name").string();

  const Reader zones = root.at("zones");
  for (std::size_t k = 0; k < zones.size(); ++k) {
    const Reader z = zones.at(k);
    s.zones.push_back({z.at("id").integer(), {z.at("cx").number(), z.at("cy").number()},
                       z.at("radius").number()});
  }
  const Reader lambda = root.at("lambda");
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    const Reader row = lambda.at(k);
    // A bare number is shorthand for a single bucket.
    if (j.at("lambda").at(k).is_number()) {
      s.lambda.push_back({row.number()});
    } else {
      s.lambda.push_back(row.numbers());
    }
  }
  const Reader od = root.at("od");
  for (std::size_t k = 0; k < od.size(); ++k) s.od.push_back(od.at(k).numbers());
  s.fleet_size = root.at("fleet_size").integer();
  s.spawn_weights = root.at("spawn_weights").numbers();

  if (root.has("sim")) {
    const Reader sim = root.at("sim");
    read_opt(sim, "speed", s.sim.speed);
    read_opt(sim, "cancel_after", s.sim.cancel_after);
    read_opt(sim, "tick", s.sim.tick);
    read_opt(sim, "horizon", s.sim.horizon);
    read_opt(sim, "phi", s.sim.phi);
    read_opt(sim, "tau", s.sim.tau);
    read_opt(sim, "ddr_threshold", s.sim.ddr_threshold);
    read_opt(sim, "allow_solo_in_pooling", s.sim.allow_solo_in_pooling);
    if (sim.has("mode")) {
      try {
        s.sim.mode = parse_service_mode(sim.at("mode").string());
      } catch (const std::invalid_argument& e) {
        sim.fail("sim.mode", e.what());
      }
    }
  }
  if (root.has("obs_scale")) {
    const Reader o = root.at("obs_scale");
    read_opt(o, "since_match", s.obs_scale.since_match);
    read_opt(o, "pool", s.obs_scale.pool);
    read_opt(o, "mean_wait", s.obs_scale.mean_wait);
    read_opt(o, "max_wait", s.obs_scale.max_wait);
    read_opt(o, "drivers", s.obs_scale.drivers);
  }
  validate(s);
  return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_file(path), path.string());
}

std::string scenario_to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["zones"] = json::array();
  for (const auto& z : s.zones) {
    j["zones"].push_back({{"id", z.id}, {"cx", z.centroid.x}, {"cy", z.centroid.y}, {"radius", z.radius}});
  }
  j["lambda"] = s.lambda;
  j["od"] = s.od;
  j["fleet_size"] = s.fleet_size;
  j["spawn_weights"] = s.spawn_weights;
  j["sim"] = {{"speed", s.sim.speed},
              {"cancel_after", s.sim.cancel_after},
              {"tick", s.sim.tick},
              {"horizon", s.sim.horizon},
              {"mode", std::string(to_string(s.sim.mode))},
              {"phi", s.sim.phi},
              {"tau", s.sim.tau},
              {"ddr_threshold", s.sim.ddr_threshold},
              {"allow_solo_in_pooling", s.sim.allow_solo_in_pooling}};
  j["obs_scale"] = {{"since_match", s.obs_scale.since_match},
                    {"pool", s.obs_scale.pool},
                    {"mean_wait", s.obs_scale.mean_wait},
                    {"max_wait", s.obs_scale.max_wait},
                    {"drivers", s.obs_scale.drivers}};
  return j.dump(2);
}

std::vector<Order> sample_arrivals(const Scenario& s, std::uint64_t seed) {
  struct Draft {
    int t;
    std::size_t zone;
    Point origin;
    Point destination;
  };
  std::vector<Draft> drafts;
  const int cancel = s.sim.cancel_ticks();
  for (std::size_t z = 0; z < s.zones.size(); ++z) {
    Engine arrivals = make_stream(seed, "arrivals", z);
    Engine destinations = make_stream(seed, "destinations", z);
    std::discrete_distribution<std::size_t> dest_zone(s.od[z].begin(), s.od[z].end());
    for (int t = 0; t < s.sim.horizon; ++t) {
      const double lam = s.rate(z, t);
      if (lam <= 0.0) continue;
      const int count = std::poisson_distribution<int>(lam)(arrivals);
      for (int c = 0; c < count; ++c) {
        Draft d{t, z, uniform_in_disk(s.zones[z], arrivals), {}};
        do {
          d.destination = uniform_in_disk(s.zones[dest_zone(destinations)], destinations);
        } while (d.destination == d.origin);
        drafts.push_back(d);
      }
    }
  }
  std::stable_sort(drafts.begin(), drafts.end(), [](const Draft& a, const Draft& b) {
    return a.t != b.t ? a.t < b.t : a.zone < b.zone;
  });
  std::vector<Order> out;
  out.reserve(drafts.size());
  for (const auto& d : drafts) {
    out.push_back({static_cast<int>(out.size()), d.origin, d.destination, d.t, d.t + cancel,
                   OrderStatus::waiting});
  }
  return out;
}

std::vector<DriverState> sample_drivers(const Scenario& s, std::uint64_t seed) {
  std::vector<DriverState> out;
  if (s.fleet_size <= 0) return out;
  Engine rng = make_stream(seed, "drivers");
  std::discrete_distribution<std::size_t> zone(s.spawn_weights.begin(), s.spawn_weights.end());
  out.reserve(static_cast<std::size_t>(s.fleet_size));
  for (int k = 0; k < s.fleet_size; ++k) {
    const std::size_t z = zone(rng);
    out.push_back({k, uniform_in_disk(s.zones[z], rng), DriverStatus::idle, 0.0});
  }
  return out;
}

EpisodeData generate_episode(const Scenario& s, std::uint64_t seed) {
  return {sample_arrivals(s, seed), sample_drivers(s, seed), seed};
}

std::string episode_to_json(const EpisodeData& e) {
  json j;
  j["seed"] = e.seed;
  j["arrivals"] = json::array();
  for (const auto& o : e.arrivals) {
    j["arrivals"].push_back({{"id", o.id},
                             {"ox", o.origin.x},
                             {"oy", o.origin.y},
                             {"dx", o.destination.x},
                             {"dy", o.destination.y},
                             {"request_time", o.request_time},
                             {"cancel_deadline", o.cancel_deadline}});
  }
  j["drivers"] = json::array();
  for (const auto& d : e.initial_drivers) {
    j["drivers"].push_back({{"id", d.id}, {"x", d.position.x}, {"y", d.position.y}});
  }
  return j.dump(1) + "\n";
}

EpisodeData parse_episode(const std::string& text, const std::string& source) {
  const json j = parse_json(text, source);
  const Reader root(j, "", source);
  EpisodeData e;
  e.seed = root.at("seed").uint64();
  const Reader arr = root.at("arrivals");
  for (std::size_t k = 0; k < arr.size(); ++k) {
    const Reader o = arr.at(k);
    Order ord{o.at("id").integer(),
              {o.at("ox").number(), o.at("oy").number()},
              {o.at("dx").number(), o.at("dy").number()},
              o.at("request_time").integer(),
              o.at("cancel_deadline").integer(),
              OrderStatus::waiting};
    if (!ord.valid()) throw ValidationError("arrivals[" + std::to_string(k) + "]: invalid order");
    if (!e.arrivals.empty() && ord.request_time < e.arrivals.back().request_time) {
      throw ValidationError("arrivals must be sorted by request_time");
    }
    e.arrivals.push_back(ord);
  }
  const Reader drv = root.at("drivers");
  for (std::size_t k = 0; k < drv.size(); ++k) {
    const Reader d = drv.at(k);
    e.initial_drivers.push_back(
        {d.at("id").integer(), {d.at("x").number(), d.at("y").number()}, DriverStatus::idle, 0.0});
  }
  return e;
}

void save_episode(const EpisodeData& e, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << episode_to_json(e);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

EpisodeData load_episode(const std::filesystem::path& path) {
  return parse_episode(read_file(path), path.string());
}

}  // namespace ridematch
