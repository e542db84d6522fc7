#include "dhlink/traces.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

constexpr int64_t kMillisPerDay = 86400LL * 1000;
constexpr double kMetersPerDegreeLat = 111194.93;

struct Jitter {
  std::mt19937_64 rng;

  explicit Jitter(uint64_t seed) : rng(seed) {}

  // Uniform in [-1, 1), derived without std distributions so the stream
  // depends only on the seed.
  double unit() {
    return (static_cast<double>(rng() >> 11) / 9007199254740992.0) * 2 - 1;
  }
};

double lat_offset(double meters) { return meters / kMetersPerDegreeLat; }

double lon_offset(double meters, double lat) {
  return meters / (kMetersPerDegreeLat * std::cos(lat * M_PI / 180.0));
}

}  // namespace

std::map<std::string, std::vector<GpsPoint>> generate_traces(
    const TraceConfig& config) {
  if (config.user_tokens.empty()) {
    fail(ErrorCode::BadRequest, "no users to trace");
  }
  if (config.duration_days < 1 || config.step_ms < 1) {
    fail(ErrorCode::BadRequest, "bad trace duration or step");
  }

  const int n = static_cast<int>(config.user_tokens.size());
  const int64_t end_ms = config.start_ms + config.duration_days * kMillisPerDay;

  // Anchor grid. Spacing dwarfs both the separation floor and the orbit
  // radius, so unplanted users can never come close.
  const double separation = 10 * config.dist_meters;
  const double spacing_m =
      std::max(2500.0, 4 * separation + 4 * config.eps_meters);
  const int grid = static_cast<int>(std::ceil(std::sqrt(n)));
  const double orbit_m =
      std::min(config.eps_meters / 2, spacing_m / 10);

  std::map<std::string, std::pair<double, double>> anchors;
  for (int i = 0; i < n; ++i) {
    double lat = config.base_lat + lat_offset(spacing_m) * (i / grid);
    double lon =
        config.base_lon + lon_offset(spacing_m, config.base_lat) * (i % grid);
    anchors[config.user_tokens[i]] = {lat, lon};
  }

  // Plant feasibility.
  for (const auto& plant : config.plants) {
    if (!anchors.count(plant.user_a) || !anchors.count(plant.user_b)) {
      fail(ErrorCode::InfeasiblePlant, "plant names an unknown user");
    }
    if (plant.user_a == plant.user_b) {
      fail(ErrorCode::InfeasiblePlant, "plant needs two distinct users");
    }
    if (plant.start_ms < config.start_ms ||
        plant.start_ms + plant.duration_ms > end_ms) {
      fail(ErrorCode::InfeasiblePlant,
           "plant window falls outside the simulated range");
    }
    if (plant.duration_ms / config.step_ms <
        static_cast<int64_t>(config.min_pts)) {
      fail(ErrorCode::InfeasiblePlant,
           "plant window too short to form a cluster");
    }
    for (const auto& [token, anchor] : anchors) {
      if (token == plant.user_a || token == plant.user_b) continue;
      if (haversine_m(plant.lat, plant.lon, anchor.first, anchor.second) <=
          2 * separation) {
        fail(ErrorCode::InfeasiblePlant,
             "plant location sits on top of user " + token);
      }
    }
  }

  std::map<std::string, std::vector<GpsPoint>> traces;
  for (int i = 0; i < n; ++i) {
    const std::string& token = config.user_tokens[i];
    auto [alat, alon] = anchors[token];
    Jitter jitter(config.seed * 1000003 + static_cast<uint64_t>(i));

    std::vector<GpsPoint> points;
    for (int64_t t = config.start_ms; t < end_ms; t += config.step_ms) {
      const PlantSpec* active = nullptr;
      for (const auto& plant : config.plants) {
        if ((plant.user_a == token || plant.user_b == token) &&
            t >= plant.start_ms && t < plant.start_ms + plant.duration_ms) {
          active = &plant;
          break;
        }
      }
      GpsPoint p;
      p.user_token = token;
      p.ts = t;
      if (active) {
        // Within eps/4 of the meeting point, so any two planted points sit
        // within eps/2 of each other.
        double r = config.eps_meters / 4;
        p.lat = active->lat + lat_offset(r * jitter.unit());
        p.lon = active->lon + lon_offset(r * jitter.unit(), active->lat);
      } else {
        p.lat = alat + lat_offset(orbit_m * jitter.unit());
        p.lon = alon + lon_offset(orbit_m * jitter.unit(), alat);
      }
      points.push_back(p);
    }
    traces[token] = std::move(points);
  }
  return traces;
}

}  // namespace dhlink
