#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "dhlink/geo.hpp"

namespace dhlink {

// A scripted co-location: both users sit at (lat, lon) from start_ms for
// duration_ms, tightly enough that clustering must merge their points.
struct PlantSpec {
  std::string user_a;
  std::string user_b;
  double lat = 0;
  double lon = 0;
  int64_t start_ms = 0;
  int64_t duration_ms = 0;
};

struct TraceConfig {
  uint64_t seed = 1;
  std::vector<std::string> user_tokens;
  int64_t start_ms = 0;
  int duration_days = 7;
  int64_t step_ms = 5 * 60 * 1000;
  double eps_meters = 100;    // clustering scale plants must satisfy
  int min_pts = 3;
  double dist_meters = 50;    // background users stay > 10x this apart
  double base_lat = 47.0;
  double base_lon = 8.0;
  std::vector<PlantSpec> plants;
};

// Deterministic per-user GPS walks. Each user orbits a private anchor;
// anchors sit on a grid spaced far beyond ten times dist_meters, and the
// orbit radius is small enough that only planted windows ever bring two
// users near each other. During a plant window both users' points fall
// within eps_meters / 2 of the plant location.
//
// Throws infeasible-plant when a plant cannot have its promised effect:
// unknown or identical users, a window outside the simulated range or too
// short to yield min_pts points, or a meeting point so close to a
// bystander's anchor that the separation guarantee would break.
std::map<std::string, std::vector<GpsPoint>> generate_traces(
    const TraceConfig& config);

}  // namespace dhlink
