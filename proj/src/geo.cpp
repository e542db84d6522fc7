#include "dhlink/geo.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <tuple>

#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;

double radians(double deg) { return deg * kPi / 180.0; }

struct Vec3 {
  double x, y, z;
};

Vec3 to_unit(double lat, double lon) {
  double phi = radians(lat);
  double lambda = radians(lon);
  return {std::cos(phi) * std::cos(lambda), std::cos(phi) * std::sin(lambda),
          std::sin(phi)};
}

// Union-find with path compression.
struct DisjointSet {
  std::vector<int> parent;
  explicit DisjointSet(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int a) {
    while (parent[a] != a) {
      parent[a] = parent[parent[a]];
      a = parent[a];
    }
    return a;
  }
  void unite(int a, int b) { parent[find(a)] = find(b); }
};

}  // namespace

void to_json(Json& j, const GpsPoint& p) {
  j = Json{{"userToken", p.user_token},
           {"lat", p.lat},
           {"lon", p.lon},
           {"ts", p.ts}};
}

void from_json(const Json& j, GpsPoint& p) {
  j.at("userToken").get_to(p.user_token);
  j.at("lat").get_to(p.lat);
  j.at("lon").get_to(p.lon);
  j.at("ts").get_to(p.ts);
}

void to_json(Json& j, const GpsCluster& c) {
  j = Json{{"clusterId", c.cluster_id},   {"userToken", c.user_token},
           {"centroidLat", c.centroid_lat}, {"centroidLon", c.centroid_lon},
           {"tStart", c.t_start},         {"tEnd", c.t_end},
           {"pointCount", c.point_count}};
}

void from_json(const Json& j, GpsCluster& c) {
  j.at("clusterId").get_to(c.cluster_id);
  j.at("userToken").get_to(c.user_token);
  j.at("centroidLat").get_to(c.centroid_lat);
  j.at("centroidLon").get_to(c.centroid_lon);
  j.at("tStart").get_to(c.t_start);
  j.at("tEnd").get_to(c.t_end);
  j.at("pointCount").get_to(c.point_count);
}

double haversine_m(double lat1, double lon1, double lat2, double lon2) {
  double phi1 = radians(lat1);
  double phi2 = radians(lat2);
  double dphi = radians(lat2 - lat1);
  double dlambda = radians(lon2 - lon1);
  double sin_phi = std::sin(dphi / 2);
  double sin_lambda = std::sin(dlambda / 2);
  double a = sin_phi * sin_phi +
             std::cos(phi1) * std::cos(phi2) * sin_lambda * sin_lambda;
  a = std::clamp(a, 0.0, 1.0);
  return 2 * kEarthRadiusM * std::atan2(std::sqrt(a), std::sqrt(1 - a));
}

std::string geohash(double lat, double lon, int precision) {
  static const char* kBase32 = "0123456789bcdefghjkmnpqrstuvwxyz";
  if (precision < 1 || precision > 18) {
    fail(ErrorCode::BadRequest, "geohash precision out of range");
  }
  double lat_lo = -90, lat_hi = 90, lon_lo = -180, lon_hi = 180;
  std::string out;
  int bit = 0;
  int current = 0;
  bool even = true;  // even bits refine longitude
  while (static_cast<int>(out.size()) < precision) {
    if (even) {
      double mid = (lon_lo + lon_hi) / 2;
      if (lon >= mid) {
        current = (current << 1) | 1;
        lon_lo = mid;
      } else {
        current <<= 1;
        lon_hi = mid;
      }
    } else {
      double mid = (lat_lo + lat_hi) / 2;
      if (lat >= mid) {
        current = (current << 1) | 1;
        lat_lo = mid;
      } else {
        current <<= 1;
        lat_hi = mid;
      }
    }
    even = !even;
    if (++bit == 5) {
      out.push_back(kBase32[current]);
      bit = 0;
      current = 0;
    }
  }
  return out;
}

std::vector<GpsCluster> gps_cluster(const std::vector<GpsPoint>& points,
                                    double eps_meters, int min_pts,
                                    const std::string& id_prefix) {
  if (!(eps_meters >= 0) || !std::isfinite(eps_meters)) {
    fail(ErrorCode::BadRequest, "epsMeters must be a non-negative number");
  }
  if (min_pts < 1) fail(ErrorCode::BadRequest, "minPts must be at least 1");
  if (points.empty()) return {};
  const std::string& token = points[0].user_token;
  for (const auto& p : points) {
    if (p.user_token != token) {
      fail(ErrorCode::MixedUserInput,
           "gps_cluster input spans more than one user");
    }
    if (!std::isfinite(p.lat) || !std::isfinite(p.lon)) {
      fail(ErrorCode::BadRequest, "non-finite coordinate");
    }
  }

  const int n = static_cast<int>(points.size());

  // Bucket points on the unit sphere. Any pair within eps_meters of great-
  // circle distance sits within one chord length in space, so scanning the
  // 3x3x3 cell neighborhood yields a candidate superset; exact distances
  // then decide. The slight inflation keeps boundary pairs inside the scan.
  double half_angle = std::min(eps_meters / (2 * kEarthRadiusM), kPi / 2);
  double cell = std::max(2 * std::sin(half_angle), 1e-12) * (1 + 1e-9);
  std::vector<Vec3> vecs(n);
  std::map<std::tuple<int64_t, int64_t, int64_t>, std::vector<int>> grid;
  for (int i = 0; i < n; ++i) {
    vecs[i] = to_unit(points[i].lat, points[i].lon);
    auto key = std::make_tuple(static_cast<int64_t>(std::floor(vecs[i].x / cell)),
                               static_cast<int64_t>(std::floor(vecs[i].y / cell)),
                               static_cast<int64_t>(std::floor(vecs[i].z / cell)));
    grid[key].push_back(i);
  }

  auto neighbors_of = [&](int i) {
    std::vector<int> out;
    int64_t cx = static_cast<int64_t>(std::floor(vecs[i].x / cell));
    int64_t cy = static_cast<int64_t>(std::floor(vecs[i].y / cell));
    int64_t cz = static_cast<int64_t>(std::floor(vecs[i].z / cell));
    for (int64_t dx = -1; dx <= 1; ++dx) {
      for (int64_t dy = -1; dy <= 1; ++dy) {
        for (int64_t dz = -1; dz <= 1; ++dz) {
          auto it = grid.find(std::make_tuple(cx + dx, cy + dy, cz + dz));
          if (it == grid.end()) continue;
          for (int j : it->second) {
            if (haversine_m(points[i].lat, points[i].lon, points[j].lat,
                            points[j].lon) <= eps_meters) {
              out.push_back(j);
            }
          }
        }
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  };

  std::vector<std::vector<int>> neighbors(n);
  std::vector<bool> core(n, false);
  for (int i = 0; i < n; ++i) {
    neighbors[i] = neighbors_of(i);
    core[i] = static_cast<int>(neighbors[i].size()) >= min_pts;
  }

  DisjointSet ds(n);
  for (int i = 0; i < n; ++i) {
    if (!core[i]) continue;
    for (int j : neighbors[i]) {
      if (core[j]) ds.unite(i, j);
    }
  }

  // member_of[i]: the core component point i belongs to, or -1 for noise.
  std::vector<int> member_of(n, -1);
  for (int i = 0; i < n; ++i) {
    if (core[i]) {
      member_of[i] = ds.find(i);
      continue;
    }
    for (int j : neighbors[i]) {  // ascending, so first core is lowest-index
      if (core[j]) {
        member_of[i] = ds.find(j);
        break;
      }
    }
  }

  std::map<int, std::vector<int>> components;
  for (int i = 0; i < n; ++i) {
    if (member_of[i] >= 0) components[member_of[i]].push_back(i);
  }

  struct Built {
    GpsCluster cluster;
    int first_index;
  };
  std::vector<Built> built;
  for (const auto& [root, members] : components) {
    GpsCluster c;
    c.user_token = token;
    c.point_count = static_cast<int64_t>(members.size());
    c.t_start = points[members[0]].ts;
    c.t_end = points[members[0]].ts;
    double lat_sum = 0, lon_sum = 0;
    for (int i : members) {
      lat_sum += points[i].lat;
      lon_sum += points[i].lon;
      c.t_start = std::min(c.t_start, points[i].ts);
      c.t_end = std::max(c.t_end, points[i].ts);
    }
    c.centroid_lat = lat_sum / static_cast<double>(members.size());
    c.centroid_lon = lon_sum / static_cast<double>(members.size());
    built.push_back({c, members[0]});
  }

  std::sort(built.begin(), built.end(), [](const Built& a, const Built& b) {
    if (a.cluster.t_start != b.cluster.t_start) {
      return a.cluster.t_start < b.cluster.t_start;
    }
    return a.first_index < b.first_index;
  });

  const std::string prefix = id_prefix.empty() ? "c" : id_prefix;
  std::vector<GpsCluster> out;
  out.reserve(built.size());
  for (size_t i = 0; i < built.size(); ++i) {
    built[i].cluster.cluster_id = prefix + "-" + std::to_string(i);
    out.push_back(built[i].cluster);
  }
  return out;
}

}  // namespace dhlink
