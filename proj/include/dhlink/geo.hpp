#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dhlink/json.hpp"

namespace dhlink {

struct GpsPoint {
  std::string user_token;
  double lat = 0;
  double lon = 0;
  int64_t ts = 0;  // epoch millis
};

struct GpsCluster {
  std::string cluster_id;
  std::string user_token;
  double centroid_lat = 0;
  double centroid_lon = 0;
  int64_t t_start = 0;
  int64_t t_end = 0;
  int64_t point_count = 0;
};

void to_json(Json& j, const GpsPoint& p);
void from_json(const Json& j, GpsPoint& p);
void to_json(Json& j, const GpsCluster& c);
void from_json(const Json& j, GpsCluster& c);

// Great-circle distance in meters on a sphere of radius 6,371,000 m.
double haversine_m(double lat1, double lon1, double lat2, double lon2);

// Standard base32 geohash of a coordinate, `precision` characters long.
std::string geohash(double lat, double lon, int precision);

// Density clustering over one user's GPS points.
//
// A point is a core point when at least min_pts points (itself included)
// lie within eps_meters of it. Clusters are the connected components of
// core points, plus border points; a border point joins the cluster of the
// lowest-index core point within reach. Points reaching no core point are
// noise and appear in no cluster.
//
// Cluster ids are id_prefix + "-" + ordinal, assigned after sorting by
// (t_start, lowest member index), so equal inputs give identical output.
// All points must carry the same user_token.
std::vector<GpsCluster> gps_cluster(const std::vector<GpsPoint>& points,
                                    double eps_meters, int min_pts,
                                    const std::string& id_prefix);

}  // namespace dhlink
