#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dhlink/geo.hpp"
#include "dhlink/json.hpp"
#include "dhlink/store.hpp"

namespace dhlink {

struct ProximityParams {
  int64_t window_days = 7;
  double dist_meters = 50;
  int64_t slack_seconds = 1800;
};

struct ProximityAlert {
  std::string alert_id;
  std::string subject_token;
  std::string confirmed_token;
  std::string subject_cluster_id;
  std::string confirmed_cluster_id;
  double distance_meters = 0;
  int64_t overlap_seconds = 0;
  int64_t created_at = 0;
};

void to_json(Json& j, const ProximityAlert& a);
void from_json(const Json& j, ProximityAlert& a);

// Two clusters match when their centroids lie within dist_meters and their
// time spans, each widened by slack_seconds on both ends, intersect (closed
// intervals). On a match, distance and the widened overlap in seconds are
// reported through the optional out parameters.
bool proximity_match(const GpsCluster& a, const GpsCluster& b,
                     double dist_meters, int64_t slack_seconds,
                     double* distance_out, int64_t* overlap_out);

// Deterministic id for a (subject, confirmed) cluster pair.
std::string proximity_alert_id(const std::string& subject_cluster_id,
                               const std::string& confirmed_cluster_id);

// Retrospective sweep: matches every in-window cluster of the confirmed
// user against every in-window cluster of every other user. A cluster is in
// the window when t_end >= now - window_days. Fails with
// unknown-confirmed-token when the store holds no cluster for the token.
// Output is sorted by (subject_token, subject_cluster_id,
// confirmed_cluster_id); one alert per cluster pair.
std::vector<ProximityAlert> detect_proximity_backtrace(
    const std::string& confirmed_token,
    const std::vector<GpsCluster>& cluster_store, int64_t now,
    const ProximityParams& params);

// Forward check of one freshly built cluster against confirmed clusters.
// Clusters of the same user never alert. Output sorted by
// confirmed_cluster_id.
std::vector<ProximityAlert> detect_proximity_incremental(
    const GpsCluster& new_cluster,
    const std::vector<GpsCluster>& confirmed_clusters, double dist_meters,
    int64_t slack_seconds, int64_t now);

// Drops raw points with ts and clusters with t_end strictly before
// now - window_days from the store (keys raw/... and clusters/...).
// Returns the number of removed entries. Idempotent.
int64_t purge_expired(Store& store, int64_t now, int64_t window_days);

int64_t window_cutoff_ms(int64_t now, int64_t window_days);

// Geohash-bucketed cluster lookup. Candidates come from the cell
// neighborhood covering the query circle; exact distances decide.
class GeoClusterIndex {
 public:
  explicit GeoClusterIndex(int precision = 6);

  void add(const GpsCluster& cluster);
  void remove(const std::string& cluster_id);
  // Clusters whose centroid lies within meters of (lat, lon), sorted by
  // cluster_id.
  std::vector<GpsCluster> query_within(double lat, double lon,
                                       double meters) const;
  size_t size() const;

 private:
  int precision_;
  std::map<std::string, GpsCluster> by_id_;
  std::map<std::string, std::vector<std::string>> by_cell_;
};

}  // namespace dhlink
