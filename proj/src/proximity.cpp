#include "dhlink/proximity.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "dhlink/crypto.hpp"
#include "dhlink/errors.hpp"

namespace dhlink {

namespace {

constexpr int64_t kMillisPerDay = 86400LL * 1000;
constexpr double kEarthRadiusM = 6371000.0;
constexpr double kPi = 3.14159265358979323846;

ProximityAlert build_alert(const GpsCluster& subject,
                           const GpsCluster& confirmed, double distance,
                           int64_t overlap, int64_t now) {
  ProximityAlert alert;
  alert.alert_id =
      proximity_alert_id(subject.cluster_id, confirmed.cluster_id);
  alert.subject_token = subject.user_token;
  alert.confirmed_token = confirmed.user_token;
  alert.subject_cluster_id = subject.cluster_id;
  alert.confirmed_cluster_id = confirmed.cluster_id;
  alert.distance_meters = distance;
  alert.overlap_seconds = overlap;
  alert.created_at = now;
  return alert;
}

void sort_alerts(std::vector<ProximityAlert>& alerts) {
  std::sort(alerts.begin(), alerts.end(),
            [](const ProximityAlert& a, const ProximityAlert& b) {
              return std::tie(a.subject_token, a.subject_cluster_id,
                              a.confirmed_cluster_id) <
                     std::tie(b.subject_token, b.subject_cluster_id,
                              b.confirmed_cluster_id);
            });
}

}  // namespace

void to_json(Json& j, const ProximityAlert& a) {
  j = Json{{"alertId", a.alert_id},
           {"subjectToken", a.subject_token},
           {"confirmedToken", a.confirmed_token},
           {"subjectClusterId", a.subject_cluster_id},
           {"confirmedClusterId", a.confirmed_cluster_id},
           {"distanceMeters", a.distance_meters},
           {"overlapSeconds", a.overlap_seconds},
           {"createdAt", a.created_at}};
}

void from_json(const Json& j, ProximityAlert& a) {
  j.at("alertId").get_to(a.alert_id);
  j.at("subjectToken").get_to(a.subject_token);
  j.at("confirmedToken").get_to(a.confirmed_token);
  j.at("subjectClusterId").get_to(a.subject_cluster_id);
  j.at("confirmedClusterId").get_to(a.confirmed_cluster_id);
  j.at("distanceMeters").get_to(a.distance_meters);
  j.at("overlapSeconds").get_to(a.overlap_seconds);
  j.at("createdAt").get_to(a.created_at);
}

bool proximity_match(const GpsCluster& a, const GpsCluster& b,
                     double dist_meters, int64_t slack_seconds,
                     double* distance_out, int64_t* overlap_out) {
  double distance = haversine_m(a.centroid_lat, a.centroid_lon,
                                b.centroid_lat, b.centroid_lon);
  if (distance > dist_meters) return false;
  int64_t slack_ms = slack_seconds * 1000;
  int64_t start = std::max(a.t_start - slack_ms, b.t_start - slack_ms);
  int64_t end = std::min(a.t_end + slack_ms, b.t_end + slack_ms);
  if (start > end) return false;
  if (distance_out) *distance_out = distance;
  if (overlap_out) *overlap_out = (end - start) / 1000;
  return true;
}

std::string proximity_alert_id(const std::string& subject_cluster_id,
                               const std::string& confirmed_cluster_id) {
  return "a-" +
         crypto::sha256_hex(subject_cluster_id + "|" + confirmed_cluster_id)
             .substr(0, 16);
}

int64_t window_cutoff_ms(int64_t now, int64_t window_days) {
  return now - window_days * kMillisPerDay;
}

std::vector<ProximityAlert> detect_proximity_backtrace(
    const std::string& confirmed_token,
    const std::vector<GpsCluster>& cluster_store, int64_t now,
    const ProximityParams& params) {
  int64_t cutoff = window_cutoff_ms(now, params.window_days);

  bool token_known = false;
  std::vector<const GpsCluster*> confirmed;
  GeoClusterIndex others;
  for (const auto& c : cluster_store) {
    if (c.user_token == confirmed_token) {
      token_known = true;
      if (c.t_end >= cutoff) confirmed.push_back(&c);
    } else if (c.t_end >= cutoff) {
      others.add(c);
    }
  }
  if (!token_known) {
    fail(ErrorCode::UnknownConfirmedToken,
         "no clusters stored for confirmed token " + confirmed_token);
  }

  std::vector<ProximityAlert> alerts;
  std::set<std::pair<std::string, std::string>> seen;
  for (const GpsCluster* c : confirmed) {
    for (const GpsCluster& s : others.query_within(
             c->centroid_lat, c->centroid_lon, params.dist_meters)) {
      double distance = 0;
      int64_t overlap = 0;
      if (!proximity_match(s, *c, params.dist_meters, params.slack_seconds,
                           &distance, &overlap)) {
        continue;
      }
      if (!seen.insert({s.cluster_id, c->cluster_id}).second) continue;
      alerts.push_back(build_alert(s, *c, distance, overlap, now));
    }
  }
  sort_alerts(alerts);
  return alerts;
}

std::vector<ProximityAlert> detect_proximity_incremental(
    const GpsCluster& new_cluster,
    const std::vector<GpsCluster>& confirmed_clusters, double dist_meters,
    int64_t slack_seconds, int64_t now) {
  std::vector<ProximityAlert> alerts;
  for (const auto& c : confirmed_clusters) {
    if (c.user_token == new_cluster.user_token) continue;
    double distance = 0;
    int64_t overlap = 0;
    if (!proximity_match(new_cluster, c, dist_meters, slack_seconds,
                         &distance, &overlap)) {
      continue;
    }
    alerts.push_back(build_alert(new_cluster, c, distance, overlap, now));
  }
  sort_alerts(alerts);
  return alerts;
}

int64_t purge_expired(Store& store, int64_t now, int64_t window_days) {
  int64_t cutoff = window_cutoff_ms(now, window_days);
  int64_t purged = 0;
  for (const auto& [key, value] : store.list("raw/")) {
    if (value.contains("ts") && value["ts"].get<int64_t>() < cutoff) {
      if (store.remove(key)) ++purged;
    }
  }
  for (const auto& [key, value] : store.list("clusters/")) {
    if (value.contains("tEnd") && value["tEnd"].get<int64_t>() < cutoff) {
      if (store.remove(key)) ++purged;
    }
  }
  return purged;
}

GeoClusterIndex::GeoClusterIndex(int precision) : precision_(precision) {}

void GeoClusterIndex::add(const GpsCluster& cluster) {
  remove(cluster.cluster_id);
  by_id_[cluster.cluster_id] = cluster;
  by_cell_[geohash(cluster.centroid_lat, cluster.centroid_lon, precision_)]
      .push_back(cluster.cluster_id);
}

void GeoClusterIndex::remove(const std::string& cluster_id) {
  auto it = by_id_.find(cluster_id);
  if (it == by_id_.end()) return;
  std::string cell = geohash(it->second.centroid_lat,
                             it->second.centroid_lon, precision_);
  auto cell_it = by_cell_.find(cell);
  if (cell_it != by_cell_.end()) {
    auto& ids = cell_it->second;
    ids.erase(std::remove(ids.begin(), ids.end(), cluster_id), ids.end());
    if (ids.empty()) by_cell_.erase(cell_it);
  }
  by_id_.erase(it);
}

size_t GeoClusterIndex::size() const { return by_id_.size(); }

std::vector<GpsCluster> GeoClusterIndex::query_within(double lat, double lon,
                                                      double meters) const {
  std::vector<GpsCluster> out;
  auto consider = [&](const GpsCluster& c) {
    if (haversine_m(lat, lon, c.centroid_lat, c.centroid_lon) <= meters) {
      out.push_back(c);
    }
  };

  // Bounding box of the query circle, slightly inflated. Cell enumeration
  // only prunes; the exact distance check above decides membership.
  double dlat_deg = meters / kEarthRadiusM * 180.0 / kPi * 1.001;
  double cos_lat = std::cos(lat * kPi / 180.0);
  bool full_scan = false;
  double dlon_deg = 0;
  double sin_ratio = std::sin(std::min(meters / kEarthRadiusM, kPi / 2));
  if (std::abs(lat) + dlat_deg >= 89.9 || cos_lat <= 0.02 ||
      sin_ratio / cos_lat >= 1) {
    full_scan = true;
  } else {
    dlon_deg = std::asin(sin_ratio / cos_lat) * 180.0 / kPi * 1.001;
  }

  int lat_bits = 5 * precision_ / 2;
  int lon_bits = 5 * precision_ - lat_bits;
  double cell_h = 180.0 / static_cast<double>(1LL << lat_bits);
  double cell_w = 360.0 / static_cast<double>(1LL << lon_bits);

  double lat_lo = lat - dlat_deg, lat_hi = lat + dlat_deg;
  double lon_lo = lon - dlon_deg, lon_hi = lon + dlon_deg;
  if (!full_scan && (lon_lo < -180 || lon_hi > 180)) full_scan = true;

  if (!full_scan) {
    int64_t li_lo = static_cast<int64_t>(std::floor((lat_lo + 90) / cell_h));
    int64_t li_hi = static_cast<int64_t>(std::floor((lat_hi + 90) / cell_h));
    int64_t lo_lo = static_cast<int64_t>(std::floor((lon_lo + 180) / cell_w));
    int64_t lo_hi = static_cast<int64_t>(std::floor((lon_hi + 180) / cell_w));
    if ((li_hi - li_lo + 1) * (lo_hi - lo_lo + 1) > 4096) {
      full_scan = true;
    } else {
      std::set<std::string> cells;
      for (int64_t li = li_lo; li <= li_hi; ++li) {
        double cell_lat = (static_cast<double>(li) + 0.5) * cell_h - 90;
        if (cell_lat <= -90 || cell_lat >= 90) continue;
        for (int64_t lo = lo_lo; lo <= lo_hi; ++lo) {
          double cell_lon = (static_cast<double>(lo) + 0.5) * cell_w - 180;
          if (cell_lon <= -180 || cell_lon >= 180) continue;
          cells.insert(geohash(cell_lat, cell_lon, precision_));
        }
      }
      for (const auto& cell : cells) {
        auto it = by_cell_.find(cell);
        if (it == by_cell_.end()) continue;
        for (const auto& id : it->second) consider(by_id_.at(id));
      }
    }
  }

  if (full_scan) {
    for (const auto& [id, cluster] : by_id_) consider(cluster);
  }

  std::sort(out.begin(), out.end(),
            [](const GpsCluster& a, const GpsCluster& b) {
              return a.cluster_id < b.cluster_id;
            });
  return out;
}

}  // namespace dhlink
