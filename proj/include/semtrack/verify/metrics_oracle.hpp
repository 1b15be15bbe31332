#pragma once

#include <array>

#include "semtrack/metrics.hpp"

namespace semtrack::verify {

// Direct evaluations of the metric definitions by enumeration. Scores are on
// the 0..1 scale. Intended for tiny inputs only.
struct OracleHota {
  double hota = 0.0;
  double deta = 0.0;
  double assa = 0.0;
  std::array<double, kAlphaCount> hota_alpha{};
};

struct OracleClear {
  double mota = 0.0;
  long tp = 0;
  long fp = 0;
  long fn = 0;
  long idsw = 0;
};

struct OracleIdentity {
  double idf1 = 0.0;
  double idtp = 0.0;
};

OracleHota oracle_hota(const TrackSet& gt, const TrackSet& pred);
OracleClear oracle_clear(const TrackSet& gt, const TrackSet& pred, double threshold = 0.5);
OracleIdentity oracle_identity(const TrackSet& gt, const TrackSet& pred, double threshold = 0.5);

}  // namespace semtrack::verify
