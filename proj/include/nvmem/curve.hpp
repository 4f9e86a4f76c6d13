#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace nvmem {

// Generic (x, y, 1-sigma) sample used by the fitting routines.
struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  double sigma = 0.0;
};

struct CurvePoint {
  long n = 0;             // attempts
  double coherence = 0.0; // sqrt(<sx>^2 + <sy>^2), or <sz> survival for eigenstate runs
  double std_err = 0.0;
};

struct CoherenceCurve {
  std::vector<CurvePoint> points;
  std::string digest;        // RunSpec digest
  std::uint64_t seed = 0;

  std::vector<DataPoint> data() const;
};

}  // namespace nvmem
