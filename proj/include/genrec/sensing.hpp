#pragma once

// Corrupted compressed measurements y = M x0 + e + eta with x0 = G(z0),
// e an l-sparse outlier vector and eta dense Gaussian noise.

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "genrec/generator.hpp"

namespace genrec {

enum class SignMode { positive, random_sign };

struct OutlierSpec {
  Index count = 0;
  double lo = 5000.0;
  double hi = 10000.0;
  SignMode sign = SignMode::positive;
};

struct SensingModel {
  Matrix M;               // m x n
  double noise_rms = 0.0; // sqrt(E ||eta||^2)
  OutlierSpec outliers;
};

struct OutlierDraw {
  Vector e;
  std::vector<Index> support;  // sorted, 0-based
};

struct Observation {
  Vector y;
  Vector x0;
  Vector z0;
  Vector e;
  Vector eta;
  std::vector<Index> support;  // sorted, 0-based
};

/// Support drawn uniformly without replacement; magnitudes uniform in [lo, hi].
OutlierDraw make_outliers(Index m, const OutlierSpec& spec, Rng& rng);
OutlierDraw make_outliers(Index m, const OutlierSpec& spec, Seed seed);

/// Outliers are drawn first, then noise with per-entry variance noise_rms^2 / m.
Observation observe(const GeneratorNet& net, const SensingModel& model, const Vector& z0, Seed seed);

/// Largest l with m_effective - (2l + 1) >= k, i.e. floor((m_effective - 1 - k) / 2).
Index outlier_budget(Index m_effective, Index k);

// Observation files: "GENREC-OBS v1 m=.. n=.. k=.." then named blocks
// (M, y, x0, z0, e, eta, support) in the GENREC numeric format.
struct ObservationRecord {
  Matrix M;
  Observation obs;
};

void save_observation(std::ostream& os, const Matrix& M, const Observation& obs);
void save_observation_file(const std::filesystem::path& path, const Matrix& M, const Observation& obs);
ObservationRecord load_observation(std::istream& is);
ObservationRecord load_observation_file(const std::filesystem::path& path);

}  // namespace genrec
