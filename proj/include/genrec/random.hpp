#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Core>

namespace genrec {

using Seed = std::uint64_t;
using Rng = std::mt19937_64;

// splitmix64 finalizer; used to derive independent child seeds from a parent
// seed plus a list of integer coordinates (cell, trial, restart, ...).
inline Seed mix_seed(Seed x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline Seed derive_seed(Seed parent, std::initializer_list<std::uint64_t> path) {
  Seed s = mix_seed(parent);
  for (std::uint64_t p : path) s = mix_seed(s ^ mix_seed(p + 0x632be59bd9b4e019ULL));
  return s;
}

template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> gaussian_vector(Eigen::Index len, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> v(len);
  for (Eigen::Index i = 0; i < len; ++i) v(i) = normal(rng);
  return v;
}

}  // namespace genrec
