#include "genrec/sensing.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "genrec/text_format.hpp"

namespace genrec {

OutlierDraw make_outliers(Index m, const OutlierSpec& spec, Rng& rng) {
  if (m < 1) throw InvalidInput("make_outliers: m must be >= 1");
  if (spec.count < 0 || spec.count > m)
    throw InvalidInput("make_outliers: outlier count " + std::to_string(spec.count) +
                       " exceeds m = " + std::to_string(m));
  if (!(spec.lo <= spec.hi)) throw InvalidInput("make_outliers: need lo <= hi");

  // Partial Fisher-Yates: the first `count` slots form a uniform sample.
  std::vector<Index> pool(static_cast<std::size_t>(m));
  std::iota(pool.begin(), pool.end(), Index{0});
  for (Index i = 0; i < spec.count; ++i) {
    std::uniform_int_distribution<Index> pick(i, m - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
  }

  OutlierDraw out{Vector::Zero(m), {}};
  out.support.assign(pool.begin(), pool.begin() + spec.count);
  std::uniform_real_distribution<double> magnitude(spec.lo, spec.hi);
  std::bernoulli_distribution coin(0.5);
  // Values are assigned in draw order so each support entry is independent of sorting.
  for (Index idx : out.support) {
    double v = spec.lo == spec.hi ? spec.lo : magnitude(rng);
    if (spec.sign == SignMode::random_sign && coin(rng)) v = -v;
    out.e(idx) = v;
  }
  std::sort(out.support.begin(), out.support.end());
  return out;
}

OutlierDraw make_outliers(Index m, const OutlierSpec& spec, Seed seed) {
  Rng rng(seed);
  return make_outliers(m, spec, rng);
}

Observation observe(const GeneratorNet& net, const SensingModel& model, const Vector& z0, Seed seed) {
  const Index m = model.M.rows();
  if (m < 1) throw ShapeError("observe: measurement matrix has no rows");
  if (model.M.cols() != net.output_dim())
    throw ShapeError("observe: M has " + std::to_string(model.M.cols()) + " columns, generator outputs " +
                     std::to_string(net.output_dim()));
  if (z0.size() != net.input_dim()) throw ShapeError("observe: z0 length does not match generator input");
  if (!(model.noise_rms >= 0.0) || !std::isfinite(model.noise_rms))
    throw InvalidInput("observe: noise_rms must be finite and >= 0");

  Rng rng(seed);
  Observation obs;
  obs.z0 = z0;
  obs.x0 = forward(net, z0);
  OutlierDraw draw = make_outliers(m, model.outliers, rng);
  obs.e = std::move(draw.e);
  obs.support = std::move(draw.support);
  if (model.noise_rms > 0.0) {
    obs.eta = gaussian_vector(m, rng) * (model.noise_rms / std::sqrt(static_cast<double>(m)));
  } else {
    obs.eta = Vector::Zero(m);
  }
  obs.y = model.M * obs.x0 + obs.e + obs.eta;
  return obs;
}

Index outlier_budget(Index m_effective, Index k) {
  if (m_effective <= k)
    throw NoBudget("outlier_budget: need m > k (m = " + std::to_string(m_effective) +
                   ", k = " + std::to_string(k) + ")");
  return (m_effective - 1 - k) / 2;
}

namespace {

void write_block(std::ostream& os, const char* name, const Vector& v) {
  os << name << ' ' << v.size() << '\n';
  write_row(os, v.data(), v.size());
}

Vector read_block(TokenReader& in, const char* name, Index expected) {
  in.expect(name);
  const Index len = in.read_count(std::string(name) + " length");
  if (len != expected)
    throw FormatError(std::string(name) + ": length " + std::to_string(len) + ", expected " +
                      std::to_string(expected));
  Vector v(len);
  for (Index i = 0; i < len; ++i) v(i) = in.read_real(name);
  return v;
}

}  // namespace

void save_observation(std::ostream& os, const Matrix& M, const Observation& obs) {
  os << "GENREC-OBS v1 m=" << M.rows() << " n=" << M.cols() << " k=" << obs.z0.size() << '\n';
  os << "M " << M.rows() << ' ' << M.cols() << '\n';
  write_matrix_rows(os, M);
  write_block(os, "y", obs.y);
  write_block(os, "x0", obs.x0);
  write_block(os, "z0", obs.z0);
  write_block(os, "e", obs.e);
  write_block(os, "eta", obs.eta);
  os << "support " << obs.support.size() << '\n';
  for (std::size_t i = 0; i < obs.support.size(); ++i) os << (i ? " " : "") << obs.support[i];
  os << '\n';
}

void save_observation_file(const std::filesystem::path& path, const Matrix& M, const Observation& obs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  save_observation(os, M, obs);
  if (!os) throw IoError("write failed for '" + path.string() + "'");
}

ObservationRecord load_observation(std::istream& is) {
  TokenReader in(is);
  in.expect("GENREC-OBS");
  in.expect("v1");
  const auto to_count = [](const std::string& s, const char* key) {
    try {
      const long long v = std::stoll(s);
      if (v < 1) throw FormatError("");
      return static_cast<Index>(v);
    } catch (const std::exception&) {
      throw FormatError(std::string("header: bad ") + key + " '" + s + "'");
    }
  };
  const Index m = to_count(keyed_value(in.next("m="), "m"), "m");
  const Index n = to_count(keyed_value(in.next("n="), "n"), "n");
  const Index k = to_count(keyed_value(in.next("k="), "k"), "k");

  ObservationRecord rec;
  in.expect("M");
  if (in.read_count("M rows") != m || in.read_count("M cols") != n)
    throw FormatError("M: shape disagrees with header");
  rec.M.resize(m, n);
  for (Index r = 0; r < m; ++r)
    for (Index c = 0; c < n; ++c) rec.M(r, c) = in.read_real("M");
  rec.obs.y = read_block(in, "y", m);
  rec.obs.x0 = read_block(in, "x0", n);
  rec.obs.z0 = read_block(in, "z0", k);
  rec.obs.e = read_block(in, "e", m);
  rec.obs.eta = read_block(in, "eta", m);
  in.expect("support");
  const Index l = in.read_count("support size");
  if (l > m) throw FormatError("support: larger than m");
  for (Index i = 0; i < l; ++i) {
    const Index idx = in.read_count("support index");
    if (idx >= m) throw FormatError("support: index out of range");
    rec.obs.support.push_back(idx);
  }
  if (!in.at_end()) throw FormatError("trailing data after support block");
  return rec;
}

ObservationRecord load_observation_file(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  return load_observation(is);
}

}  // namespace genrec
