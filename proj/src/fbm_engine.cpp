#include "fhjm/fbm_engine.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <ostream>
#include <stdexcept>

#include <boost/math/quadrature/gauss.hpp>

#include "fhjm/numerics.hpp"

namespace fhjm {

TimeGrid::TimeGrid(double t, int n) : t_star(t), n_steps(n) {
  if (!(t > 0.0)) throw std::invalid_argument("TimeGrid: horizon must be positive");
  if (n < 1) throw std::invalid_argument("TimeGrid: need at least one step");
}

int TimeGrid::index_of(double t) const {
  const double x = t / dt();
  const double r = std::round(x);
  if (std::abs(x - r) > 1e-9 || r < 0 || r > n_steps)
    throw std::invalid_argument("time " + std::to_string(t) + " is not a node of the time grid");
  return static_cast<int>(r);
}

std::string to_string(FbmMethod m) {
  switch (m) {
    case FbmMethod::kCholesky:
      return "cholesky";
    case FbmMethod::kVolterra:
      return "volterra";
    case FbmMethod::kPolygonal:
      return "polygonal";
  }
  return "unknown";
}

FbmMethod fbm_method_from_string(const std::string& s) {
  if (s == "cholesky") return FbmMethod::kCholesky;
  if (s == "volterra") return FbmMethod::kVolterra;
  if (s == "polygonal") return FbmMethod::kPolygonal;
  throw std::invalid_argument("unknown fBm method '" + s + "'");
}

BrownianDriver BrownianDriver::generate(const TimeGrid& grid, int dims, int n_paths,
                                        std::uint64_t seed) {
  if (dims < 1 || n_paths < 1) throw std::invalid_argument("BrownianDriver: dims, paths >= 1");
  BrownianDriver d;
  d.grid = grid;
  d.dims = dims;
  d.n_paths = n_paths;
  d.seed = seed;
  const std::size_t per_path = static_cast<std::size_t>(dims) * grid.n_steps;
  d.increments.resize(per_path * n_paths);
  const double scale = std::sqrt(grid.dt());
  for (int p = 0; p < n_paths; ++p) {
    NormalStream rng(seed, static_cast<std::uint64_t>(p));
    auto out = std::span<double>(d.increments).subspan(per_path * p, per_path);
    rng.fill(out);
    for (double& v : out) v *= scale;
  }
  return d;
}

double fbm_covariance(double s, double t, HurstParam h) {
  if (s < 0.0 || t < 0.0) throw std::invalid_argument("fbm_covariance: times must be >= 0");
  const double p = 2.0 * h;
  return 0.5 * (std::pow(s, p) + std::pow(t, p) - std::pow(std::abs(t - s), p));
}

Eigen::MatrixXd fbm_gram(const TimeGrid& grid, HurstParam h) {
  const int n = grid.n_steps;
  Eigen::MatrixXd g(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b <= a; ++b) g(a, b) = g(b, a) = fbm_covariance(grid.at(a + 1), grid.at(b + 1), h);
  return g;
}

FbmSampler::FbmSampler(TimeGrid grid, FbmMethod method, Eigen::MatrixXd map, double jitter)
    : grid_(grid), method_(method), map_(std::move(map)), jitter_(jitter) {
  if (map_.rows() != grid_.n_steps || map_.cols() != grid_.n_steps)
    throw std::invalid_argument("FbmSampler: map must be n x n");
}

void FbmSampler::sample(std::uint64_t seed, std::uint64_t p, int dims,
                        std::span<double> out) const {
  // Same draw order as BrownianDriver::generate, so a sampler and a driver
  // built from one seed produce identical paths.
  std::vector<double> inc(static_cast<std::size_t>(dims) * grid_.n_steps);
  NormalStream rng(seed, p);
  rng.fill(inc);
  const double s = std::sqrt(grid_.dt());
  for (double& v : inc) v *= s;
  apply(inc, dims, out);
}

void FbmSampler::apply(std::span<const double> increments, int dims, std::span<double> out) const {
  const int n = grid_.n_steps;
  if (increments.size() != static_cast<std::size_t>(dims) * n ||
      out.size() != static_cast<std::size_t>(dims) * (n + 1))
    throw std::invalid_argument("FbmSampler::apply: size mismatch");
  const double inv = 1.0 / std::sqrt(grid_.dt());
  Eigen::VectorXd z(n);
  for (int j = 0; j < dims; ++j) {
    for (int i = 0; i < n; ++i) z[i] = increments[static_cast<std::size_t>(j) * n + i] * inv;
    Eigen::Map<Eigen::VectorXd> beta(out.data() + static_cast<std::size_t>(j) * (n + 1) + 1, n);
    if (method_ == FbmMethod::kPolygonal)
      beta.noalias() = map_ * z;  // W_Pi looks ahead to the end of the coarse cell
    else
      beta.noalias() = map_.triangularView<Eigen::Lower>() * z;
    out[static_cast<std::size_t>(j) * (n + 1)] = 0.0;
  }
}

FbmPathSet FbmSampler::generate(int dims, int n_paths, std::uint64_t seed, unsigned threads) const {
  if (dims < 1) throw std::invalid_argument("generate: dims must be >= 1");
  if (n_paths < 1) throw std::invalid_argument("generate: n_paths must be >= 1");
  FbmPathSet set;
  set.grid = grid_;
  set.dims = dims;
  set.n_paths = n_paths;
  set.seed = seed;
  set.method = method_;
  set.jitter = jitter_;
  set.samples.assign(static_cast<std::size_t>(n_paths) * dims * grid_.size(), 0.0);
  const std::size_t per_path = static_cast<std::size_t>(dims) * grid_.size();
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t p) {
    sample(seed, p, dims, std::span<double>(set.samples).subspan(per_path * p, per_path));
  });
  return set;
}

FbmSampler make_cholesky_sampler(const TimeGrid& grid, HurstParam h) {
  if (grid.n_steps > 4096) throw std::invalid_argument("Cholesky sampler limited to 4096 steps");
  Eigen::MatrixXd g = fbm_gram(grid, h);
  Eigen::LLT<Eigen::MatrixXd> llt(g);
  double jitter = 0.0;
  if (llt.info() != Eigen::Success) {
    jitter = 1e-12;
    g.diagonal().array() += jitter;
    llt.compute(g);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("fBm Gram matrix not positive definite even with jitter");
  }
  Eigen::MatrixXd l = llt.matrixL();
  return FbmSampler(grid, FbmMethod::kCholesky, std::move(l), jitter);
}

double volterra_constant(HurstParam h) {
  static std::mutex mu;
  static std::map<double, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(h.value());
  if (it != cache.end()) return it->second;
  const double c = calibrate_ch(h, 4096);
  cache.emplace(h.value(), c);
  return c;
}

Eigen::MatrixXd volterra_cell_integrals(const TimeGrid& grid, HurstParam h) {
  const int n = grid.n_steps;
  const double c_h = volterra_constant(h);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
  // Interior cells keep at least one cell between them and either endpoint
  // singularity, so a fixed Gauss-Legendre rule is accurate to ~1e-12 there.
  parallel_for(static_cast<std::size_t>(n), default_threads(), [&](std::size_t row) {
    const int k = static_cast<int>(row) + 1;
    const double t = grid.at(k);
    auto kernel = [&](double s) { return volterra_kernel(t, s, h, c_h); };
    for (int j = 0; j < k; ++j) {
      const double lo = grid.at(j);
      const double hi = grid.at(j + 1);
      const bool singular = (j == 0) || (j == k - 1);
      a(k - 1, j) = singular ? integrate_endpoint_singular(kernel, lo, hi)
                             : boost::math::quadrature::gauss<double, 10>::integrate(kernel, lo, hi);
    }
  });
  return a;
}

Eigen::MatrixXd volterra_weights(const TimeGrid& grid, HurstParam h, VolterraRule rule) {
  const int n = grid.n_steps;
  if (rule == VolterraRule::kCellAverage) return volterra_cell_integrals(grid, h) / grid.dt();
  const double c_h = volterra_constant(h);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
  parallel_for(static_cast<std::size_t>(n), default_threads(), [&](std::size_t row) {
    const int k = static_cast<int>(row) + 1;
    for (int j = 0; j < k; ++j) {
      const double lo = grid.at(j);
      const double hi = grid.at(j + 1);
      const double node =
          rule == VolterraRule::kMidpoint ? 0.5 * (lo + hi) : volterra_node(lo, hi, h);
      w(k - 1, j) = volterra_kernel(grid.at(k), node, h, c_h);
    }
  });
  return w;
}

Eigen::MatrixXd polygonal_weights(const Eigen::MatrixXd& cell_integrals, const TimeGrid& grid,
                                  int coarse_factor) {
  const int n = grid.n_steps;
  if (coarse_factor < 1 || n % coarse_factor != 0)
    throw std::invalid_argument("polygonal: coarse_factor must divide n_steps");
  const double mesh = coarse_factor * grid.dt();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k <= n; ++k) {
    for (int c = 0; c * coarse_factor < k; ++c) {
      double mass = 0.0;
      for (int j = c * coarse_factor; j < std::min(k, (c + 1) * coarse_factor); ++j)
        mass += cell_integrals(k - 1, j);
      for (int i = c * coarse_factor; i < (c + 1) * coarse_factor; ++i) p(k - 1, i) = mass / mesh;
    }
  }
  return p;
}

FbmSampler make_volterra_sampler(const TimeGrid& grid, HurstParam h, VolterraRule rule) {
  return FbmSampler(grid, FbmMethod::kVolterra, volterra_weights(grid, h, rule) * std::sqrt(grid.dt()));
}

FbmSampler make_polygonal_sampler(const TimeGrid& grid, HurstParam h, int coarse_factor) {
  if (coarse_factor < 1 || grid.n_steps % coarse_factor != 0)
    throw std::invalid_argument("polygonal: coarse_factor must divide n_steps");
  const Eigen::MatrixXd a = volterra_cell_integrals(grid, h);
  return FbmSampler(grid, FbmMethod::kPolygonal,
                    polygonal_weights(a, grid, coarse_factor) * std::sqrt(grid.dt()));
}

FbmPathSet generate_cholesky(const TimeGrid& grid, int dims, int n_paths, HurstParam h,
                             std::uint64_t seed, unsigned threads) {
  return make_cholesky_sampler(grid, h).generate(dims, n_paths, seed, threads);
}

namespace {

FbmPathSet from_driver(const BrownianDriver& driver, const FbmSampler& sampler) {
  FbmPathSet set;
  set.grid = driver.grid;
  set.dims = driver.dims;
  set.n_paths = driver.n_paths;
  set.seed = driver.seed;
  set.method = sampler.method();
  const std::size_t per_in = static_cast<std::size_t>(driver.dims) * driver.grid.n_steps;
  const std::size_t per_out = static_cast<std::size_t>(driver.dims) * driver.grid.size();
  set.samples.assign(per_out * driver.n_paths, 0.0);
  for (int p = 0; p < driver.n_paths; ++p)
    sampler.apply(std::span<const double>(driver.increments).subspan(per_in * p, per_in),
                  driver.dims, std::span<double>(set.samples).subspan(per_out * p, per_out));
  return set;
}

}  // namespace

FbmPathSet generate_volterra(const BrownianDriver& driver, HurstParam h, VolterraRule rule) {
  return from_driver(driver, make_volterra_sampler(driver.grid, h, rule));
}

FbmPathSet generate_polygonal(const BrownianDriver& driver, HurstParam h, int coarse_factor) {
  return from_driver(driver, make_polygonal_sampler(driver.grid, h, coarse_factor));
}

void write_paths_csv(const FbmPathSet& paths, std::ostream& out) {
  out << "path_id,component,t,value\n";
  for (int p = 0; p < paths.n_paths; ++p)
    for (int j = 0; j < paths.dims; ++j)
      for (int i = 0; i <= paths.grid.n_steps; ++i)
        out << p << ',' << j << ',' << format_number(paths.grid.at(i)) << ','
            << format_number(paths.value(p, j, i)) << '\n';
}

}  // namespace fhjm
