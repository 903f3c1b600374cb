#ifndef FHJM_FBM_ENGINE_HPP_
#define FHJM_FBM_ENGINE_HPP_

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fhjm/frac_kernel.hpp"

namespace fhjm {

/// Uniform partition 0 = t_0 < ... < t_n = t_star.
struct TimeGrid {
  double t_star = 1.0;
  int n_steps = 1;

  TimeGrid() = default;
  TimeGrid(double t_star, int n_steps);

  double dt() const noexcept { return t_star / n_steps; }
  double at(int i) const noexcept { return t_star * i / n_steps; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(n_steps) + 1; }
  /// Index of the node equal to t (within 1e-9 dt); throws if t is off-grid.
  int index_of(double t) const;
};

enum class FbmMethod { kCholesky, kVolterra, kPolygonal };
std::string to_string(FbmMethod m);
FbmMethod fbm_method_from_string(const std::string& s);

/// How the Volterra sum evaluates K(t_k, .) on driver cell j.
enum class VolterraRule {
  kSingularNode,  // K at volterra_node of the cell (default)
  kMidpoint,      // K at the cell midpoint
  kCellAverage,   // cell mean of K; coincides with the polygonal path at factor 1
};

/// Sampled d-dimensional fBm paths. samples are laid out [path][component][node].
struct FbmPathSet {
  TimeGrid grid;
  int dims = 1;
  int n_paths = 0;
  std::uint64_t seed = 0;
  FbmMethod method = FbmMethod::kCholesky;
  /// Diagonal jitter added when the Gram matrix failed to factor (0 if none).
  double jitter = 0.0;
  std::vector<double> samples;

  double value(int p, int j, int i) const {
    return samples[offset(p, j) + static_cast<std::size_t>(i)];
  }
  std::span<const double> path(int p, int j) const {
    return {samples.data() + offset(p, j), grid.size()};
  }
  /// All components of path p, component-major.
  std::span<const double> path(int p) const {
    return {samples.data() + offset(p, 0), grid.size() * static_cast<std::size_t>(dims)};
  }
  std::size_t offset(int p, int j) const {
    return (static_cast<std::size_t>(p) * dims + j) * grid.size();
  }
};

/// Brownian increments driving the Volterra and polygonal constructions,
/// laid out [path][component][step], each N(0, dt).
struct BrownianDriver {
  TimeGrid grid;
  int dims = 1;
  int n_paths = 0;
  std::uint64_t seed = 0;
  std::vector<double> increments;

  static BrownianDriver generate(const TimeGrid& grid, int dims, int n_paths, std::uint64_t seed);
  std::span<const double> path(int p, int j) const {
    return {increments.data() + (static_cast<std::size_t>(p) * dims + j) * grid.n_steps,
            static_cast<std::size_t>(grid.n_steps)};
  }
};

/// Cov(beta_s, beta_t) = (s^2H + t^2H - |t - s|^2H) / 2.
double fbm_covariance(double s, double t, HurstParam h);

/// Gram matrix of beta at t_1..t_n.
Eigen::MatrixXd fbm_gram(const TimeGrid& grid, HurstParam h);

/// Linear Gaussian sampler: beta(t_1..t_n) = M z with z standard normal,
/// drawn independently per component from the path's substream. All three
/// generators are instances with different M.
class FbmSampler {
 public:
  FbmSampler(TimeGrid grid, FbmMethod method, Eigen::MatrixXd map, double jitter = 0.0);

  /// Writes dims * (n + 1) values (component-major, beta_0 = 0) for path p.
  void sample(std::uint64_t seed, std::uint64_t p, int dims, std::span<double> out) const;
  /// Same map applied to caller-supplied N(0, dt) increments (n per component).
  void apply(std::span<const double> increments, int dims, std::span<double> out) const;

  const TimeGrid& grid() const noexcept { return grid_; }
  FbmMethod method() const noexcept { return method_; }
  const Eigen::MatrixXd& map() const noexcept { return map_; }
  double jitter() const noexcept { return jitter_; }

  FbmPathSet generate(int dims, int n_paths, std::uint64_t seed, unsigned threads = 1) const;

 private:
  TimeGrid grid_;
  FbmMethod method_;
  Eigen::MatrixXd map_;  // acts on unit normals
  double jitter_;
};

/// Exact sampler: Cholesky factor of fbm_gram. Requires n_steps <= 4096.
FbmSampler make_cholesky_sampler(const TimeGrid& grid, HurstParam h);

/// c_H used by the Volterra constructions (calibrate_ch at 4096 cells, cached).
double volterra_constant(HurstParam h);

/// Weights W with beta(t_k) = sum_{j<k} W(k-1, j) dW_j.
Eigen::MatrixXd volterra_weights(const TimeGrid& grid, HurstParam h, VolterraRule rule);

/// Exact cell integrals A(k-1, j) = int_{t_j}^{t_{j+1}} K(t_k, s) ds for j < k.
Eigen::MatrixXd volterra_cell_integrals(const TimeGrid& grid, HurstParam h);

/// Weights of the polygonal approximation: beta_Pi(t_k) = sum_i P(k-1, i) dW_i,
/// where W_Pi interpolates the driver linearly on cells of coarse_factor steps.
Eigen::MatrixXd polygonal_weights(const Eigen::MatrixXd& cell_integrals, const TimeGrid& grid,
                                  int coarse_factor);

FbmSampler make_volterra_sampler(const TimeGrid& grid, HurstParam h,
                                 VolterraRule rule = VolterraRule::kSingularNode);
FbmSampler make_polygonal_sampler(const TimeGrid& grid, HurstParam h, int coarse_factor);

FbmPathSet generate_cholesky(const TimeGrid& grid, int dims, int n_paths, HurstParam h,
                             std::uint64_t seed, unsigned threads = 1);
FbmPathSet generate_volterra(const BrownianDriver& driver, HurstParam h,
                             VolterraRule rule = VolterraRule::kSingularNode);
FbmPathSet generate_polygonal(const BrownianDriver& driver, HurstParam h, int coarse_factor);

/// CSV with header path_id,component,t,value.
void write_paths_csv(const FbmPathSet& paths, std::ostream& out);

}  // namespace fhjm

#endif  // FHJM_FBM_ENGINE_HPP_
