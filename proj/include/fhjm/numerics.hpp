#ifndef FHJM_NUMERICS_HPP_
#define FHJM_NUMERICS_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace fhjm {

/// Fixed-tree pairwise summation. The reduction order depends only on the
/// input length, so results are identical run to run.
double pairwise_sum(std::span<const double> values);

/// Mean and standard error of a sample, reduced with pairwise_sum.
struct SampleStats {
  double mean = 0.0;
  double std_error = 0.0;
  double variance = 0.0;
  std::size_t count = 0;
};
SampleStats sample_stats(std::span<const double> values);

/// Adaptive Gauss-Kronrod on [a, b] (smooth integrands).
double integrate_adaptive(const std::function<double(double)>& f, double a, double b,
                          double tol = 1e-12);

/// Double-exponential quadrature; tolerates integrable endpoint singularities.
double integrate_endpoint_singular(const std::function<double(double)>& f, double a, double b,
                                   double tol = 1e-11);

/// Composite Gauss-Legendre on dyadic panels [b 2^-(k+1), b 2^-k], k < levels,
/// for integrands on [0, b] that behave like s^p (p > -1) near zero. The
/// innermost piece [0, b 2^-levels] is dropped.
double integrate_graded(const std::function<double(double)>& f, double b, int levels = 48);

/// Trapezoidal weights for n+1 equispaced nodes with spacing h.
std::vector<double> trapezoid_weights(std::size_t n_cells, double h);

/// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index is
/// processed exactly once; callers write to disjoint output slots.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& fn);

unsigned default_threads();

/// Decimal text with 17 significant digits (round-trips every double).
std::string format_number(double v);

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x);

/// Seed of the substream owned by `path` under root seed `root`:
/// splitmix64(splitmix64(root) ^ splitmix64(path + 1)). Path p therefore draws
/// the same numbers however many paths are generated and in whatever order.
std::uint64_t path_seed(std::uint64_t root, std::uint64_t path);

/// Standard normal stream for one path.
class NormalStream {
 public:
  NormalStream(std::uint64_t root, std::uint64_t path) : engine_(path_seed(root, path)) {}
  double operator()() { return dist_(engine_); }
  void fill(std::span<double> out) {
    for (double& v : out) v = dist_(engine_);
  }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

}  // namespace fhjm

#endif  // FHJM_NUMERICS_HPP_
