#ifndef FHJM_FRAC_KERNEL_HPP_
#define FHJM_FRAC_KERNEL_HPP_

#include <vector>

// Scalar kernels of fractional calculus for fBm with Hurst index H > 1/2.
//
//   phi_H(u) = H (2H - 1) |u|^(2H - 2)
//
// is the covariance density of fBm increments. It has an integrable
// singularity at u = 0, so everything that integrates it across the diagonal
// goes through the closed-form cell masses below rather than pointwise
// quadrature.

namespace fhjm {

/// Hurst exponent, restricted to the long-memory regime 1/2 < H < 1.
class HurstParam {
 public:
  explicit HurstParam(double h);
  double value() const noexcept { return h_; }
  operator double() const noexcept { return h_; }

 private:
  double h_;
};

/// Order of a fractional integral or derivative, 0 < alpha < 1.
class FracOrder {
 public:
  explicit FracOrder(double alpha);
  double value() const noexcept { return alpha_; }

 private:
  double alpha_;
};

/// A function sampled on a strictly increasing grid.
struct SampledFunction {
  std::vector<double> grid;
  std::vector<double> values;

  SampledFunction() = default;
  SampledFunction(std::vector<double> grid, std::vector<double> values);

  std::size_t size() const noexcept { return grid.size(); }
  /// True when the grid starts at 0 and is equispaced to relative 1e-9.
  bool is_uniform_from_zero() const;
  double spacing() const;

  static SampledFunction uniform(double t_max, std::size_t n_cells, std::vector<double> values);
};

/// phi_H(u); throws std::domain_error at u = 0.
double phi_h(double u, HurstParam h);

/// Exact double integral of phi_H(u - v) over [a,b] x [c,d]:
///   1/2 (|b-c|^2H + |a-d|^2H - |a-c|^2H - |b-d|^2H).
double phi_cell_integral(double a, double b, double c, double d, HurstParam h);

/// Exact integral of phi_H(t - theta) for theta in [t0, t1], t1 <= t.
double phi_time_integral(double t0, double t1, double t, HurstParam h);

/// Exact integral of (t - theta) phi_H(t - theta) for theta in [t0, t1].
double phi_time_moment(double t0, double t1, double t, HurstParam h);

/// Product-integration weights w_0..w_n for
///   int_0^t g(theta) phi_H(t - theta) dtheta  ~=  sum_l w_l g(l t / n),
/// exact whenever g is piecewise linear on the n equal cells.
std::vector<double> phi_product_weights(double t, int n_cells, HurstParam h);

/// Riemann-Liouville integral I^alpha f on a uniform grid starting at 0.
/// Product trapezoidal rule: (t - s)^(alpha - 1) is integrated exactly against
/// the piecewise-linear interpolant of f.
SampledFunction frac_integral(const SampledFunction& f, FracOrder alpha);

/// Riemann-Liouville derivative D^alpha f = d/dt I^(1-alpha) f.
///
/// Requires f(0) = 0. Accuracy is second order when f behaves like
/// t^(1+alpha) or smoother near the origin (for instance f = I^alpha g with
/// g(0) = 0); a t^alpha-type start degrades the first few nodes.
SampledFunction frac_derivative(const SampledFunction& f, FracOrder alpha);

/// Molchan-Golosov kernel
///   K(t, s) = c_H s^(1/2 - H) int_s^t (u - s)^(H - 3/2) u^(H - 1/2) du,
/// for 0 < s < t. The inner integral is evaluated after substituting
/// v = (u - s)^(H - 1/2), which removes the endpoint singularity.
double volterra_kernel(double t, double s, HurstParam h, double c_h);

/// Evaluation node inside the cell [a, b] at which s^(1 - 2H) equals its cell
/// average. Used for kernel sums so the s^(1/2 - H) factor of K is integrated
/// in mean square exactly; away from s = 0 it is the midpoint to O(h^2).
double volterra_node(double a, double b, HurstParam h);

/// c_H normalising the discretised int_0^1 K(1, s)^2 ds to one, using n cells
/// and the volterra_node rule. Deterministic in (H, n); requires n >= 64.
double calibrate_ch(HurstParam h, int n);

}  // namespace fhjm

#endif  // FHJM_FRAC_KERNEL_HPP_
