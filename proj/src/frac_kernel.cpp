#include "fhjm/frac_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "fhjm/numerics.hpp"

namespace fhjm {

HurstParam::HurstParam(double h) : h_(h) {
  if (!(h > 0.5 && h < 1.0))
    throw std::invalid_argument("Hurst exponent must lie in (0.5, 1), got " + std::to_string(h));
}

FracOrder::FracOrder(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("fractional order must lie in (0, 1), got " +
                                std::to_string(alpha));
}

SampledFunction::SampledFunction(std::vector<double> g, std::vector<double> v)
    : grid(std::move(g)), values(std::move(v)) {
  if (grid.size() != values.size())
    throw std::invalid_argument("SampledFunction: grid and values differ in length");
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (!(grid[i] > grid[i - 1]))
      throw std::invalid_argument("SampledFunction: grid must be strictly increasing");
}

SampledFunction SampledFunction::uniform(double t_max, std::size_t n_cells,
                                         std::vector<double> values) {
  std::vector<double> g(n_cells + 1);
  for (std::size_t i = 0; i <= n_cells; ++i)
    g[i] = t_max * static_cast<double>(i) / static_cast<double>(n_cells);
  return SampledFunction(std::move(g), std::move(values));
}

bool SampledFunction::is_uniform_from_zero() const {
  if (grid.size() < 2 || grid.front() != 0.0) return false;
  const double h = spacing();
  for (std::size_t i = 1; i < grid.size(); ++i)
    if (std::abs((grid[i] - grid[i - 1]) - h) > 1e-9 * h) return false;
  return true;
}

double SampledFunction::spacing() const {
  return (grid.back() - grid.front()) / static_cast<double>(grid.size() - 1);
}

double phi_h(double u, HurstParam h) {
  if (u == 0.0) throw std::domain_error("phi_H is singular at u = 0; use a cell integral");
  return h * (2.0 * h - 1.0) * std::pow(std::abs(u), 2.0 * h - 2.0);
}

double phi_cell_integral(double a, double b, double c, double d, HurstParam h) {
  if (a > b || c > d) throw std::invalid_argument("phi_cell_integral: need a <= b and c <= d");
  if (a == b || c == d) return 0.0;
  const double p = 2.0 * h;
  auto pw = [p](double x) { return std::pow(std::abs(x), p); };
  return 0.5 * (pw(b - c) + pw(a - d) - pw(a - c) - pw(b - d));
}

double phi_time_integral(double t0, double t1, double t, HurstParam h) {
  if (t0 > t1 || t1 > t) throw std::invalid_argument("phi_time_integral: need t0 <= t1 <= t");
  const double p = 2.0 * h - 1.0;
  return h * (std::pow(t - t0, p) - std::pow(t - t1, p));
}

double phi_time_moment(double t0, double t1, double t, HurstParam h) {
  if (t0 > t1 || t1 > t) throw std::invalid_argument("phi_time_moment: need t0 <= t1 <= t");
  const double p = 2.0 * h;
  return (h - 0.5) * (std::pow(t - t0, p) - std::pow(t - t1, p));
}

std::vector<double> phi_product_weights(double t, int n_cells, HurstParam h) {
  if (n_cells < 1) throw std::invalid_argument("phi_product_weights: need at least one cell");
  std::vector<double> w(static_cast<std::size_t>(n_cells) + 1, 0.0);
  if (t <= 0.0) return w;
  const double step = t / n_cells;
  const double p0 = 2.0 * h - 1.0;
  const double p1 = 2.0 * h;
  // u_l = t - theta_l; powers are shared between neighbouring cells.
  double u_hi = t;
  double pow0_hi = std::pow(u_hi, p0);
  double pow1_hi = std::pow(u_hi, p1);
  for (int l = 0; l < n_cells; ++l) {
    const double u_lo = (l + 1 == n_cells) ? 0.0 : t - (l + 1) * step;
    const double pow0_lo = std::pow(u_lo, p0);
    const double pow1_lo = std::pow(u_lo, p1);
    const double m0 = h * (pow0_hi - pow0_lo);
    const double m1 = (h - 0.5) * (pow1_hi - pow1_lo);
    w[l] += (m1 - u_lo * m0) / step;
    w[l + 1] += (u_hi * m0 - m1) / step;
    u_hi = u_lo;
    pow0_hi = pow0_lo;
    pow1_hi = pow1_lo;
  }
  return w;
}

namespace {

// Diethelm's product-trapezoid weights for I^alpha at node k.
void product_trapezoid(const std::vector<double>& f, double step, double alpha,
                       std::vector<double>& out) {
  const std::size_t n = f.size() - 1;
  out.assign(n + 1, 0.0);
  const double scale = std::pow(step, alpha) / std::tgamma(alpha + 2.0);
  std::vector<double> pw(n + 2);
  for (std::size_t i = 0; i < pw.size(); ++i) pw[i] = std::pow(static_cast<double>(i), alpha + 1.0);
  for (std::size_t k = 1; k <= n; ++k) {
    const double kd = static_cast<double>(k);
    double acc = (pw[k - 1] - (kd - alpha - 1.0) * std::pow(kd, alpha)) * f[0];
    for (std::size_t j = 1; j < k; ++j) {
      const std::size_t m = k - j;
      acc += (pw[m + 1] - 2.0 * pw[m] + pw[m - 1]) * f[j];
    }
    acc += f[k];
    out[k] = scale * acc;
  }
}

}  // namespace

SampledFunction frac_integral(const SampledFunction& f, FracOrder alpha) {
  if (!f.is_uniform_from_zero())
    throw std::invalid_argument("frac_integral: grid must be uniform and start at 0");
  std::vector<double> out;
  product_trapezoid(f.values, f.spacing(), alpha.value(), out);
  return SampledFunction(f.grid, std::move(out));
}

SampledFunction frac_derivative(const SampledFunction& f, FracOrder alpha) {
  if (!f.is_uniform_from_zero())
    throw std::invalid_argument("frac_derivative: grid must be uniform and start at 0");
  if (f.size() < 3) throw std::invalid_argument("frac_derivative: need at least 3 nodes");
  double scale = 1.0;
  for (double v : f.values) scale = std::max(scale, std::abs(v));
  if (std::abs(f.values.front()) > 1e-12 * scale)
    throw std::invalid_argument("frac_derivative: f(0) must vanish");

  const double step = f.spacing();
  std::vector<double> big_f;
  product_trapezoid(f.values, step, 1.0 - alpha.value(), big_f);
  const std::size_t n = big_f.size() - 1;
  std::vector<double> d(n + 1);
  d[0] = (-3.0 * big_f[0] + 4.0 * big_f[1] - big_f[2]) / (2.0 * step);
  for (std::size_t k = 1; k < n; ++k) d[k] = (big_f[k + 1] - big_f[k - 1]) / (2.0 * step);
  d[n] = (3.0 * big_f[n] - 4.0 * big_f[n - 1] + big_f[n - 2]) / (2.0 * step);
  return SampledFunction(f.grid, std::move(d));
}

double volterra_kernel(double t, double s, HurstParam h, double c_h) {
  if (!(s > 0.0 && s < t)) throw std::domain_error("volterra_kernel: need 0 < s < t");
  const double a = h - 0.5;
  const double inv_a = 1.0 / a;
  // int_s^t (u - s)^(a - 1) u^a du, split at u = 2s when t > 4s. On the near piece
  // v = (u - s)^a removes the endpoint singularity; on the far piece u = e^y
  // keeps the integrand free of the scale s when s << t.
  const double mid = t > 4.0 * s ? 2.0 * s : t;
  const double span = mid - s;
  const double near = std::pow(span, a) * inv_a *
                      integrate_adaptive([&](double w) { return std::pow(s + span * std::pow(w, inv_a), a); },
                                         0.0, 1.0, 1e-12);
  double far = 0.0;
  if (t > mid) {
    far = integrate_adaptive(
        [&](double y) {
          const double u = std::exp(y);
          return std::pow(u - s, a - 1.0) * std::pow(u, a + 1.0);
        },
        std::log(mid), std::log(t), 1e-12);
  }
  return c_h * std::pow(s, -a) * (near + far);
}

double volterra_node(double a, double b, HurstParam h) {
  const double p = 1.0 - 2.0 * h;  // in (-1, 0)
  const double mean = (std::pow(b, p + 1.0) - std::pow(a, p + 1.0)) / ((p + 1.0) * (b - a));
  return std::pow(mean, 1.0 / p);
}

double calibrate_ch(HurstParam h, int n) {
  if (n < 64) throw std::invalid_argument("calibrate_ch: need n >= 64");
  const double step = 1.0 / n;
  std::vector<double> sq(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const double node = volterra_node(j * step, (j + 1) * step, h);
    const double k = volterra_kernel(1.0, node, h, 1.0);
    sq[static_cast<std::size_t>(j)] = k * k * step;
  }
  return 1.0 / std::sqrt(pairwise_sum(sq));
}

}  // namespace fhjm
