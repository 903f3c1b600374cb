#include "fhjm/drift_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "fhjm/numerics.hpp"

namespace fhjm {

namespace {

constexpr auto kFlat = Extrapolation::kFlat;

std::size_t count_outside(const VolatilitySpec& spec, int j, double t, double x) {
  return outside_table(spec, j, t, x) ? 1 : 0;
}

// S(t, x) with precomputed theta weights w (theta_l = l t / n).
double drift_with_weights(const VolatilitySpec& spec, double t, double x,
                          const std::vector<double>& w, std::size_t* extrapolated) {
  if (t <= 0.0) return 0.0;
  const int n = static_cast<int>(w.size()) - 1;
  const double step = t / n;
  double total = 0.0;
  for (int j = 0; j < spec.dims(); ++j) {
    const bool tab = std::holds_alternative<Tabulated>(spec.factor(j));
    double a = 0.0;
    double b = 0.0;
    std::size_t outside = 0;
    for (int l = 0; l <= n; ++l) {
      const double theta = l * step;
      a += w[static_cast<std::size_t>(l)] * i_sigma(spec, j, theta, x + t, kFlat);
      b += w[static_cast<std::size_t>(l)] * eval_vol(spec, j, theta, x + t - theta, kFlat);
      if (tab) outside += count_outside(spec, j, theta, x + t - theta);
    }
    const double s_tx = eval_vol(spec, j, t, x, kFlat);
    const double i_tx = i_sigma(spec, j, t, t + x, kFlat);
    if (tab) outside += count_outside(spec, j, t, x);
    if (extrapolated != nullptr) *extrapolated += outside;
    total += s_tx * a + i_tx * b;
  }
  return total;
}

void check_options(const DriftOptions& opts) {
  if (opts.theta_cells < 1) throw std::invalid_argument("theta_cells must be >= 1");
}

}  // namespace

double drift_at(const VolatilitySpec& spec, HurstParam h, double t, double x,
                const DriftOptions& opts, std::size_t* extrapolated) {
  check_options(opts);
  if (t < 0.0 || x < 0.0) throw std::invalid_argument("drift_at: t and x must be >= 0");
  if (t == 0.0) return 0.0;
  return drift_with_weights(spec, t, x, phi_product_weights(t, opts.theta_cells, h), extrapolated);
}

std::vector<double> drift_row(const VolatilitySpec& spec, HurstParam h, double t,
                              const std::vector<double>& xs, const DriftOptions& opts,
                              std::size_t* extrapolated) {
  check_options(opts);
  if (t < 0.0) throw std::invalid_argument("drift_row: t must be >= 0");
  std::vector<double> out(xs.size(), 0.0);
  if (t == 0.0) return out;
  const auto w = phi_product_weights(t, opts.theta_cells, h);
  for (std::size_t k = 0; k < xs.size(); ++k) {
    if (xs[k] < 0.0) throw std::invalid_argument("drift_row: x must be >= 0");
    out[k] = drift_with_weights(spec, t, xs[k], w, extrapolated);
  }
  return out;
}

DriftField DriftField::zero(const TimeGrid& tg, const MaturityGrid& xg) {
  DriftField f;
  f.t_grid = tg;
  f.x_grid = xg;
  f.values.assign(tg.size() * xg.size(), 0.0);
  return f;
}

DriftField drift_generic(const VolatilitySpec& spec, HurstParam h, const TimeGrid& tg,
                         const MaturityGrid& xg, const DriftOptions& opts) {
  check_options(opts);
  DriftField f = DriftField::zero(tg, xg);
  std::vector<std::size_t> outside(tg.size(), 0);
  parallel_for(static_cast<std::size_t>(tg.n_steps), opts.threads, [&](std::size_t r) {
    const int i = static_cast<int>(r) + 1;
    const double t = tg.at(i);
    const auto w = phi_product_weights(t, opts.theta_cells, h);
    for (int k = 0; k <= xg.m_steps; ++k)
      f.at(i, k) = drift_with_weights(spec, t, xg.at(k), w, &outside[r + 1]);
  });
  for (std::size_t c : outside) f.extrapolations += c;
  return f;
}

double drift_holee(double sigma, HurstParam h, double t, double x) {
  if (t < 0.0 || x < 0.0) throw std::invalid_argument("drift_holee: t and x must be >= 0");
  if (t == 0.0) return 0.0;
  const double hv = h.value();
  return sigma * sigma *
         (2.0 * x * hv * std::pow(t, 2.0 * hv - 1.0) + (hv - 0.5) * std::pow(t, 2.0 * hv));
}

double hullwhite_j(double alpha, HurstParam h, double t) {
  if (t < 0.0) throw std::invalid_argument("hullwhite_j: t must be >= 0");
  if (t == 0.0) return 0.0;
  const double p = 2.0 * h - 1.0;
  const double inv = 1.0 / p;
  // u = z^(1/p) turns H(2H-1) u^(2H-2) du into H dz. For H near 1 the
  // integrand still has a weak kink at z = 0, so tanh-sinh rather than GK.
  return h.value() *
         integrate_endpoint_singular([&](double z) { return std::exp(-alpha * std::pow(z, inv)); },
                                     0.0, std::pow(t, p), 1e-14);
}

double drift_hullwhite(double sigma, double alpha, HurstParam h, double t, double x) {
  if (t < 0.0 || x < 0.0) throw std::invalid_argument("drift_hullwhite: t and x must be >= 0");
  if (!(alpha > 0.0)) throw std::invalid_argument("drift_hullwhite: alpha must be > 0");
  if (t == 0.0) return 0.0;
  const double j = hullwhite_j(alpha, h, t);
  const double phi = h.value() * std::pow(t, 2.0 * h - 1.0);
  const double e1 = std::exp(-alpha * x);
  return sigma * sigma / alpha * (e1 * (phi + j) - 2.0 * e1 * e1 * j);
}

double drift_closed_form(const VolatilitySpec& spec, HurstParam h, double t, double x) {
  double total = 0.0;
  for (const auto& f : spec.factors()) {
    if (const auto* hl = std::get_if<HoLee>(&f))
      total += drift_holee(hl->sigma, h, t, x);
    else if (const auto* hw = std::get_if<HullWhite>(&f))
      total += drift_hullwhite(hw->sigma, hw->alpha, h, t, x);
    else
      throw std::invalid_argument("no closed-form drift for tabulated volatility");
  }
  return total;
}

DriftComparison compare_with_closed_form(const DriftField& field, const VolatilitySpec& spec, HurstParam h,
                                         int rows) {
  const int n_rows = rows < 0 ? static_cast<int>(field.t_grid.size()) : rows;
  DriftComparison out;
  for (int i = 0; i < n_rows; ++i)
    for (int k = 0; k < static_cast<int>(field.x_grid.size()); ++k) {
      const double t = field.t_grid.at(i);
      const double x = field.x_grid.at(k);
      const double c = drift_closed_form(spec, h, t, x);
      const double diff = std::abs(field.at(i, k) - c);
      const double rel = c != 0.0 ? diff / std::abs(c) : (diff == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
      out.max_abs_error = std::max(out.max_abs_error, diff);
      if (rel > out.max_rel_error) {
        out.max_rel_error = rel;
        out.t_at_max = t;
        out.x_at_max = x;
      }
    }
  return out;
}

std::vector<DriftTerm> closed_form_drift_terms(const VolatilitySpec& spec, HurstParam h, double t) {
  std::vector<DriftTerm> terms;
  const double hv = h.value();
  for (int j = 0; j < spec.dims(); ++j) {
    const std::string suffix = spec.dims() > 1 ? " [factor " + std::to_string(j) + "]" : "";
    const auto& f = spec.factor(j);
    if (const auto* hl = std::get_if<HoLee>(&f)) {
      const double s2 = hl->sigma * hl->sigma;
      const double slope = t > 0.0 ? 2.0 * s2 * hv * std::pow(t, 2.0 * hv - 1.0) : 0.0;
      const double level = t > 0.0 ? s2 * (hv - 0.5) * std::pow(t, 2.0 * hv) : 0.0;
      terms.push_back({"x-linear" + suffix, slope, [](double x) { return x; },
                       [](double l) { return 0.5 * l * l; }});
      terms.push_back({"constant" + suffix, level, [](double) { return 1.0; },
                       [](double l) { return l; }});
    } else if (const auto* hw = std::get_if<HullWhite>(&f)) {
      const double s2a = hw->sigma * hw->sigma / hw->alpha;
      const double jv = hullwhite_j(hw->alpha, h, t);
      const double phi = t > 0.0 ? hv * std::pow(t, 2.0 * hv - 1.0) : 0.0;
      const double a = hw->alpha;
      terms.push_back({"exp(-alpha x)" + suffix, s2a * (phi + jv),
                       [a](double x) { return std::exp(-a * x); },
                       [a](double l) { return -std::expm1(-a * l) / a; }});
      terms.push_back({"exp(-2 alpha x)" + suffix, -2.0 * s2a * jv,
                       [a](double x) { return std::exp(-2.0 * a * x); },
                       [a](double l) { return -std::expm1(-2.0 * a * l) / (2.0 * a); }});
    } else {
      throw std::invalid_argument("no closed-form drift terms for tabulated volatility");
    }
  }
  return terms;
}

double drift_maturity_integral(const VolatilitySpec& spec, HurstParam h, double t, double T,
                               const DriftOptions& opts, int y_cells) {
  if (t < 0.0 || t > T) throw std::invalid_argument("drift_maturity_integral: need 0 <= t <= T");
  if (t == 0.0 || t == T) return 0.0;
  const double len = T - t;
  if (spec.closed_form()) {
    double acc = 0.0;
    for (const auto& term : closed_form_drift_terms(spec, h, t)) acc += term.coefficient * term.shape_integral(len);
    return acc;
  }
  if (y_cells < 1) throw std::invalid_argument("drift_maturity_integral: y_cells must be >= 1");
  check_options(opts);
  const auto w = phi_product_weights(t, opts.theta_cells, h);
  const auto tw = trapezoid_weights(static_cast<std::size_t>(y_cells), len / y_cells);
  double acc = 0.0;
  for (int k = 0; k <= y_cells; ++k)
    acc += tw[static_cast<std::size_t>(k)] * drift_with_weights(spec, t, len * k / y_cells, w, nullptr);
  return acc;
}

double expectation_kernel(const VolatilitySpec& spec, HurstParam h, double t, double T,
                          const DriftOptions& opts) {
  check_options(opts);
  if (t < 0.0 || t > T) throw std::invalid_argument("expectation_kernel: need 0 <= t <= T");
  if (t == 0.0) return 0.0;
  const auto w = phi_product_weights(t, opts.theta_cells, h);
  const double step = t / opts.theta_cells;
  double total = 0.0;
  for (int j = 0; j < spec.dims(); ++j) {
    double acc = 0.0;
    for (int l = 0; l <= opts.theta_cells; ++l)
      acc += w[static_cast<std::size_t>(l)] * i_sigma(spec, j, l * step, T, kFlat);
    total += i_sigma(spec, j, t, T, kFlat) * acc;
  }
  return total;
}

double log_expectation(const VolatilitySpec& spec, HurstParam h, double t, double T,
                       const DriftOptions& opts) {
  if (t < 0.0 || t > T) throw std::invalid_argument("log_expectation: need 0 <= t <= T");
  if (t == 0.0) return 0.0;
  return integrate_graded([&](double s) { return expectation_kernel(spec, h, s, T, opts); }, t);
}

MarketPriceOfRisk solve_market_price_of_risk(const VolatilitySpec& spec, HurstParam h,
                                             const DriftField& alpha, double t,
                                             const DriftOptions& opts) {
  const int i = alpha.t_grid.index_of(t);
  const auto& xg = alpha.x_grid;
  const int m = static_cast<int>(xg.size());
  const int d = spec.dims();
  const auto tw = trapezoid_weights(static_cast<std::size_t>(xg.m_steps), xg.dx());
  Eigen::MatrixXd a(m, d);
  Eigen::VectorXd rhs(m);
  const auto w = t > 0.0 ? phi_product_weights(t, opts.theta_cells, h) : std::vector<double>{};
  for (int k = 0; k < m; ++k) {
    const double sw = std::sqrt(tw[static_cast<std::size_t>(k)]);
    const double x = xg.at(k);
    for (int j = 0; j < d; ++j) a(k, j) = sw * eval_vol(spec, j, t, x, kFlat);
    const double s = t > 0.0 ? drift_with_weights(spec, t, x, w, nullptr) : 0.0;
    rhs[k] = sw * (s - alpha.at(i, k));
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const double smax = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  svd.setThreshold(1e-12);
  MarketPriceOfRisk out;
  out.rank = smax > 0.0 ? static_cast<int>(svd.rank()) : 0;
  out.gamma = smax > 0.0 ? Eigen::VectorXd(svd.solve(rhs)) : Eigen::VectorXd::Zero(d);
  out.residual = (a * out.gamma - rhs).norm();
  return out;
}

void write_drift_csv(const DriftField& field, std::ostream& out) {
  out << "t,x,value\n";
  for (int i = 0; i <= field.t_grid.n_steps; ++i)
    for (int k = 0; k <= field.x_grid.m_steps; ++k)
      out << format_number(field.t_grid.at(i)) << ',' << format_number(field.x_grid.at(k)) << ','
          << format_number(field.at(i, k)) << '\n';
}

}  // namespace fhjm
