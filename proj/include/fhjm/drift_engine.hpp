#ifndef FHJM_DRIFT_ENGINE_HPP_
#define FHJM_DRIFT_ENGINE_HPP_

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fhjm/fbm_engine.hpp"
#include "fhjm/vol_models.hpp"

namespace fhjm {

// No-arbitrage drift of the forward curve r_t(x) under fBm noise:
//
//   S(t, x) = sum_j { sigma_j(t, x)     int_0^t I_j(theta, x + t) phi_H(t - theta) dtheta
//                   + I_j(t, t + x)     int_0^t sigma_j(theta, x + t - theta) phi_H(t - theta) dtheta }
//
// with I_j(s, T) = int_0^(T - s) sigma_j(s, y) dy.

struct DriftOptions {
  /// Cells on [0, t] for the theta integrals. Fixed, not tied to the time
  /// grid: near x = 0 the two Hull-White terms nearly cancel at small t and a
  /// coarse rule loses relative accuracy there.
  int theta_cells = 1024;
  unsigned threads = 1;
};

/// S(t, x) by product integration: the smooth factors are interpolated
/// linearly on theta_cells equal cells and phi_H is integrated exactly.
/// Tabulated factors are extrapolated flat; `extrapolated` (if given) is
/// incremented for every query that left the table.
double drift_at(const VolatilitySpec& spec, HurstParam h, double t, double x,
                const DriftOptions& opts = {}, std::size_t* extrapolated = nullptr);

/// S(t, x) for every x in xs, sharing one set of theta weights.
std::vector<double> drift_row(const VolatilitySpec& spec, HurstParam h, double t,
                              const std::vector<double>& xs, const DriftOptions& opts = {},
                              std::size_t* extrapolated = nullptr);

struct DriftField {
  TimeGrid t_grid;
  MaturityGrid x_grid;
  std::vector<double> values;  // row-major (n+1) x (m+1)
  std::size_t extrapolations = 0;

  double at(int i, int k) const {
    return values[static_cast<std::size_t>(i) * x_grid.size() + static_cast<std::size_t>(k)];
  }
  double& at(int i, int k) {
    return values[static_cast<std::size_t>(i) * x_grid.size() + static_cast<std::size_t>(k)];
  }
  static DriftField zero(const TimeGrid& tg, const MaturityGrid& xg);
};

DriftField drift_generic(const VolatilitySpec& spec, HurstParam h, const TimeGrid& tg,
                         const MaturityGrid& xg, const DriftOptions& opts = {});

/// Ho-Lee: sigma^2 (2 x H t^(2H-1) + (H - 1/2) t^(2H)).
double drift_holee(double sigma, HurstParam h, double t, double x);

/// J(t) = int_0^t exp(-alpha u) phi_H(u) du, via z = u^(2H-1).
double hullwhite_j(double alpha, HurstParam h, double t);

/// Hull-White: (sigma^2/alpha) e^(-alpha x) (H t^(2H-1) + J)
///             - (2 sigma^2/alpha) e^(-2 alpha x) J.
double drift_hullwhite(double sigma, double alpha, HurstParam h, double t, double x);

/// Sum of the closed forms over factors. Throws std::invalid_argument for
/// tabulated factors.
double drift_closed_form(const VolatilitySpec& spec, HurstParam h, double t, double x);

struct DriftComparison {
  double max_abs_error = 0.0;
  /// max |S - S_closed| / |S_closed| over nodes with S_closed != 0; a nonzero
  /// S where the closed form vanishes counts as infinite.
  double max_rel_error = 0.0;
  double t_at_max = 0.0;
  double x_at_max = 0.0;
};

/// Compares rows 0..rows-1 of `field` (all rows if rows < 0) with
/// drift_closed_form at the same nodes.
DriftComparison compare_with_closed_form(const DriftField& field, const VolatilitySpec& spec, HurstParam h,
                                         int rows = -1);

/// One named shape in the closed-form drift at fixed t: coefficient * shape(x).
struct DriftTerm {
  std::string name;
  double coefficient = 0.0;
  std::function<double(double)> shape;
  /// int_0^L shape(y) dy.
  std::function<double(double)> shape_integral;
};

/// Terms of the closed-form drift at time t, in a fixed order. Names are
/// "x-linear" and "constant" for Ho-Lee factors, "exp(-alpha x)" and
/// "exp(-2 alpha x)" for Hull-White ones (suffixed " [factor j]" when d > 1).
std::vector<DriftTerm> closed_form_drift_terms(const VolatilitySpec& spec, HurstParam h, double t);

/// I_S(t, T) = int_0^(T - t) S(t, y) dy. Closed-form specs integrate the
/// drift terms exactly; otherwise trapezoid on `y_cells` cells of drift_at.
double drift_maturity_integral(const VolatilitySpec& spec, HurstParam h, double t, double T,
                               const DriftOptions& opts = {}, int y_cells = 256);

/// e(t, T) = sum_j I_j(t, T) int_0^t I_j(theta, T) phi_H(t - theta) dtheta.
double expectation_kernel(const VolatilitySpec& spec, HurstParam h, double t, double T,
                          const DriftOptions& opts = {});

/// int_0^t e(s, T) ds, integrated on dyadic panels graded towards s = 0.
double log_expectation(const VolatilitySpec& spec, HurstParam h, double t, double T,
                       const DriftOptions& opts = {});

struct MarketPriceOfRisk {
  Eigen::VectorXd gamma;
  double residual = 0.0;  // weighted L2 norm on the x-grid
  int rank = 0;
};

/// Least-squares gamma with sum_j gamma_j sigma_j(t, .) ~ S(t, .) - alpha(t, .)
/// on alpha.x_grid, t a node of alpha.t_grid. SVD pseudo-inverse.
MarketPriceOfRisk solve_market_price_of_risk(const VolatilitySpec& spec, HurstParam h,
                                             const DriftField& alpha, double t,
                                             const DriftOptions& opts = {});

/// CSV with header t,x,value.
void write_drift_csv(const DriftField& field, std::ostream& out);

}  // namespace fhjm

#endif  // FHJM_DRIFT_ENGINE_HPP_
