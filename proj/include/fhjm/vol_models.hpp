#ifndef FHJM_VOL_MODELS_HPP_
#define FHJM_VOL_MODELS_HPP_

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "fhjm/frac_kernel.hpp"

namespace fhjm {

// Deterministic forward-rate volatilities in the Musiela parametrisation:
// factor j at calendar time t and time-to-maturity x is sigma^j(t, x).

/// sigma^j(t, x) = sigma.
struct HoLee {
  double sigma = 0.0;
};

/// sigma^j(t, x) = sigma exp(-alpha x).
struct HullWhite {
  double sigma = 0.0;
  double alpha = 1.0;
};

/// Bilinear interpolation of values[i * x.size() + k] at (t[i], x[k]).
struct Tabulated {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> values;
};

using VolFactor = std::variant<HoLee, HullWhite, Tabulated>;

class VolatilitySpec {
 public:
  explicit VolatilitySpec(std::vector<VolFactor> factors);

  int dims() const noexcept { return static_cast<int>(factors_.size()); }
  const VolFactor& factor(int j) const { return factors_.at(static_cast<std::size_t>(j)); }
  const std::vector<VolFactor>& factors() const noexcept { return factors_; }
  /// True when every factor is a closed-form (Ho-Lee / Hull-White) factor.
  bool closed_form() const;
  bool time_homogeneous() const;
  /// True when every factor vanishes identically.
  bool is_zero() const;

 private:
  std::vector<VolFactor> factors_;
};

/// Uniform time-to-maturity grid x_k = k x_max / m.
struct MaturityGrid {
  double x_max = 1.0;
  int m_steps = 1;

  MaturityGrid() = default;
  MaturityGrid(double x_max, int m_steps);

  double dx() const noexcept { return x_max / m_steps; }
  double at(int k) const noexcept { return x_max * k / m_steps; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(m_steps) + 1; }
};

/// Behaviour of tabulated factors outside their grid.
enum class Extrapolation { kReject, kFlat };

/// sigma^j(t, x), j zero-based. Tabulated queries outside the table throw
/// std::out_of_range under kReject and clamp under kFlat.
double eval_vol(const VolatilitySpec& spec, int j, double t, double x,
                Extrapolation policy = Extrapolation::kReject);

/// True if eval_vol(spec, j, t, x) would need extrapolation.
bool outside_table(const VolatilitySpec& spec, int j, double t, double x);

/// I_sigma(s, T) = int_0^(T-s) sigma^j(s, x) dx. Closed form for Ho-Lee and
/// Hull-White; exact trapezoid over the table nodes for tabulated factors.
double i_sigma(const VolatilitySpec& spec, int j, double s, double T,
               Extrapolation policy = Extrapolation::kReject);

/// Same integral by adaptive Gauss-Kronrod on eval_vol.
double i_sigma_numeric(const VolatilitySpec& spec, int j, double s, double T,
                       Extrapolation policy = Extrapolation::kReject);

struct RegularityItem {
  std::string name;
  double coarse = 0.0;
  double fine = 0.0;
  bool finite = false;
};

/// Numerical values of the four growth conditions on the forward-rate
/// coefficients (drift and volatility integrability, the weighted
/// continuity integral with gamma = 1/4, and the two bond-price growth
/// integrals). Each is computed on a coarse and a once-refined grid; an item
/// is reported finite when both values are finite and agree within 10%.
/// Curve norms are sup norms over x in [0, T].
struct RegularityReport {
  std::array<RegularityItem, 4> items;
  bool all_finite() const;
};

RegularityReport validate_regularity(const VolatilitySpec& spec, HurstParam h, double T,
                                     int cells = 32);

}  // namespace fhjm

#endif  // FHJM_VOL_MODELS_HPP_
