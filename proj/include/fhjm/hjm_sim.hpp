#ifndef FHJM_HJM_SIM_HPP_
#define FHJM_HJM_SIM_HPP_

#include <array>
#include <iosfwd>
#include <span>
#include <vector>

#include "fhjm/drift_engine.hpp"
#include "fhjm/fbm_engine.hpp"
#include "fhjm/vol_models.hpp"

namespace fhjm {

/// Initial forward curve x -> r_0(x).
class InitialCurve {
 public:
  enum class Kind { kFlat, kNelsonSiegel, kTable };

  static InitialCurve flat(double rate);
  /// y1 + y2 exp(-y4 x) + y3 x exp(-y4 x), y4 != 0.
  static InitialCurve nelson_siegel(std::array<double, 4> y);
  /// Linear interpolation through (x_k, r_k); x strictly increasing from 0.
  static InitialCurve table(std::vector<double> x, std::vector<double> r);

  Kind kind() const noexcept { return kind_; }
  double operator()(double x) const;
  /// int_0^x r_0(y) dy (exact for every kind).
  double integral(double x) const;
  /// Largest maturity the curve is defined at (infinite unless tabulated).
  double max_x() const noexcept;

 private:
  Kind kind_ = Kind::kFlat;
  double rate_ = 0.0;
  std::array<double, 4> ns_{};
  std::vector<double> x_;
  std::vector<double> r_;
};

enum class DriftSource {
  kModel,  // the no-arbitrage drift S(t, x)
  kZero,   // drift switched off (negative control)
};

struct SimulationOptions {
  DriftSource drift = DriftSource::kModel;
  /// Use the analytic drift for Ho-Lee / Hull-White specs instead of the
  /// product-integration functional (they agree to ~1e-7 relative).
  bool prefer_closed_form = true;
  DriftOptions drift_options;
};

/// Discretised mild solution on the triangular grid:
///
///   r_{t_i}(x_k) = r_0(t_i + x_k) + dt sum_{l<i} S(t_l, x_k + t_i - t_l)
///                + sum_j sum_{l<i} sigma_j(t_l, x_k + t_i - t_l) (beta^j_{l+1} - beta^j_l).
///
/// The x-grid spacing must be an integer multiple q of dt, so all arguments
/// x_k + t_i - t_l fall on a lattice of spacing dt, where drift and
/// volatilities are tabulated once.
class ForwardModel {
 public:
  ForwardModel(VolatilitySpec spec, HurstParam h, TimeGrid tg, MaturityGrid xg,
               InitialCurve init, SimulationOptions opts = {});

  const VolatilitySpec& spec() const noexcept { return spec_; }
  HurstParam hurst() const noexcept { return h_; }
  const TimeGrid& t_grid() const noexcept { return tg_; }
  const MaturityGrid& x_grid() const noexcept { return xg_; }
  const InitialCurve& initial_curve() const noexcept { return init_; }
  const SimulationOptions& options() const noexcept { return opts_; }
  int dims() const noexcept { return spec_.dims(); }
  int stride() const noexcept { return q_; }
  /// Tabulated-volatility queries that needed flat extrapolation.
  std::size_t extrapolations() const noexcept { return extrapolations_; }

  /// S(t_l, m dt) as used by the simulation, l < n.
  double drift_lattice(int l, int m) const { return drift_[idx(l, m)]; }
  double vol_lattice(int j, int l, int m) const {
    return vol_[static_cast<std::size_t>(j) * drift_.size() + idx(l, m)];
  }

  /// Row i of the forward curve, x_0..x_{k_max}, driven by increments
  /// laid out [j][l] (dims x n_steps).
  void row(std::span<const double> increments, int i, int k_max, std::span<double> out) const;
  /// Short rates r_{t_i}(0), i = 0..n.
  void short_rates(std::span<const double> increments, std::span<double> out) const;
  /// Deterministic part of row i (zero noise).
  double mean_part(int i, int k) const { return det_[static_cast<std::size_t>(i) * xg_.size() + k]; }

  /// int_0^(T - t_i) r_{t_i}(x) dx by the trapezoid rule on the x-grid, last
  /// cell cut at T - t_i with linear interpolation. `row` must hold at least
  /// bond_nodes(i, T) values.
  double log_bond_integral(std::span<const double> row, int i, double T) const;
  /// Number of x-nodes needed for maturity T from t_i; throws if T - t_i > x_max.
  int bond_nodes(int i, double T) const;

  /// int_0^(T - t_l) S(t_l, y) dy on the dt lattice (trapezoid, partial last cell).
  double drift_integral(int l, double T) const;

 private:
  std::size_t idx(int l, int m) const {
    return static_cast<std::size_t>(l) * lattice_ + static_cast<std::size_t>(m);
  }

  VolatilitySpec spec_;
  HurstParam h_;
  TimeGrid tg_;
  MaturityGrid xg_;
  InitialCurve init_;
  SimulationOptions opts_;
  int q_ = 1;
  std::size_t lattice_ = 0;
  std::size_t extrapolations_ = 0;
  std::vector<double> drift_;  // [l][m]
  std::vector<double> vol_;    // [j][l][m]
  std::vector<double> det_;    // [i][k]
};

/// Increments beta_{l+1} - beta_l of path p, laid out [j][l].
std::vector<double> path_increments(const FbmPathSet& paths, int p);

/// r[p][i][k].
struct ForwardSurface {
  TimeGrid t_grid;
  MaturityGrid x_grid;
  int n_paths = 0;
  std::vector<double> r;

  double at(int p, int i, int k) const { return r[offset(p, i) + static_cast<std::size_t>(k)]; }
  std::span<const double> row(int p, int i) const { return {r.data() + offset(p, i), x_grid.size()}; }
  std::size_t offset(int p, int i) const {
    return (static_cast<std::size_t>(p) * t_grid.size() + static_cast<std::size_t>(i)) * x_grid.size();
  }
};

ForwardSurface simulate_forward(const ForwardModel& model, const FbmPathSet& paths,
                                unsigned threads = 1);

/// values[p][i][m] = P(t_i, T_m) (or Z when discounted). Entries with
/// t_i > T_m are NaN: the bond has matured.
struct BondSurface {
  TimeGrid t_grid;
  std::vector<double> maturities;
  int n_paths = 0;
  bool discounted = false;
  std::vector<double> values;

  double at(int p, int i, int m) const { return values[offset(p, i, m)]; }
  double& at(int p, int i, int m) { return values[offset(p, i, m)]; }
  std::size_t offset(int p, int i, int m) const {
    return (static_cast<std::size_t>(p) * t_grid.size() + static_cast<std::size_t>(i)) *
               maturities.size() +
           static_cast<std::size_t>(m);
  }
};

BondSurface bond_surface(const ForwardModel& model, const ForwardSurface& surface,
                         const std::vector<double>& maturities);

/// S_0[p][i] = exp(trapezoid int_0^{t_i} r_s(0) ds).
std::vector<double> money_account(const ForwardSurface& surface);

BondSurface discounted_surface(const BondSurface& bonds, const std::vector<double>& account);

/// Bond prices from
///   P(t,T) = P(0,T) exp{ int_0^t [r_s(0) - I_S(s,T)] ds - sum_j int_0^t I_j(s,T) dbeta^j_s },
/// short rate taken from the simulated surface, ds-integrals by the
/// trapezoid rule and the dbeta-integral as a left-point sum.
BondSurface closed_form_bond(const ForwardModel& model, const FbmPathSet& paths,
                             const std::vector<double>& maturities, unsigned threads = 1);

/// Bond prices, discounted prices and money account straight from sampled
/// paths, without storing forward curves. Path p uses the fBm draw
/// sampler.sample(seed, p, ...), so results match simulate_forward on
/// sampler.generate(...) exactly.
struct BondSimulation {
  BondSurface prices;
  BondSurface discounted;
  std::vector<double> account;  // [p][i]
};
BondSimulation simulate_bonds(const ForwardModel& model, const FbmSampler& sampler,
                              const std::vector<double>& maturities, int n_paths,
                              std::uint64_t seed, unsigned threads = 1);

/// CSV with header path_id,t,x,r.
void write_forward_csv(const ForwardSurface& surface, std::ostream& out);
/// CSV with header path_id,t,T,P,Z over t <= T.
void write_bond_csv(const BondSurface& bonds, const BondSurface& discounted, std::ostream& out);

}  // namespace fhjm

#endif  // FHJM_HJM_SIM_HPP_
