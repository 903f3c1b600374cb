#ifndef FHJM_MARKET_LEDGER_HPP_
#define FHJM_MARKET_LEDGER_HPP_

#include <iosfwd>
#include <vector>

#include "fhjm/hjm_sim.hpp"

namespace fhjm {

// Bond portfolios as piecewise-constant measures on maturities, with
// proportional transaction costs k. A holding chosen at t_l is held over
// (t_l, t_{l+1}], so mu at t_{l+1} is the position entered at t_l and
// mu_0 = 0.

struct Atom {
  double T = 0.0;
  double w = 0.0;
};

struct DiscreteMeasure {
  std::vector<Atom> atoms;
  double total_variation() const;
};

/// Whether an interval's position is actually taken on a path.
struct GateRule {
  enum class Kind { kAlways, kThreshold };
  Kind kind = Kind::kAlways;
  /// Threshold rule: open iff Z_{t_observe}(T_observe) > level (above) or
  /// < level (!above). t_observe may not be later than the interval start.
  double t_observe = 0.0;
  double T_observe = 0.0;
  double level = 0.0;
  bool above = true;
};

struct Interval {
  double from = 0.0;
  double to = 0.0;
  DiscreteMeasure measure;
  GateRule gate;
};

class Strategy {
 public:
  /// Intervals must be on the grid, ordered and non-overlapping; atoms must be
  /// maturities in `maturities` with to <= T <= T*. Gates that look past the
  /// interval start are rejected.
  Strategy(TimeGrid grid, std::vector<double> maturities, std::vector<Interval> intervals);

  const TimeGrid& grid() const noexcept { return grid_; }
  const std::vector<double>& maturities() const noexcept { return maturities_; }
  const std::vector<Interval>& intervals() const noexcept { return intervals_; }
  bool empty() const noexcept { return intervals_.empty(); }

  /// Positions pos[l][m] held over (t_l, t_{l+1}] on path p of `z`
  /// (z must share the strategy's grid and maturities).
  std::vector<double> positions(const BondSurface& z, int p) const;
  /// Positions with every gate open.
  std::vector<double> nominal_positions() const;

 private:
  struct Resolved {
    int from = 0;
    int to = 0;
    std::vector<double> weights;  // per maturity
    GateRule gate;
    int observe_i = 0;
    int observe_m = 0;
  };

  TimeGrid grid_;
  std::vector<double> maturities_;
  std::vector<Interval> intervals_;
  std::vector<Resolved> resolved_;
};

/// Sum over jumps of ||mu_{t_{l+1}} - mu_{t_l}||_TV with every gate open,
/// starting from mu_0 = 0 and ignoring anything after T*.
double total_variation(const Strategy& s);

/// gains[p][i], cost[p][i] and liq[p][i] are the k = 1 quantities
///   gains = sum_{l<i} <mu_{t_{l+1}}, Z_{t_{l+1}} - Z_{t_l}>
///   cost  = sum_{l<i} <|mu_{t_{l+1}} - mu_{t_l}|, Z_{t_l}>
///   liq   = <|mu_{t_i}|, Z_{t_i}>
/// and V^k = gains - k (cost + liq).
struct LedgerResult {
  TimeGrid grid;
  int n_paths = 0;
  std::vector<double> ks;
  std::vector<double> gains;
  std::vector<double> cost;
  std::vector<double> liq;

  std::size_t offset(int p, int i) const {
    return static_cast<std::size_t>(p) * grid.size() + static_cast<std::size_t>(i);
  }
  double value(int p, int i, double k) const {
    const std::size_t o = offset(p, i);
    return gains[o] - k * (cost[o] + liq[o]);
  }
  /// inf_t V^k_t on path p.
  double worst_value(int p, double k) const;
};

LedgerResult liquidation_value(const Strategy& s, const BondSurface& discounted,
                               const std::vector<double>& ks, unsigned threads = 1);

/// |int G dmu + int mu dG - (G_{T*} mu_{T*} - G_0 mu_0)| on path p of G,
/// for the given positions (layout as Strategy::positions).
double integration_by_parts_residual(const std::vector<double>& positions, const BondSurface& g, int p);

/// Per-k summary: mean and quantiles of V_{T*}, and the number of paths with
/// inf_t V_t < -admissibility_bound.
struct LedgerSummary {
  double k = 0.0;
  double mean = 0.0;
  double q05 = 0.0;
  double q50 = 0.0;
  double q95 = 0.0;
  int inadmissible = 0;
};
std::vector<LedgerSummary> summarize(const LedgerResult& r, double admissibility_bound);

/// CSV with header path_id,t,gains,cost,liquidation,V for one k; cost and
/// liquidation are multiplied by k.
void write_ledger_csv(const LedgerResult& r, double k, std::ostream& out);

}  // namespace fhjm

#endif  // FHJM_MARKET_LEDGER_HPP_
