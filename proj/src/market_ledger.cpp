#include "fhjm/market_ledger.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "fhjm/numerics.hpp"

namespace fhjm {

double DiscreteMeasure::total_variation() const {
  // Atoms at the same maturity are merged first.
  std::vector<Atom> a = atoms;
  std::sort(a.begin(), a.end(), [](const Atom& x, const Atom& y) { return x.T < y.T; });
  double tv = 0.0;
  for (std::size_t i = 0; i < a.size();) {
    double w = 0.0;
    std::size_t j = i;
    for (; j < a.size() && a[j].T == a[i].T; ++j) w += a[j].w;
    tv += std::abs(w);
    i = j;
  }
  return tv;
}

namespace {

int maturity_index(const std::vector<double>& maturities, double T) {
  for (std::size_t m = 0; m < maturities.size(); ++m)
    if (std::abs(maturities[m] - T) <= 1e-12 * std::max(1.0, T)) return static_cast<int>(m);
  throw std::invalid_argument("strategy atom maturity " + std::to_string(T) + " is not a traded bond");
}

}  // namespace

Strategy::Strategy(TimeGrid grid, std::vector<double> maturities, std::vector<Interval> intervals)
    : grid_(grid), maturities_(std::move(maturities)), intervals_(std::move(intervals)) {
  int last_to = 0;
  const double slack = 1e-12 * grid_.t_star;
  for (const auto& iv : intervals_) {
    Resolved r;
    r.from = grid_.index_of(iv.from);
    r.to = grid_.index_of(iv.to);
    if (r.from >= r.to) throw std::invalid_argument("strategy interval needs from < to");
    if (r.from < last_to) throw std::invalid_argument("strategy intervals must be ordered and disjoint");
    last_to = r.to;
    r.weights.assign(maturities_.size(), 0.0);
    for (const auto& a : iv.measure.atoms) {
      if (!std::isfinite(a.w)) throw std::invalid_argument("strategy weight must be finite");
      if (a.T < iv.to - slack || a.T > grid_.t_star + slack)
        throw std::invalid_argument("strategy atom maturity must lie in [to, T*]");
      r.weights[static_cast<std::size_t>(maturity_index(maturities_, a.T))] += a.w;
    }
    r.gate = iv.gate;
    if (iv.gate.kind == GateRule::Kind::kThreshold) {
      r.observe_i = grid_.index_of(iv.gate.t_observe);
      if (r.observe_i > r.from)
        throw std::invalid_argument("gate rule observes the market after the interval starts");
      r.observe_m = maturity_index(maturities_, iv.gate.T_observe);
      if (iv.gate.T_observe < iv.gate.t_observe - slack)
        throw std::invalid_argument("gate rule observes a bond that has already matured");
      if (!std::isfinite(iv.gate.level)) throw std::invalid_argument("gate level must be finite");
    }
    resolved_.push_back(std::move(r));
  }
}

std::vector<double> Strategy::nominal_positions() const {
  const std::size_t nm = maturities_.size();
  std::vector<double> pos(static_cast<std::size_t>(grid_.n_steps) * nm, 0.0);
  for (const auto& r : resolved_)
    for (int l = r.from; l < r.to; ++l)
      for (std::size_t m = 0; m < nm; ++m) pos[static_cast<std::size_t>(l) * nm + m] = r.weights[m];
  return pos;
}

std::vector<double> Strategy::positions(const BondSurface& z, int p) const {
  if (z.t_grid.n_steps != grid_.n_steps || z.maturities.size() != maturities_.size())
    throw std::invalid_argument("strategy and surface use different grids");
  const std::size_t nm = maturities_.size();
  std::vector<double> pos(static_cast<std::size_t>(grid_.n_steps) * nm, 0.0);
  for (const auto& r : resolved_) {
    bool open = true;
    if (r.gate.kind == GateRule::Kind::kThreshold) {
      const double seen = z.at(p, r.observe_i, r.observe_m);
      open = r.gate.above ? seen > r.gate.level : seen < r.gate.level;
    }
    if (!open) continue;
    for (int l = r.from; l < r.to; ++l)
      for (std::size_t m = 0; m < nm; ++m) pos[static_cast<std::size_t>(l) * nm + m] = r.weights[m];
  }
  return pos;
}

double total_variation(const Strategy& s) {
  const auto pos = s.nominal_positions();
  const std::size_t nm = s.maturities().size();
  double tv = 0.0;
  for (int l = 0; l < s.grid().n_steps; ++l)
    for (std::size_t m = 0; m < nm; ++m) {
      const double prev = l > 0 ? pos[static_cast<std::size_t>(l - 1) * nm + m] : 0.0;
      tv += std::abs(pos[static_cast<std::size_t>(l) * nm + m] - prev);
    }
  return tv;
}

double LedgerResult::worst_value(int p, double k) const {
  double worst = value(p, 0, k);
  for (int i = 1; i <= grid.n_steps; ++i) worst = std::min(worst, value(p, i, k));
  return worst;
}

namespace {

// <w, Z_{t_i}> skipping zero weights (Z is NaN for matured bonds).
double pair(const double* w, const BondSurface& z, int p, int i, bool absolute) {
  double acc = 0.0;
  for (std::size_t m = 0; m < z.maturities.size(); ++m) {
    if (w[m] == 0.0) continue;
    acc += (absolute ? std::abs(w[m]) : w[m]) * z.at(p, i, static_cast<int>(m));
  }
  return acc;
}

}  // namespace

LedgerResult liquidation_value(const Strategy& s, const BondSurface& discounted,
                               const std::vector<double>& ks, unsigned threads) {
  for (double k : ks)
    if (!(k >= 0.0) || !std::isfinite(k)) throw std::invalid_argument("cost rate k must be >= 0");
  const auto& tg = discounted.t_grid;
  if (tg.n_steps != s.grid().n_steps) throw std::invalid_argument("strategy and surface use different grids");
  const std::size_t nm = discounted.maturities.size();
  LedgerResult r;
  r.grid = tg;
  r.n_paths = discounted.n_paths;
  r.ks = ks;
  const std::size_t total = static_cast<std::size_t>(discounted.n_paths) * tg.size();
  r.gains.assign(total, 0.0);
  r.cost.assign(total, 0.0);
  r.liq.assign(total, 0.0);
  const std::vector<double> zero(nm, 0.0);
  parallel_for(static_cast<std::size_t>(discounted.n_paths), threads, [&](std::size_t pp) {
    const int p = static_cast<int>(pp);
    const auto pos = s.positions(discounted, p);
    std::vector<double> diff(nm);
    double gains = 0.0;
    double cost = 0.0;
    for (int i = 1; i <= tg.n_steps; ++i) {
      const int l = i - 1;
      const double* cur = pos.data() + static_cast<std::size_t>(l) * nm;
      const double* prev = l > 0 ? pos.data() + static_cast<std::size_t>(l - 1) * nm : zero.data();
      for (std::size_t m = 0; m < nm; ++m) diff[m] = cur[m] - prev[m];
      cost += pair(diff.data(), discounted, p, l, true);
      gains += pair(cur, discounted, p, i, false) - pair(cur, discounted, p, l, false);
      const std::size_t o = r.offset(p, i);
      r.gains[o] = gains;
      r.cost[o] = cost;
      r.liq[o] = pair(cur, discounted, p, i, true);
    }
  });
  return r;
}

double integration_by_parts_residual(const std::vector<double>& positions, const BondSurface& g, int p) {
  const auto& tg = g.t_grid;
  const std::size_t nm = g.maturities.size();
  if (positions.size() != static_cast<std::size_t>(tg.n_steps) * nm)
    throw std::invalid_argument("integration_by_parts_residual: positions do not match the surface");
  const std::vector<double> zero(nm, 0.0);
  std::vector<double> diff(nm);
  double g_dmu = 0.0;
  double mu_dg = 0.0;
  for (int l = 0; l < tg.n_steps; ++l) {
    const double* cur = positions.data() + static_cast<std::size_t>(l) * nm;
    const double* prev = l > 0 ? positions.data() + static_cast<std::size_t>(l - 1) * nm : zero.data();
    for (std::size_t m = 0; m < nm; ++m) diff[m] = cur[m] - prev[m];
    g_dmu += pair(diff.data(), g, p, l, false);
    mu_dg += pair(cur, g, p, l + 1, false) - pair(cur, g, p, l, false);
  }
  const double* last = positions.data() + static_cast<std::size_t>(tg.n_steps - 1) * nm;
  const double boundary = pair(last, g, p, tg.n_steps, false);  // mu_0 = 0
  return std::abs(g_dmu + mu_dg - boundary);
}

namespace {

double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

}  // namespace

std::vector<LedgerSummary> summarize(const LedgerResult& r, double admissibility_bound) {
  std::vector<LedgerSummary> out;
  for (double k : r.ks) {
    LedgerSummary s;
    s.k = k;
    std::vector<double> final_v(static_cast<std::size_t>(r.n_paths));
    for (int p = 0; p < r.n_paths; ++p) {
      final_v[static_cast<std::size_t>(p)] = r.value(p, r.grid.n_steps, k);
      if (r.worst_value(p, k) < -admissibility_bound) ++s.inadmissible;
    }
    s.mean = sample_stats(final_v).mean;
    s.q05 = quantile(final_v, 0.05);
    s.q50 = quantile(final_v, 0.50);
    s.q95 = quantile(final_v, 0.95);
    out.push_back(s);
  }
  return out;
}

void write_ledger_csv(const LedgerResult& r, double k, std::ostream& out) {
  out << "path_id,t,gains,cost,liquidation,V\n";
  for (int p = 0; p < r.n_paths; ++p)
    for (int i = 0; i <= r.grid.n_steps; ++i) {
      const std::size_t o = r.offset(p, i);
      out << p << ',' << format_number(r.grid.at(i)) << ',' << format_number(r.gains[o]) << ','
          << format_number(k * r.cost[o]) << ',' << format_number(k * r.liq[o]) << ','
          << format_number(r.value(p, i, k)) << '\n';
    }
}

}  // namespace fhjm
