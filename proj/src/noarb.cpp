#include "fhjm/noarb.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "fhjm/numerics.hpp"

namespace fhjm {

DriftIdentityResult drift_identity_check(const VolatilitySpec& spec, HurstParam h,
                                         const TimeGrid& tg, double T, const DriftOptions& opts,
                                         int y_cells) {
  if (y_cells < 1) throw std::invalid_argument("drift_identity_check: y_cells must be >= 1");
  std::vector<int> rows;
  for (int i = 0; i <= tg.n_steps && tg.at(i) <= T; ++i) rows.push_back(i);
  std::vector<double> err(rows.size(), 0.0);
  parallel_for(rows.size(), opts.threads, [&](std::size_t r) {
    const double t = tg.at(rows[r]);
    if (t == 0.0) return;
    const double len = T - t;
    const auto tw = trapezoid_weights(static_cast<std::size_t>(y_cells), len / y_cells);
    DriftOptions single = opts;
    single.threads = 1;
    std::vector<double> ys(static_cast<std::size_t>(y_cells) + 1);
    for (int k = 0; k <= y_cells; ++k) ys[static_cast<std::size_t>(k)] = len * k / y_cells;
    const auto s = drift_row(spec, h, t, ys, single);
    double lhs = 0.0;
    if (len > 0.0)
      for (int k = 0; k <= y_cells; ++k) lhs += tw[static_cast<std::size_t>(k)] * s[static_cast<std::size_t>(k)];
    err[r] = std::abs(lhs - expectation_kernel(spec, h, t, T, single));
  });
  DriftIdentityResult out;
  out.points = static_cast<int>(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    if (err[r] > out.max_error) {
      out.max_error = err[r];
      out.t_at_max = tg.at(rows[r]);
    }
  return out;
}

int QuasiMartingaleReport::count_exceeding(double z_threshold) const {
  return static_cast<int>(std::count_if(entries.begin(), entries.end(), [&](const QmEntry& e) {
    return std::abs(e.z) > z_threshold;
  }));
}

namespace {

void fill_analytic(const ForwardModel& model, QmEntry& e) {
  const auto& spec = model.spec();
  const HurstParam h = model.hurst();
  e.target = std::exp(-model.initial_curve().integral(e.T));
  e.kernel_side = e.t > 0.0 ? log_expectation(spec, h, e.t, e.T) : 0.0;
  if (model.options().drift == DriftSource::kZero || spec.is_zero() || e.t == 0.0) {
    e.drift_side = 0.0;
  } else {
    e.drift_side = integrate_graded(
        [&](double s) { return drift_maturity_integral(spec, h, s, e.T, model.options().drift_options); },
        e.t);
  }
  e.analytic_expectation = e.target * std::exp(e.kernel_side - e.drift_side);
}

void finish(QmEntry& e, std::span<const double> values) {
  const SampleStats st = sample_stats(values);
  e.mc_mean = st.mean;
  e.std_error = st.std_error;
  const double diff = e.mc_mean - e.target;
  // a constant sample still leaves a rounding-level standard error
  if (e.std_error > 1e-13 * std::abs(e.mc_mean))
    e.z = diff / e.std_error;
  else if (std::abs(diff) <= 1e-9 * std::abs(e.target))
    e.z = 0.0;  // deterministic and on target
  else
    e.z = std::copysign(std::numeric_limits<double>::infinity(), diff);
}

void check_pairs(const ForwardModel& model, const std::vector<QmPair>& pairs) {
  for (const auto& p : pairs) {
    if (p.t < 0.0 || p.T < p.t) throw std::invalid_argument("quasi-martingale pair needs 0 <= t <= T");
    model.t_grid().index_of(p.t);
    if (p.T - p.t > model.x_grid().x_max * (1.0 + 1e-12))
      throw std::out_of_range("quasi-martingale pair: T - t exceeds x_max");
  }
}

}  // namespace

QuasiMartingaleReport check_quasi_martingale(const ForwardModel& model, const FbmSampler& sampler,
                                             const std::vector<QmPair>& pairs, int n_paths,
                                             std::uint64_t seed, unsigned threads) {
  if (n_paths < 1) throw std::invalid_argument("check_quasi_martingale: n_paths must be >= 1");
  if (sampler.grid().n_steps != model.t_grid().n_steps)
    throw std::invalid_argument("grid mismatch: sampler and model use different time grids");
  check_pairs(model, pairs);
  const auto& tg = model.t_grid();
  const int n = tg.n_steps;
  const int d = model.dims();
  // Rows to build and the number of x-nodes each needs.
  std::map<int, int> rows;
  std::vector<int> pair_row(pairs.size());
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    const int i = tg.index_of(pairs[q].t);
    pair_row[q] = i;
    rows[i] = std::max(rows[i], model.bond_nodes(i, pairs[q].T));
  }
  std::vector<double> values(pairs.size() * static_cast<std::size_t>(n_paths));
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t p) {
    std::vector<double> beta(static_cast<std::size_t>(d) * tg.size());
    sampler.sample(seed, p, d, beta);
    std::vector<double> inc(static_cast<std::size_t>(d) * n);
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < n; ++l)
        inc[static_cast<std::size_t>(j) * n + l] = beta[static_cast<std::size_t>(j) * tg.size() + l + 1] -
                                                   beta[static_cast<std::size_t>(j) * tg.size() + l];
    std::vector<double> r0(tg.size());
    model.short_rates(inc, r0);
    std::vector<double> log_acc(tg.size(), 0.0);
    for (int i = 1; i <= n; ++i) log_acc[i] = log_acc[i - 1] + 0.5 * (r0[i - 1] + r0[i]) * tg.dt();
    std::vector<double> row(model.x_grid().size());
    for (const auto& [i, nodes] : rows) {
      model.row(inc, i, nodes - 1, row);
      for (std::size_t q = 0; q < pairs.size(); ++q)
        if (pair_row[q] == i)
          values[q * n_paths + p] = std::exp(-model.log_bond_integral(row, i, pairs[q].T) - log_acc[i]);
    }
  });
  QuasiMartingaleReport rep;
  rep.n_paths = n_paths;
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    QmEntry e;
    e.t = pairs[q].t;
    e.T = pairs[q].T;
    fill_analytic(model, e);
    finish(e, std::span<const double>(values).subspan(q * n_paths, static_cast<std::size_t>(n_paths)));
    rep.entries.push_back(e);
  }
  return rep;
}

QuasiMartingaleReport check_quasi_martingale(const BondSurface& discounted, const ForwardModel& model,
                                             const std::vector<QmPair>& pairs) {
  const auto& tg = discounted.t_grid;
  QuasiMartingaleReport rep;
  rep.n_paths = discounted.n_paths;
  for (const auto& pr : pairs) {
    const int i = tg.index_of(pr.t);
    const auto it = std::find_if(discounted.maturities.begin(), discounted.maturities.end(),
                                 [&](double m) { return std::abs(m - pr.T) <= 1e-12 * std::max(1.0, m); });
    if (it == discounted.maturities.end())
      throw std::invalid_argument("quasi-martingale pair maturity is not on the bond surface");
    const int m = static_cast<int>(it - discounted.maturities.begin());
    std::vector<double> v(static_cast<std::size_t>(discounted.n_paths));
    for (int p = 0; p < discounted.n_paths; ++p) v[static_cast<std::size_t>(p)] = discounted.at(p, i, m);
    QmEntry e;
    e.t = pr.t;
    e.T = pr.T;
    fill_analytic(model, e);
    finish(e, v);
    rep.entries.push_back(e);
  }
  return rep;
}

OscillationReport oscillation_probe(const BondSurface& discounted, const std::vector<double>& account,
                                    double k, const std::vector<double>& taus) {
  if (!(k > 0.0)) throw std::invalid_argument("oscillation_probe: k must be > 0");
  const auto& tg = discounted.t_grid;
  if (account.size() != static_cast<std::size_t>(discounted.n_paths) * tg.size())
    throw std::invalid_argument("oscillation_probe: account does not match the surface");
  OscillationReport rep;
  rep.k = k;
  rep.n_paths = discounted.n_paths;
  for (double tau : taus) {
    const int a = tg.index_of(tau);
    int hits = 0;
    for (int p = 0; p < discounted.n_paths; ++p) {
      const double z_tau = 1.0 / account[static_cast<std::size_t>(p) * tg.size() + a];
      double sup = 0.0;
      for (int i = a; i <= tg.n_steps; ++i)
        for (std::size_t m = 0; m < discounted.maturities.size(); ++m) {
          const double T = discounted.maturities[m];
          if (T > tg.t_star * (1.0 + 1e-12) || tg.at(i) > T + 1e-12) continue;
          sup = std::max(sup, std::abs(z_tau / discounted.at(p, i, static_cast<int>(m)) - 1.0));
        }
      if (sup < k) ++hits;
    }
    rep.entries.push_back({tau, hits, discounted.n_paths > 0 ? static_cast<double>(hits) / discounted.n_paths : 0.0});
  }
  return rep;
}

nlohmann::json to_json(const DriftIdentityResult& r) {
  return {{"max_error", r.max_error}, {"t_at_max", r.t_at_max}, {"points", r.points}};
}

nlohmann::json to_json(const QuasiMartingaleReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : r.entries) {
    rows.push_back({{"t", e.t},
                    {"T", e.T},
                    {"target", e.target},
                    {"mc_mean", e.mc_mean},
                    {"std_error", e.std_error},
                    {"z", std::isfinite(e.z) ? nlohmann::json(e.z) : nlohmann::json(e.z > 0 ? "inf" : "-inf")},
                    {"drift_side", e.drift_side},
                    {"kernel_side", e.kernel_side},
                    {"analytic_expectation", e.analytic_expectation}});
  }
  return {{"n_paths", r.n_paths}, {"exceeding_3", r.count_exceeding(3.0)}, {"pairs", rows}};
}

nlohmann::json to_json(const OscillationReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& e : r.entries) rows.push_back({{"tau", e.tau}, {"hits", e.hits}, {"frequency", e.frequency}});
  return {{"k", r.k}, {"n_paths", r.n_paths}, {"taus", rows}};
}

}  // namespace fhjm
