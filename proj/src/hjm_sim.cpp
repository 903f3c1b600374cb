#include "fhjm/hjm_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "fhjm/numerics.hpp"

namespace fhjm {

InitialCurve InitialCurve::flat(double rate) {
  if (!std::isfinite(rate)) throw std::invalid_argument("initial curve: rate must be finite");
  InitialCurve c;
  c.kind_ = Kind::kFlat;
  c.rate_ = rate;
  return c;
}

InitialCurve InitialCurve::nelson_siegel(std::array<double, 4> y) {
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("initial curve: non-finite Nelson-Siegel parameter");
  if (y[3] == 0.0) throw std::invalid_argument("initial curve: Nelson-Siegel y4 must be nonzero");
  InitialCurve c;
  c.kind_ = Kind::kNelsonSiegel;
  c.ns_ = y;
  return c;
}

InitialCurve InitialCurve::table(std::vector<double> x, std::vector<double> r) {
  if (x.size() < 2 || x.size() != r.size())
    throw std::invalid_argument("initial curve: table needs >= 2 matching (x, r) points");
  if (x.front() != 0.0) throw std::invalid_argument("initial curve: table must start at x = 0");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(r[i]))
      throw std::invalid_argument("initial curve: non-finite table entry");
    if (i > 0 && !(x[i] > x[i - 1]))
      throw std::invalid_argument("initial curve: table x must be strictly increasing");
  }
  InitialCurve c;
  c.kind_ = Kind::kTable;
  c.x_ = std::move(x);
  c.r_ = std::move(r);
  return c;
}

double InitialCurve::max_x() const noexcept {
  return kind_ == Kind::kTable ? x_.back() : std::numeric_limits<double>::infinity();
}

double InitialCurve::operator()(double x) const {
  switch (kind_) {
    case Kind::kFlat:
      return rate_;
    case Kind::kNelsonSiegel: {
      const double e = std::exp(-ns_[3] * x);
      return ns_[0] + ns_[1] * e + ns_[2] * x * e;
    }
    case Kind::kTable: {
      if (x < 0.0 || x > x_.back() * (1.0 + 1e-12))
        throw std::out_of_range("initial curve evaluated beyond its table");
      if (x >= x_.back()) return r_.back();
      const auto it = std::upper_bound(x_.begin(), x_.end(), x);
      const std::size_t i = static_cast<std::size_t>(it - x_.begin()) - 1;
      const double w = (x - x_[i]) / (x_[i + 1] - x_[i]);
      return (1.0 - w) * r_[i] + w * r_[i + 1];
    }
  }
  return 0.0;
}

double InitialCurve::integral(double x) const {
  switch (kind_) {
    case Kind::kFlat:
      return rate_ * x;
    case Kind::kNelsonSiegel: {
      const double b = ns_[3];
      const double e = std::exp(-b * x);
      const double one_minus = -std::expm1(-b * x);
      return ns_[0] * x + ns_[1] * one_minus / b + ns_[2] * (one_minus / (b * b) - x * e / b);
    }
    case Kind::kTable: {
      if (x < 0.0 || x > x_.back() * (1.0 + 1e-12))
        throw std::out_of_range("initial curve integrated beyond its table");
      double acc = 0.0;
      for (std::size_t i = 1; i < x_.size(); ++i) {
        if (x_[i - 1] >= x) break;
        const double hi = std::min(x, x_[i]);
        acc += 0.5 * (r_[i - 1] + (*this)(hi)) * (hi - x_[i - 1]);
      }
      return acc;
    }
  }
  return 0.0;
}

ForwardModel::ForwardModel(VolatilitySpec spec, HurstParam h, TimeGrid tg, MaturityGrid xg,
                           InitialCurve init, SimulationOptions opts)
    : spec_(std::move(spec)), h_(h), tg_(tg), xg_(xg), init_(std::move(init)), opts_(opts) {
  const double ratio = xg_.dx() / tg_.dt();
  const double rq = std::round(ratio);
  if (rq < 1.0 || std::abs(ratio - rq) > 1e-9 * ratio)
    throw std::invalid_argument("grid mismatch: x-grid spacing must be an integer multiple of dt");
  q_ = static_cast<int>(rq);
  const int n = tg_.n_steps;
  const int m_ext = xg_.m_steps * q_ + n;
  lattice_ = static_cast<std::size_t>(m_ext) + 1;
  if (init_.max_x() < tg_.t_star + xg_.x_max - 1e-12)
    throw std::invalid_argument("initial curve must cover [0, T* + x_max]");

  const double dt = tg_.dt();
  const std::size_t rows = tg_.size();
  drift_.assign(rows * lattice_, 0.0);
  if (opts_.drift == DriftSource::kModel && !spec_.is_zero()) {
    if (opts_.prefer_closed_form && spec_.closed_form()) {
      for (int l = 1; l <= n; ++l) {
        const auto terms = closed_form_drift_terms(spec_, h_, tg_.at(l));
        for (int m = 0; m <= m_ext; ++m) {
          double s = 0.0;
          for (const auto& term : terms) s += term.coefficient * term.shape(m * dt);
          drift_[idx(l, m)] = s;
        }
      }
    } else {
      const DriftField f = drift_generic(spec_, h_, tg_, MaturityGrid(m_ext * dt, m_ext), opts_.drift_options);
      drift_ = f.values;
      extrapolations_ += f.extrapolations;
    }
  }

  const int d = spec_.dims();
  vol_.assign(static_cast<std::size_t>(d) * drift_.size(), 0.0);
  for (int j = 0; j < d; ++j)
    for (int l = 0; l <= n; ++l)
      for (int m = 0; m <= m_ext; ++m) {
        const double t = tg_.at(l);
        const double x = m * dt;
        if (outside_table(spec_, j, t, x)) ++extrapolations_;
        vol_[static_cast<std::size_t>(j) * drift_.size() + idx(l, m)] =
            eval_vol(spec_, j, t, x, Extrapolation::kFlat);
      }

  det_.assign(rows * xg_.size(), 0.0);
  for (int i = 0; i <= n; ++i)
    for (int k = 0; k <= xg_.m_steps; ++k) {
      double acc = 0.0;
      for (int l = 0; l < i; ++l) acc += drift_[idx(l, k * q_ + i - l)];
      det_[static_cast<std::size_t>(i) * xg_.size() + k] = init_(tg_.at(i) + xg_.at(k)) + dt * acc;
    }
}

void ForwardModel::row(std::span<const double> increments, int i, int k_max,
                       std::span<double> out) const {
  const int n = tg_.n_steps;
  if (i < 0 || i > n || k_max < 0 || k_max > xg_.m_steps)
    throw std::out_of_range("ForwardModel::row: index out of range");
  if (increments.size() != static_cast<std::size_t>(dims()) * n || out.size() < static_cast<std::size_t>(k_max) + 1)
    throw std::invalid_argument("ForwardModel::row: size mismatch");
  for (int k = 0; k <= k_max; ++k) out[k] = mean_part(i, k);
  for (int j = 0; j < dims(); ++j) {
    const double* v = vol_.data() + static_cast<std::size_t>(j) * drift_.size();
    for (int l = 0; l < i; ++l) {
      const double db = increments[static_cast<std::size_t>(j) * n + l];
      if (db == 0.0) continue;
      const double* base = v + idx(l, i - l);
      for (int k = 0; k <= k_max; ++k) out[k] += base[static_cast<std::size_t>(k) * q_] * db;
    }
  }
}

void ForwardModel::short_rates(std::span<const double> increments, std::span<double> out) const {
  const int n = tg_.n_steps;
  if (increments.size() != static_cast<std::size_t>(dims()) * n || out.size() != tg_.size())
    throw std::invalid_argument("ForwardModel::short_rates: size mismatch");
  for (int i = 0; i <= n; ++i) {
    double r = mean_part(i, 0);
    for (int j = 0; j < dims(); ++j) {
      const double* v = vol_.data() + static_cast<std::size_t>(j) * drift_.size();
      for (int l = 0; l < i; ++l) r += v[idx(l, i - l)] * increments[static_cast<std::size_t>(j) * n + l];
    }
    out[i] = r;
  }
}

int ForwardModel::bond_nodes(int i, double T) const {
  const double len = T - tg_.at(i);
  if (len <= 0.0) return 1;
  if (len > xg_.x_max * (1.0 + 1e-12))
    throw std::out_of_range("bond maturity beyond the x-grid: T - t exceeds x_max");
  const double cells = len / xg_.dx();
  const double whole = std::floor(cells + 1e-9);
  const int k = static_cast<int>(whole);
  if (std::abs(cells - whole) <= 1e-9) return k + 1;
  return std::min(k + 2, static_cast<int>(xg_.size()));
}

double ForwardModel::log_bond_integral(std::span<const double> row, int i, double T) const {
  const double len = T - tg_.at(i);
  if (len <= 0.0) return 0.0;
  const int nodes = bond_nodes(i, T);
  const double dx = xg_.dx();
  const double cells = len / dx;
  const int whole = static_cast<int>(std::floor(cells + 1e-9));
  double acc = 0.0;
  for (int k = 0; k < std::min(whole, nodes - 1); ++k) acc += 0.5 * (row[k] + row[k + 1]) * dx;
  const double rest = len - whole * dx;
  if (nodes > whole + 1 && rest > 0.0) {
    const double w = rest / dx;
    const double r_end = (1.0 - w) * row[whole] + w * row[whole + 1];
    acc += 0.5 * (row[whole] + r_end) * rest;
  }
  return acc;
}

double ForwardModel::drift_integral(int l, double T) const {
  const double dt = tg_.dt();
  const double len = T - tg_.at(l);
  if (len <= 0.0) return 0.0;
  const double cells = len / dt;
  const int whole = static_cast<int>(std::floor(cells + 1e-9));
  if (static_cast<std::size_t>(whole) + 1 > lattice_)
    throw std::out_of_range("drift_integral: maturity beyond the drift lattice");
  double acc = 0.0;
  for (int m = 0; m < whole; ++m) acc += 0.5 * (drift_[idx(l, m)] + drift_[idx(l, m + 1)]) * dt;
  const double rest = len - whole * dt;
  if (rest > 1e-12 * dt && static_cast<std::size_t>(whole) + 1 < lattice_) {
    const double w = rest / dt;
    const double end = (1.0 - w) * drift_[idx(l, whole)] + w * drift_[idx(l, whole + 1)];
    acc += 0.5 * (drift_[idx(l, whole)] + end) * rest;
  }
  return acc;
}

std::vector<double> path_increments(const FbmPathSet& paths, int p) {
  const int n = paths.grid.n_steps;
  std::vector<double> inc(static_cast<std::size_t>(paths.dims) * n);
  for (int j = 0; j < paths.dims; ++j) {
    const auto b = paths.path(p, j);
    for (int l = 0; l < n; ++l) inc[static_cast<std::size_t>(j) * n + l] = b[l + 1] - b[l];
  }
  return inc;
}

namespace {

void check_paths(const ForwardModel& model, const FbmPathSet& paths) {
  if (paths.grid.n_steps != model.t_grid().n_steps ||
      std::abs(paths.grid.t_star - model.t_grid().t_star) > 1e-12 * model.t_grid().t_star)
    throw std::invalid_argument("grid mismatch: fBm paths and model use different time grids");
  if (paths.dims != model.dims())
    throw std::invalid_argument("fBm paths have a different number of components than the model");
}

}  // namespace

ForwardSurface simulate_forward(const ForwardModel& model, const FbmPathSet& paths,
                                unsigned threads) {
  check_paths(model, paths);
  ForwardSurface s;
  s.t_grid = model.t_grid();
  s.x_grid = model.x_grid();
  s.n_paths = paths.n_paths;
  s.r.assign(static_cast<std::size_t>(paths.n_paths) * s.t_grid.size() * s.x_grid.size(), 0.0);
  const int m = s.x_grid.m_steps;
  parallel_for(static_cast<std::size_t>(paths.n_paths), threads, [&](std::size_t p) {
    const auto inc = path_increments(paths, static_cast<int>(p));
    for (int i = 0; i <= s.t_grid.n_steps; ++i)
      model.row(inc, i, m, std::span<double>(s.r).subspan(s.offset(static_cast<int>(p), i), s.x_grid.size()));
  });
  return s;
}

namespace {

BondSurface empty_bonds(const TimeGrid& tg, const std::vector<double>& maturities, int n_paths) {
  BondSurface b;
  b.t_grid = tg;
  b.maturities = maturities;
  b.n_paths = n_paths;
  b.values.assign(static_cast<std::size_t>(n_paths) * tg.size() * maturities.size(),
                  std::numeric_limits<double>::quiet_NaN());
  return b;
}

bool matured(const TimeGrid& tg, int i, double T) { return tg.at(i) > T + 1e-12 * tg.dt(); }

}  // namespace

BondSurface bond_surface(const ForwardModel& model, const ForwardSurface& surface,
                         const std::vector<double>& maturities) {
  const auto& tg = surface.t_grid;
  for (double T : maturities) {
    if (!(T > 0.0) || T > surface.x_grid.x_max * (1.0 + 1e-12))
      throw std::out_of_range("bond maturity outside (0, x_max]");
  }
  BondSurface b = empty_bonds(tg, maturities, surface.n_paths);
  for (int p = 0; p < surface.n_paths; ++p)
    for (int i = 0; i <= tg.n_steps; ++i)
      for (std::size_t m = 0; m < maturities.size(); ++m) {
        if (matured(tg, i, maturities[m])) continue;
        b.at(p, i, static_cast<int>(m)) =
            std::exp(-model.log_bond_integral(surface.row(p, i), i, maturities[m]));
      }
  return b;
}

std::vector<double> money_account(const ForwardSurface& surface) {
  const auto& tg = surface.t_grid;
  std::vector<double> acc(static_cast<std::size_t>(surface.n_paths) * tg.size());
  for (int p = 0; p < surface.n_paths; ++p) {
    double integral = 0.0;
    acc[static_cast<std::size_t>(p) * tg.size()] = 1.0;
    for (int i = 1; i <= tg.n_steps; ++i) {
      integral += 0.5 * (surface.at(p, i - 1, 0) + surface.at(p, i, 0)) * tg.dt();
      acc[static_cast<std::size_t>(p) * tg.size() + i] = std::exp(integral);
    }
  }
  return acc;
}

BondSurface discounted_surface(const BondSurface& bonds, const std::vector<double>& account) {
  if (account.size() != static_cast<std::size_t>(bonds.n_paths) * bonds.t_grid.size())
    throw std::invalid_argument("discounted_surface: account does not match the bond surface");
  BondSurface z = bonds;
  z.discounted = true;
  for (int p = 0; p < bonds.n_paths; ++p)
    for (int i = 0; i <= bonds.t_grid.n_steps; ++i)
      for (std::size_t m = 0; m < bonds.maturities.size(); ++m)
        z.at(p, i, static_cast<int>(m)) /= account[static_cast<std::size_t>(p) * bonds.t_grid.size() + i];
  return z;
}

BondSurface closed_form_bond(const ForwardModel& model, const FbmPathSet& paths,
                             const std::vector<double>& maturities, unsigned threads) {
  check_paths(model, paths);
  const auto& tg = model.t_grid();
  const int n = tg.n_steps;
  const double dt = tg.dt();
  const int d = model.dims();
  BondSurface b = empty_bonds(tg, maturities, paths.n_paths);
  // Path-independent pieces: I_S(t_l, T) and I_j(t_l, T).
  std::vector<std::vector<double>> drift_int(maturities.size(), std::vector<double>(tg.size()));
  std::vector<std::vector<double>> vol_int(maturities.size(),
                                           std::vector<double>(static_cast<std::size_t>(d) * tg.size()));
  for (std::size_t m = 0; m < maturities.size(); ++m)
    for (int l = 0; l <= n; ++l) {
      if (matured(tg, l, maturities[m])) continue;
      drift_int[m][l] = model.drift_integral(l, maturities[m]);
      for (int j = 0; j < d; ++j)
        vol_int[m][static_cast<std::size_t>(j) * tg.size() + l] =
            i_sigma(model.spec(), j, tg.at(l), maturities[m], Extrapolation::kFlat);
    }
  parallel_for(static_cast<std::size_t>(paths.n_paths), threads, [&](std::size_t pp) {
    const int p = static_cast<int>(pp);
    const auto inc = path_increments(paths, p);
    std::vector<double> r0(tg.size());
    model.short_rates(inc, r0);
    for (std::size_t m = 0; m < maturities.size(); ++m) {
      const double T = maturities[m];
      double log_p = -model.initial_curve().integral(T);
      b.at(p, 0, static_cast<int>(m)) = std::exp(log_p);
      for (int i = 1; i <= n; ++i) {
        if (matured(tg, i, T)) break;
        const int l = i - 1;
        log_p += 0.5 * dt * ((r0[l] - drift_int[m][l]) + (r0[i] - drift_int[m][i]));
        for (int j = 0; j < d; ++j)
          log_p -= vol_int[m][static_cast<std::size_t>(j) * tg.size() + l] *
                   inc[static_cast<std::size_t>(j) * n + l];
        b.at(p, i, static_cast<int>(m)) = std::exp(log_p);
      }
    }
  });
  return b;
}

BondSimulation simulate_bonds(const ForwardModel& model, const FbmSampler& sampler,
                              const std::vector<double>& maturities, int n_paths,
                              std::uint64_t seed, unsigned threads) {
  const auto& tg = model.t_grid();
  if (sampler.grid().n_steps != tg.n_steps)
    throw std::invalid_argument("grid mismatch: sampler and model use different time grids");
  if (n_paths < 1) throw std::invalid_argument("simulate_bonds: n_paths must be >= 1");
  for (double T : maturities)
    if (!(T > 0.0) || T > model.x_grid().x_max * (1.0 + 1e-12))
      throw std::out_of_range("bond maturity outside (0, x_max]");
  const int n = tg.n_steps;
  const int d = model.dims();
  BondSimulation out;
  out.prices = empty_bonds(tg, maturities, n_paths);
  out.discounted = out.prices;
  out.discounted.discounted = true;
  out.account.assign(static_cast<std::size_t>(n_paths) * tg.size(), 1.0);
  // Nodes needed per row.
  std::vector<int> k_need(tg.size(), 0);
  for (int i = 0; i <= n; ++i)
    for (double T : maturities)
      if (!matured(tg, i, T)) k_need[i] = std::max(k_need[i], model.bond_nodes(i, T));
  parallel_for(static_cast<std::size_t>(n_paths), threads, [&](std::size_t pp) {
    const int p = static_cast<int>(pp);
    std::vector<double> beta(static_cast<std::size_t>(d) * tg.size());
    sampler.sample(seed, pp, d, beta);
    std::vector<double> inc(static_cast<std::size_t>(d) * n);
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < n; ++l)
        inc[static_cast<std::size_t>(j) * n + l] =
            beta[static_cast<std::size_t>(j) * tg.size() + l + 1] - beta[static_cast<std::size_t>(j) * tg.size() + l];
    std::vector<double> r0(tg.size());
    model.short_rates(inc, r0);
    double integral = 0.0;
    std::vector<double> row(model.x_grid().size());
    for (int i = 0; i <= n; ++i) {
      if (i > 0) integral += 0.5 * (r0[i - 1] + r0[i]) * tg.dt();
      const double acc = std::exp(integral);
      out.account[static_cast<std::size_t>(p) * tg.size() + i] = acc;
      if (k_need[i] == 0) continue;
      model.row(inc, i, k_need[i] - 1, row);
      for (std::size_t m = 0; m < maturities.size(); ++m) {
        if (matured(tg, i, maturities[m])) continue;
        const double price = std::exp(-model.log_bond_integral(row, i, maturities[m]));
        out.prices.at(p, i, static_cast<int>(m)) = price;
        out.discounted.at(p, i, static_cast<int>(m)) = price / acc;
      }
    }
  });
  return out;
}

void write_forward_csv(const ForwardSurface& surface, std::ostream& out) {
  out << "path_id,t,x,r\n";
  for (int p = 0; p < surface.n_paths; ++p)
    for (int i = 0; i <= surface.t_grid.n_steps; ++i)
      for (int k = 0; k <= surface.x_grid.m_steps; ++k)
        out << p << ',' << format_number(surface.t_grid.at(i)) << ','
            << format_number(surface.x_grid.at(k)) << ',' << format_number(surface.at(p, i, k)) << '\n';
}

void write_bond_csv(const BondSurface& bonds, const BondSurface& discounted, std::ostream& out) {
  if (bonds.values.size() != discounted.values.size())
    throw std::invalid_argument("write_bond_csv: surfaces differ in shape");
  out << "path_id,t,T,P,Z\n";
  for (int p = 0; p < bonds.n_paths; ++p)
    for (int i = 0; i <= bonds.t_grid.n_steps; ++i)
      for (std::size_t m = 0; m < bonds.maturities.size(); ++m) {
        const double v = bonds.at(p, i, static_cast<int>(m));
        if (std::isnan(v)) continue;
        out << p << ',' << format_number(bonds.t_grid.at(i)) << ','
            << format_number(bonds.maturities[m]) << ',' << format_number(v) << ','
            << format_number(discounted.at(p, i, static_cast<int>(m))) << '\n';
      }
}

}  // namespace fhjm
