#include "fhjm/consistency_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

#include "fhjm/numerics.hpp"

namespace fhjm {

ManifoldFamily nelson_siegel_family() {
  ManifoldFamily fam;
  fam.name = "nelson-siegel";
  fam.q = 4;
  fam.f = [](double x, const std::vector<double>& y) {
    const double e = std::exp(-y[3] * x);
    return y[0] + y[1] * e + y[2] * x * e;
  };
  fam.grad_y = [](double x, const std::vector<double>& y) {
    const double e = std::exp(-y[3] * x);
    return std::vector<double>{1.0, e, x * e, -x * (y[1] + y[2] * x) * e};
  };
  fam.d_dx = [](double x, const std::vector<double>& y) {
    const double e = std::exp(-y[3] * x);
    return (y[2] - y[3] * y[1]) * e - y[3] * y[2] * x * e;
  };
  fam.in_domain = [](const std::vector<double>& y) {
    return y.size() == 4 && y[3] != 0.0 && std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
  };
  return fam;
}

ManifoldFamily nelson_siegel_fixed_decay(double alpha) {
  if (alpha == 0.0 || !std::isfinite(alpha)) throw std::invalid_argument("fixed decay must be finite and nonzero");
  ManifoldFamily fam;
  fam.name = "nelson-siegel-fixed-decay";
  fam.q = 3;
  fam.f = [alpha](double x, const std::vector<double>& y) {
    const double e = std::exp(-alpha * x);
    return y[0] + y[1] * e + y[2] * x * e;
  };
  fam.grad_y = [alpha](double x, const std::vector<double>&) {
    const double e = std::exp(-alpha * x);
    return std::vector<double>{1.0, e, x * e};
  };
  fam.d_dx = [alpha](double x, const std::vector<double>& y) {
    const double e = std::exp(-alpha * x);
    return (y[2] - alpha * y[1]) * e - alpha * y[2] * x * e;
  };
  fam.in_domain = [](const std::vector<double>& y) {
    return y.size() == 3 && std::all_of(y.begin(), y.end(), [](double v) { return std::isfinite(v); });
  };
  return fam;
}

MembershipGrid membership_grid(int nodes, double x_max) {
  if (nodes < 2 || !(x_max > 0.0)) throw std::invalid_argument("membership grid needs >= 2 nodes on (0, x_max]");
  MembershipGrid g;
  const double h = x_max / (nodes - 1);
  g.w = trapezoid_weights(static_cast<std::size_t>(nodes - 1), h);
  g.x.resize(static_cast<std::size_t>(nodes));
  for (int k = 0; k < nodes; ++k) {
    g.x[static_cast<std::size_t>(k)] = h * k;
    g.w[static_cast<std::size_t>(k)] *= std::exp(-g.x[static_cast<std::size_t>(k)] / 4.0);
  }
  return g;
}

ResidualResult tangent_residual(const ManifoldFamily& fam, const std::vector<double>& y,
                                const std::vector<double>& g, const MembershipGrid& grid) {
  if (!fam.in_domain(y)) throw std::invalid_argument("tangent_residual: parameter outside the family domain");
  if (g.size() != grid.x.size()) throw std::invalid_argument("tangent_residual: curve and grid differ in size");
  const int m = static_cast<int>(grid.x.size());
  Eigen::MatrixXd b(m, fam.q);
  Eigen::VectorXd rhs(m);
  for (int k = 0; k < m; ++k) {
    if (!std::isfinite(g[static_cast<std::size_t>(k)])) throw std::invalid_argument("tangent_residual: non-finite curve");
    const double sw = std::sqrt(grid.w[static_cast<std::size_t>(k)]);
    const auto d = fam.grad_y(grid.x[static_cast<std::size_t>(k)], y);
    for (int i = 0; i < fam.q; ++i) b(k, i) = sw * d[static_cast<std::size_t>(i)];
    rhs[k] = sw * g[static_cast<std::size_t>(k)];
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(b, Eigen::ComputeThinU | Eigen::ComputeThinV);
  svd.setThreshold(1e-10);
  ResidualResult r;
  r.rank = static_cast<int>(svd.rank());
  const Eigen::VectorXd c = svd.solve(rhs);
  const double norm = rhs.norm();
  r.residual = (rhs - b * c).norm() / std::max(norm, 1e-300);
  if (norm == 0.0) r.residual = 0.0;
  return r;
}

std::string to_string(Outcome o) {
  switch (o) {
    case Outcome::kPass:
      return "pass";
    case Outcome::kIndeterminate:
      return "indeterminate";
    case Outcome::kFail:
      return "fail";
  }
  return "unknown";
}

std::string TangencyVerdict::label() const {
  if (consistent) return trivial ? "consistent (trivial)" : "consistent";
  return indeterminate ? "indeterminate" : "inconsistent";
}

std::string NagumoVerdict::label() const {
  if (consistent()) return drift_vol.trivial ? "consistent (trivial)" : "consistent";
  if (!shift.consistent && !shift.indeterminate) return "inconsistent";
  if (!drift_vol.consistent && !drift_vol.indeterminate) return "inconsistent";
  return "indeterminate";
}

namespace {

Outcome classify(double residual, const TangencyTolerance& tol) {
  if (residual <= tol.pass) return Outcome::kPass;
  if (residual <= tol.indeterminate) return Outcome::kIndeterminate;
  return Outcome::kFail;
}

void aggregate(TangencyVerdict& v) {
  v.consistent = true;
  v.indeterminate = false;
  bool failed = false;
  for (const auto& r : v.records) {
    if (r.outcome != Outcome::kPass) v.consistent = false;
    if (r.outcome == Outcome::kFail) failed = true;
  }
  v.indeterminate = !v.consistent && !failed;
}

double uniform01(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

}  // namespace

std::vector<std::vector<double>> latin_hypercube(const std::vector<std::array<double, 2>>& box, int count,
                                                 std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("latin_hypercube: count must be >= 1");
  std::mt19937_64 eng(splitmix64(seed));
  std::vector<std::vector<double>> out(static_cast<std::size_t>(count), std::vector<double>(box.size()));
  for (std::size_t d = 0; d < box.size(); ++d) {
    if (!(box[d][1] >= box[d][0])) throw std::invalid_argument("latin_hypercube: box needs lo <= hi");
    std::vector<int> perm(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) perm[static_cast<std::size_t>(i)] = i;
    for (int i = count - 1; i > 0; --i) {
      const auto j = static_cast<int>(eng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
    }
    for (int i = 0; i < count; ++i) {
      const double u = (perm[static_cast<std::size_t>(i)] + uniform01(eng)) / count;
      out[static_cast<std::size_t>(i)][d] = box[d][0] + u * (box[d][1] - box[d][0]);
    }
  }
  return out;
}

TangencyVerdict check_shift_condition(const ManifoldFamily& fam, const std::vector<std::vector<double>>& ys,
                                      const MembershipGrid& grid, const TangencyTolerance& tol) {
  TangencyVerdict v;
  std::vector<double> g(grid.x.size());
  for (const auto& y : ys) {
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = fam.d_dx(grid.x[k], y);
    const auto res = tangent_residual(fam, y, g, grid);
    v.records.push_back({"shift", 0.0, y, res.residual, res.rank, classify(res.residual, tol)});
  }
  aggregate(v);
  if (!v.consistent) {
    const auto worst = std::max_element(v.records.begin(), v.records.end(),
                                        [](const auto& a, const auto& b) { return a.residual < b.residual; });
    v.witness = Witness{"shift", "", 0.0, worst->y, worst->residual, 0.0};
  }
  return v;
}

TangencyVerdict check_drift_and_vol_condition(const ManifoldFamily& fam, const VolatilitySpec& spec,
                                              HurstParam h, const std::vector<double>& ts,
                                              const std::vector<std::vector<double>>& ys,
                                              const MembershipGrid& grid, const TangencyTolerance& tol,
                                              const DriftOptions& opts) {
  TangencyVerdict v;
  v.trivial = spec.is_zero();
  const int d = spec.dims();
  // Curves depend on t only.
  std::vector<std::vector<double>> drift(ts.size());
  std::vector<std::vector<std::vector<double>>> vols(ts.size());
  for (std::size_t a = 0; a < ts.size(); ++a) {
    if (!(ts[a] > 0.0)) throw std::invalid_argument("drift/vol condition: t-samples must be > 0");
    drift[a] = drift_row(spec, h, ts[a], grid.x, opts);
    for (int j = 0; j < d; ++j) {
      std::vector<double> s(grid.x.size());
      for (std::size_t k = 0; k < s.size(); ++k) s[k] = eval_vol(spec, j, ts[a], grid.x[k], Extrapolation::kFlat);
      vols[a].push_back(std::move(s));
    }
  }
  // Per y: worst volatility residual, to locate the witness sample.
  std::vector<double> vol_worst(ys.size(), 0.0);
  for (std::size_t b = 0; b < ys.size(); ++b)
    for (std::size_t a = 0; a < ts.size(); ++a) {
      const auto rd = tangent_residual(fam, ys[b], drift[a], grid);
      v.records.push_back({"drift", ts[a], ys[b], rd.residual, rd.rank, classify(rd.residual, tol)});
      for (int j = 0; j < d; ++j) {
        const auto rv = tangent_residual(fam, ys[b], vols[a][static_cast<std::size_t>(j)], grid);
        v.records.push_back({"sigma[" + std::to_string(j) + "]", ts[a], ys[b], rv.residual, rv.rank,
                             classify(rv.residual, tol)});
        vol_worst[b] = std::max(vol_worst[b], rv.residual);
      }
    }
  aggregate(v);
  if (v.consistent || ys.empty()) return v;

  const double vol_best = *std::min_element(vol_worst.begin(), vol_worst.end());
  auto near_best = [&](const std::vector<double>& y) {
    for (std::size_t b = 0; b < ys.size(); ++b)
      if (ys[b] == y) return vol_worst[b] <= vol_best + tol.pass;
    return false;
  };
  const TangencyRecord* pick = nullptr;
  for (const auto& r : v.records)
    if (r.vector == "drift" && r.outcome != Outcome::kPass && near_best(r.y) &&
        (pick == nullptr || r.residual > pick->residual))
      pick = &r;
  if (pick == nullptr)
    for (const auto& r : v.records)
      if (r.outcome != Outcome::kPass && near_best(r.y) && (pick == nullptr || r.residual > pick->residual))
        pick = &r;
  if (pick == nullptr)
    for (const auto& r : v.records)
      if (pick == nullptr || r.residual > pick->residual) pick = &r;
  Witness w{pick->vector, "", pick->t, pick->y, pick->residual, 0.0};
  if (pick->vector == "drift" && spec.closed_form()) {
    double worst = -1.0;
    std::vector<double> g(grid.x.size());
    for (const auto& term : closed_form_drift_terms(spec, h, pick->t)) {
      if (term.coefficient == 0.0) continue;
      for (std::size_t k = 0; k < g.size(); ++k) g[k] = term.coefficient * term.shape(grid.x[k]);
      const double r = tangent_residual(fam, pick->y, g, grid).residual;
      if (r > worst) {
        worst = r;
        w.term = term.name;
        w.term_residual = r;
      }
    }
  }
  v.witness = w;
  return v;
}

NagumoVerdict nagumo_full_check(const ManifoldFamily& fam, const VolatilitySpec& spec, HurstParam h,
                                const std::vector<double>& ts, const std::vector<std::vector<double>>& ys,
                                const MembershipGrid& grid, const TangencyTolerance& tol,
                                const DriftOptions& opts) {
  NagumoVerdict v;
  v.shift = check_shift_condition(fam, ys, grid, tol);
  v.drift_vol = check_drift_and_vol_condition(fam, spec, h, ts, ys, grid, tol, opts);
  return v;
}

ForwardSurface controlled_path(const ForwardModel& model, const std::vector<SampledFunction>& u) {
  const auto& tg = model.t_grid();
  const int n = tg.n_steps;
  if (static_cast<int>(u.size()) != model.dims())
    throw std::invalid_argument("controlled_path: need one control per factor");
  const FracOrder order(model.hurst() - 0.5);
  std::vector<double> inc(static_cast<std::size_t>(model.dims()) * n, 0.0);
  for (int j = 0; j < model.dims(); ++j) {
    const auto& uj = u[static_cast<std::size_t>(j)];
    if (uj.size() != tg.size() || !uj.is_uniform_from_zero() || std::abs(uj.grid.back() - tg.t_star) > 1e-9 * tg.t_star)
      throw std::invalid_argument("controlled_path: control must be sampled on the model time grid");
    for (double v : uj.values)
      if (!std::isfinite(v)) throw std::invalid_argument("controlled_path: non-finite control");
    const SampledFunction iu = frac_integral(uj, order);
    for (int l = 0; l < n; ++l) inc[static_cast<std::size_t>(j) * n + l] = iu.values[static_cast<std::size_t>(l)] * tg.dt();
  }
  ForwardSurface s;
  s.t_grid = tg;
  s.x_grid = model.x_grid();
  s.n_paths = 1;
  s.r.assign(tg.size() * s.x_grid.size(), 0.0);
  for (int i = 0; i <= n; ++i)
    model.row(inc, i, s.x_grid.m_steps, std::span<double>(s.r).subspan(s.offset(0, i), s.x_grid.size()));
  return s;
}

FamilyFit distance_to_family(const ManifoldFamily& fam, const std::vector<double>& g,
                             const MembershipGrid& grid, const std::vector<std::vector<double>>& starts) {
  if (g.size() != grid.x.size()) throw std::invalid_argument("distance_to_family: curve and grid differ in size");
  if (starts.empty()) throw std::invalid_argument("distance_to_family: need at least one start");
  const int m = static_cast<int>(grid.x.size());
  auto residuals = [&](const std::vector<double>& y, Eigen::VectorXd& r, Eigen::MatrixXd* jac) {
    r.resize(m);
    if (jac != nullptr) jac->resize(m, fam.q);
    for (int k = 0; k < m; ++k) {
      const double sw = std::sqrt(grid.w[static_cast<std::size_t>(k)]);
      const double x = grid.x[static_cast<std::size_t>(k)];
      r[k] = sw * (fam.f(x, y) - g[static_cast<std::size_t>(k)]);
      if (jac != nullptr) {
        const auto d = fam.grad_y(x, y);
        for (int i = 0; i < fam.q; ++i) (*jac)(k, i) = sw * d[static_cast<std::size_t>(i)];
      }
    }
  };
  FamilyFit best;
  best.distance = std::numeric_limits<double>::infinity();
  for (const auto& start : starts) {
    if (!fam.in_domain(start)) throw std::invalid_argument("distance_to_family: start outside the domain");
    std::vector<double> y = start;
    Eigen::VectorXd r;
    Eigen::MatrixXd jac;
    residuals(y, r, &jac);
    double cost = r.squaredNorm();
    double lambda = 1e-3;
    for (int it = 0; it < 500 && lambda < 1e12; ++it) {
      const Eigen::MatrixXd jtj = jac.transpose() * jac;
      Eigen::MatrixXd lhs = jtj;
      for (int i = 0; i < fam.q; ++i) lhs(i, i) += lambda * (jtj(i, i) + 1e-12);
      const Eigen::VectorXd step = lhs.ldlt().solve(-jac.transpose() * r);
      std::vector<double> trial = y;
      for (int i = 0; i < fam.q; ++i) trial[static_cast<std::size_t>(i)] += step[i];
      if (!fam.in_domain(trial)) {
        lambda *= 4.0;
        continue;
      }
      Eigen::VectorXd r_trial;
      residuals(trial, r_trial, nullptr);
      const double c_trial = r_trial.squaredNorm();
      if (c_trial < cost) {
        const double gain = cost - c_trial;
        y = trial;
        cost = c_trial;
        residuals(y, r, &jac);
        lambda = std::max(lambda / 3.0, 1e-12);
        if (gain <= 1e-15 * cost + 1e-300) break;
      } else {
        lambda *= 4.0;
      }
    }
    const double dist = std::sqrt(cost);
    if (dist < best.distance) {
      best.distance = dist;
      best.y = y;
    }
  }
  return best;
}

nlohmann::json to_json(const TangencyVerdict& v) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : v.records)
    rows.push_back({{"vector", r.vector}, {"t", r.t}, {"y", r.y}, {"residual", r.residual},
                    {"rank", r.rank}, {"outcome", to_string(r.outcome)}});
  nlohmann::json out = {{"verdict", v.label()}, {"records", rows}};
  if (v.witness) {
    out["witness"] = {{"vector", v.witness->vector}, {"term", v.witness->term}, {"t", v.witness->t},
                      {"y", v.witness->y}, {"residual", v.witness->residual},
                      {"term_residual", v.witness->term_residual}};
  } else {
    out["witness"] = nullptr;
  }
  return out;
}

nlohmann::json to_json(const NagumoVerdict& v) {
  return {{"verdict", v.label()}, {"shift_condition", to_json(v.shift)}, {"drift_and_vol_condition", to_json(v.drift_vol)}};
}

}  // namespace fhjm
