#include "fhjm/vol_models.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "fhjm/drift_engine.hpp"
#include "fhjm/numerics.hpp"

namespace fhjm {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void check_axis(const std::vector<double>& a, const char* name) {
  if (a.empty()) throw std::invalid_argument(std::string("tabulated vol: empty ") + name + " grid");
  for (std::size_t i = 1; i < a.size(); ++i)
    if (!(a[i] > a[i - 1]))
      throw std::invalid_argument(std::string("tabulated vol: ") + name +
                                  " grid must be strictly increasing");
}

void validate(const VolFactor& f) {
  std::visit(Overloaded{
                 [](const HoLee& v) {
                   if (!(v.sigma >= 0.0) || !std::isfinite(v.sigma))
                     throw std::invalid_argument("Ho-Lee sigma must be finite and >= 0");
                 },
                 [](const HullWhite& v) {
                   if (!(v.sigma >= 0.0) || !std::isfinite(v.sigma))
                     throw std::invalid_argument("Hull-White sigma must be finite and >= 0");
                   if (!(v.alpha > 0.0) || !std::isfinite(v.alpha))
                     throw std::invalid_argument("Hull-White alpha must be > 0");
                 },
                 [](const Tabulated& v) {
                   check_axis(v.t, "t");
                   check_axis(v.x, "x");
                   if (v.values.size() != v.t.size() * v.x.size())
                     throw std::invalid_argument("tabulated vol: values must be |t| x |x|");
                   for (double z : v.values)
                     if (!std::isfinite(z))
                       throw std::invalid_argument("tabulated vol: non-finite entry");
                 },
             },
             f);
}

// Locates q in axis a: index i and weight w with q ~ (1-w) a[i] + w a[i+1].
std::pair<std::size_t, double> bracket(const std::vector<double>& a, double q) {
  if (a.size() == 1) return {0, 0.0};
  if (q <= a.front()) return {0, 0.0};
  if (q >= a.back()) return {a.size() - 2, 1.0};
  const auto it = std::upper_bound(a.begin(), a.end(), q);
  const std::size_t i = static_cast<std::size_t>(it - a.begin()) - 1;
  return {i, (q - a[i]) / (a[i + 1] - a[i])};
}

bool outside(const Tabulated& v, double t, double x) {
  constexpr double kSlack = 1e-12;
  return t < v.t.front() - kSlack || t > v.t.back() + kSlack || x < v.x.front() - kSlack ||
         x > v.x.back() + kSlack;
}

double table_value(const Tabulated& v, double t, double x) {
  const auto [i, wt] = bracket(v.t, t);
  const auto [k, wx] = bracket(v.x, x);
  const std::size_t nx = v.x.size();
  auto at = [&](std::size_t a, std::size_t b) {
    a = std::min(a, v.t.size() - 1);
    b = std::min(b, nx - 1);
    return v.values[a * nx + b];
  };
  const double lo = (1.0 - wx) * at(i, k) + wx * at(i, k + 1);
  const double hi = (1.0 - wx) * at(i + 1, k) + wx * at(i + 1, k + 1);
  return (1.0 - wt) * lo + wt * hi;
}

}  // namespace

VolatilitySpec::VolatilitySpec(std::vector<VolFactor> factors) : factors_(std::move(factors)) {
  if (factors_.empty()) throw std::invalid_argument("volatility spec needs at least one factor");
  for (const auto& f : factors_) validate(f);
}

bool VolatilitySpec::closed_form() const {
  return std::none_of(factors_.begin(), factors_.end(),
                      [](const VolFactor& f) { return std::holds_alternative<Tabulated>(f); });
}

bool VolatilitySpec::time_homogeneous() const {
  return std::all_of(factors_.begin(), factors_.end(), [](const VolFactor& f) {
    const auto* tab = std::get_if<Tabulated>(&f);
    return tab == nullptr || tab->t.size() == 1;
  });
}

bool VolatilitySpec::is_zero() const {
  return std::all_of(factors_.begin(), factors_.end(), [](const VolFactor& f) {
    return std::visit(Overloaded{
                          [](const HoLee& v) { return v.sigma == 0.0; },
                          [](const HullWhite& v) { return v.sigma == 0.0; },
                          [](const Tabulated& v) {
                            return std::all_of(v.values.begin(), v.values.end(),
                                               [](double z) { return z == 0.0; });
                          },
                      },
                      f);
  });
}

MaturityGrid::MaturityGrid(double x, int m) : x_max(x), m_steps(m) {
  if (!(x > 0.0)) throw std::invalid_argument("MaturityGrid: x_max must be positive");
  if (m < 1) throw std::invalid_argument("MaturityGrid: need at least one step");
}

bool outside_table(const VolatilitySpec& spec, int j, double t, double x) {
  const auto* tab = std::get_if<Tabulated>(&spec.factor(j));
  return tab != nullptr && outside(*tab, t, x);
}

double eval_vol(const VolatilitySpec& spec, int j, double t, double x, Extrapolation policy) {
  return std::visit(Overloaded{
                        [](const HoLee& v) { return v.sigma; },
                        [x](const HullWhite& v) { return v.sigma * std::exp(-v.alpha * x); },
                        [&](const Tabulated& v) {
                          if (policy == Extrapolation::kReject && outside(v, t, x))
                            throw std::out_of_range("tabulated volatility queried outside its grid");
                          return table_value(v, t, x);
                        },
                    },
                    spec.factor(j));
}

double i_sigma(const VolatilitySpec& spec, int j, double s, double T, Extrapolation policy) {
  if (s > T) throw std::invalid_argument("i_sigma: need s <= T");
  const double len = T - s;
  if (len == 0.0) return 0.0;
  return std::visit(
      Overloaded{
          [len](const HoLee& v) { return v.sigma * len; },
          [len](const HullWhite& v) { return v.sigma / v.alpha * -std::expm1(-v.alpha * len); },
          [&](const Tabulated& v) {
            if (policy == Extrapolation::kReject && (outside(v, s, 0.0) || outside(v, s, len)))
              throw std::out_of_range("tabulated volatility queried outside its grid");
            // Piecewise linear in x between table nodes: trapezoid on the nodes is exact.
            std::vector<double> nodes{0.0};
            for (double xk : v.x)
              if (xk > 0.0 && xk < len) nodes.push_back(xk);
            nodes.push_back(len);
            double acc = 0.0;
            double prev = table_value(v, s, nodes[0]);
            for (std::size_t i = 1; i < nodes.size(); ++i) {
              const double cur = table_value(v, s, nodes[i]);
              acc += 0.5 * (prev + cur) * (nodes[i] - nodes[i - 1]);
              prev = cur;
            }
            return acc;
          },
      },
      spec.factor(j));
}

double i_sigma_numeric(const VolatilitySpec& spec, int j, double s, double T,
                       Extrapolation policy) {
  if (s > T) throw std::invalid_argument("i_sigma_numeric: need s <= T");
  const auto* tab = std::get_if<Tabulated>(&spec.factor(j));
  auto f = [&](double x) { return eval_vol(spec, j, s, x, policy); };
  if (tab == nullptr) return integrate_adaptive(f, 0.0, T - s, 1e-14);
  // Kinks at the table nodes: integrate piece by piece.
  std::vector<double> cuts{0.0};
  for (double xk : tab->x)
    if (xk > 0.0 && xk < T - s) cuts.push_back(xk);
  cuts.push_back(T - s);
  double acc = 0.0;
  for (std::size_t i = 1; i < cuts.size(); ++i) acc += integrate_adaptive(f, cuts[i - 1], cuts[i]);
  return acc;
}

bool RegularityReport::all_finite() const {
  return std::all_of(items.begin(), items.end(), [](const RegularityItem& i) { return i.finite; });
}

namespace {

// Norms of the volatility operator and drift on [0, T] at one refinement level.
struct RegularityLevel {
  double integrability = 0.0;
  double continuity = 0.0;
  double growth_four = 0.0;
  double growth_three = 0.0;
};

double gram_form(const std::vector<double>& c, const std::vector<double>& edges, HurstParam h) {
  double acc = 0.0;
  const std::size_t n = c.size();
  for (std::size_t a = 0; a < n; ++a)
    for (std::size_t b = 0; b < n; ++b)
      acc += c[a] * c[b] * phi_cell_integral(edges[a], edges[a + 1], edges[b], edges[b + 1], h);
  return acc;
}

RegularityLevel regularity_level(const VolatilitySpec& spec, HurstParam h, double T, int n) {
  constexpr auto kFlat = Extrapolation::kFlat;
  constexpr double kGamma = 0.25;
  const int d = spec.dims();
  const double step = T / n;
  std::vector<double> edges(static_cast<std::size_t>(n) + 1);
  std::vector<double> mids(static_cast<std::size_t>(n));
  for (int i = 0; i <= n; ++i) edges[static_cast<std::size_t>(i)] = i * step;
  for (int i = 0; i < n; ++i) mids[static_cast<std::size_t>(i)] = (i + 0.5) * step;

  // |sigma_u(x)| in R^d.
  auto vol_norm = [&](double u, double x) {
    double s2 = 0.0;
    for (int j = 0; j < d; ++j) {
      const double v = eval_vol(spec, j, u, x, kFlat);
      s2 += v * v;
    }
    return std::sqrt(s2);
  };
  // Operator norm bound sup_x |sigma_u(shift + x)| over x in [0, T].
  auto op_norm = [&](double u, double shift) {
    double m = 0.0;
    for (int k = 0; k <= n; ++k) m = std::max(m, vol_norm(u, shift + edges[static_cast<std::size_t>(k)]));
    return m;
  };

  RegularityLevel out;
  DriftOptions opts;
  opts.theta_cells = 128;
  for (double u : mids) {
    double drift_sup = 0.0;
    for (int k = 0; k <= n; ++k)
      drift_sup = std::max(drift_sup, std::abs(drift_at(spec, h, u, edges[static_cast<std::size_t>(k)], opts)));
    const double sn = op_norm(u, 0.0);
    out.integrability += (drift_sup + sn * sn) * step;
  }

  std::vector<double> c27(mids.size()), c28(mids.size());
  for (std::size_t a = 0; a < mids.size(); ++a) {
    const double lo = edges[a];
    const double hi = edges[a + 1];
    const double avg_pow = (std::pow(hi, 1.0 - kGamma) - std::pow(lo, 1.0 - kGamma)) /
                           ((1.0 - kGamma) * (hi - lo));
    c27[a] = avg_pow * op_norm(mids[a], mids[a]);
    double acc = 0.0;
    for (double s : mids) acc += vol_norm(mids[a], s) * step;
    c28[a] = acc;
  }
  out.continuity = gram_form(c27, edges, h);
  out.growth_four = gram_form(c28, edges, h);

  std::vector<double> b(mids.size());
  for (double t : mids) {
    for (std::size_t a = 0; a < mids.size(); ++a) b[a] = vol_norm(mids[a], t);
    out.growth_three += gram_form(b, edges, h) * step;
  }
  return out;
}

}  // namespace

RegularityReport validate_regularity(const VolatilitySpec& spec, HurstParam h, double T, int cells) {
  if (!(T > 0.0)) throw std::invalid_argument("validate_regularity: T must be positive");
  if (cells < 2) throw std::invalid_argument("validate_regularity: need at least 2 cells");
  const RegularityLevel coarse = regularity_level(spec, h, T, cells);
  const RegularityLevel fine = regularity_level(spec, h, T, 2 * cells);
  auto item = [](std::string name, double c, double f) {
    RegularityItem it{std::move(name), c, f, false};
    const double scale = std::max(std::abs(f), 1e-300);
    it.finite = std::isfinite(c) && std::isfinite(f) && (std::abs(f - c) <= 0.1 * scale || f == c);
    return it;
  };
  RegularityReport r;
  r.items[0] = item("drift_and_vol_integrability", coarse.integrability, fine.integrability);
  r.items[1] = item("weighted_continuity", coarse.continuity, fine.continuity);
  r.items[2] = item("bond_growth_four_fold", coarse.growth_four, fine.growth_four);
  r.items[3] = item("bond_growth_three_fold", coarse.growth_three, fine.growth_three);
  return r;
}

}  // namespace fhjm
