#include <doctest.h>

#include <cmath>

#include "fhjm/consistency_lab.hpp"

using namespace fhjm;

namespace {
std::vector<double> sample(const MembershipGrid& g, const std::function<double(double)>& f) {
  std::vector<double> v(g.x.size());
  for (std::size_t k = 0; k < v.size(); ++k) v[k] = f(g.x[k]);
  return v;
}
}  // namespace

TEST_CASE("Nelson-Siegel gradients match finite differences") {
  const auto fam = nelson_siegel_family();
  CHECK(fam.q == 4);
  const std::vector<double> y{0.03, -0.01, 0.02, 0.7};
  for (double x : {0.0, 0.5, 4.0}) {
    const auto g = fam.grad_y(x, y);
    for (int i = 0; i < 4; ++i) {
      auto up = y, dn = y;
      const double e = 1e-6;
      up[i] += e;
      dn[i] -= e;
      CHECK(g[i] == doctest::Approx((fam.f(x, up) - fam.f(x, dn)) / (2 * e)).epsilon(1e-7));
    }
    const double e = 1e-6;
    CHECK(fam.d_dx(x + 1e-3, y) == doctest::Approx((fam.f(x + 1e-3 + e, y) - fam.f(x + 1e-3 - e, y)) / (2 * e)).epsilon(1e-7));
  }
  CHECK_FALSE(fam.in_domain({0, 0, 0, 0}));
  const auto fixed = nelson_siegel_fixed_decay(0.7);
  CHECK(fixed.q == 3);
  CHECK(fixed.f(2.0, {0.03, -0.01, 0.02}) == doctest::Approx(fam.f(2.0, y)));
  CHECK_THROWS(nelson_siegel_fixed_decay(0.0));
}

TEST_CASE("membership grid") {
  const auto g = membership_grid(512, 10.0);
  REQUIRE(g.x.size() == 512);
  double sum = 0.0;
  for (double w : g.w) sum += w;
  CHECK(sum == doctest::Approx(4 * (1 - std::exp(-2.5))).epsilon(1e-4));
  CHECK_THROWS(membership_grid(1));
}

TEST_CASE("tangent residual") {
  const auto fam = nelson_siegel_family();
  const auto grid = membership_grid(256);
  const std::vector<double> y{0.03, -0.01, 0.02, 0.7};
  const auto in_span = sample(grid, [&](double x) { return 2.0 - 3.0 * x * std::exp(-0.7 * x); });
  const auto r = tangent_residual(fam, y, in_span, grid);
  CHECK(r.residual < 1e-10);
  CHECK(r.rank == 4);
  const auto out = sample(grid, [](double x) { return x * x; });
  CHECK(tangent_residual(fam, y, out, grid).residual > 1e-3);
  CHECK_THROWS(tangent_residual(fam, {0, 0, 0, 0}, in_span, grid));
}

TEST_CASE("latin hypercube stratifies every coordinate") {
  const int n = 20;
  const auto ys = latin_hypercube({{0.0, 1.0}, {-2.0, 2.0}}, n, 5);
  REQUIRE(ys.size() == n);
  for (int d = 0; d < 2; ++d) {
    const double lo = d == 0 ? 0.0 : -2.0, width = d == 0 ? 1.0 : 4.0;
    std::vector<int> hits(n, 0);
    for (const auto& y : ys) hits[static_cast<int>((y[d] - lo) / width * n)]++;
    for (int h : hits) CHECK(h == 1);
  }
  CHECK(latin_hypercube({{0.0, 1.0}}, 3, 9) == latin_hypercube({{0.0, 1.0}}, 3, 9));
}

TEST_CASE("tangency verdicts") {
  const auto fam = nelson_siegel_family();
  const auto grid = membership_grid(256);
  const auto ys = latin_hypercube({{0.0, 0.06}, {-0.03, 0.03}, {-0.03, 0.03}, {0.5, 3.0}}, 6, 7);
  const auto shift = check_shift_condition(fam, ys, grid);
  CHECK(shift.consistent);
  CHECK(shift.label() == "consistent");

  const HurstParam h(0.75);
  const std::vector<double> ts{0.25, 1.0};
  const auto hl = nagumo_full_check(fam, VolatilitySpec({HoLee{0.01}}), h, ts, ys, grid);
  CHECK_FALSE(hl.consistent());
  CHECK(hl.label() == "inconsistent");
  REQUIRE(hl.drift_vol.witness.has_value());
  CHECK(hl.drift_vol.witness->vector == "drift");
  CHECK(hl.drift_vol.witness->term == "x-linear");

  const auto zero = nagumo_full_check(fam, VolatilitySpec({HoLee{0.0}}), h, ts, ys, grid);
  CHECK(zero.consistent());
  CHECK(zero.drift_vol.trivial);
  CHECK(zero.label() == "consistent (trivial)");
  const auto j = to_json(zero);
  CHECK(j.at("verdict") == "consistent (trivial)");
  CHECK(j.at("drift_and_vol_condition").at("witness").is_null());
}

TEST_CASE("controlled path") {
  const HurstParam h(0.75);
  const TimeGrid tg(1.0, 8);
  const double sigma = 0.02;
  const ForwardModel m(VolatilitySpec({HoLee{sigma}}), h, tg, MaturityGrid(2.0, 16), InitialCurve::flat(0.01));
  const auto zero = controlled_path(m, {SampledFunction::uniform(1.0, 8, std::vector<double>(9, 0.0))});
  for (int i = 0; i <= 8; ++i)
    for (int k = 0; k <= 16; ++k) CHECK(zero.at(0, i, k) == m.mean_part(i, k));

  // constant control c: I^(H-1/2) c = c t^(H-1/2) / Gamma(H + 1/2)
  const double c = 1.5;
  const auto path = controlled_path(m, {SampledFunction::uniform(1.0, 8, std::vector<double>(9, c))});
  for (int i = 0; i <= 8; ++i) {
    double acc = 0.0;
    for (int l = 0; l < i; ++l) acc += tg.dt() * c * std::pow(tg.at(l), 0.25) / std::tgamma(1.25);
    CHECK(path.at(0, i, 5) - m.mean_part(i, 5) == doctest::Approx(sigma * acc).epsilon(1e-12));
  }
  CHECK_THROWS(controlled_path(m, {}));
  CHECK_THROWS(controlled_path(m, {SampledFunction::uniform(1.0, 4, std::vector<double>(5, 0.0))}));
}

TEST_CASE("distance to the family recovers a member") {
  const auto fam = nelson_siegel_family();
  const auto grid = membership_grid(256);
  const std::vector<double> truth{0.04, -0.02, 0.015, 1.3};
  const auto g = sample(grid, [&](double x) { return fam.f(x, truth); });
  const auto fit = distance_to_family(fam, g, grid, {{0.03, 0.0, 0.0, 0.8}, {0.05, -0.01, 0.01, 2.0}});
  CHECK(fit.distance < 1e-9);
  CHECK(fit.y[3] == doctest::Approx(1.3).epsilon(1e-5));
  const auto off = sample(grid, [](double x) { return std::sin(x); });
  CHECK(distance_to_family(fam, off, grid, {{0.0, 0.0, 0.0, 1.0}}).distance > 1e-2);
}
