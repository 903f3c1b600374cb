// Concrete input/output pairs for each operation, checked against closed
// forms or independent quadrature.
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fhjm/consistency_lab.hpp"
#include "fhjm/market_ledger.hpp"
#include "fhjm/noarb.hpp"
#include "fhjm/numerics.hpp"

using namespace fhjm;

TEST_CASE("kernel values") {
  const HurstParam h(0.75);
  CHECK(phi_h(0.5, h) == doctest::Approx(0.5303300859).epsilon(1e-10));
  CHECK(phi_cell_integral(0, 1, 0, 1, h) == doctest::Approx(1.0));
  CHECK(phi_cell_integral(0, 1, 1, 2, h) == doctest::Approx(0.5 * (std::pow(2.0, 1.5) - 2)).epsilon(1e-12));
  CHECK(phi_cell_integral(0, 0, 0.3, 0.9, h) == 0.0);
  CHECK(phi_time_integral(0, 1, 1, h) == doctest::Approx(0.75));
  CHECK(phi_time_integral(0, 0, 1, h) == 0.0);
  CHECK(phi_time_integral(0, 0.5, 1, h) == doctest::Approx(0.75 * (1 - std::sqrt(0.5))).epsilon(1e-12));
  // independent oracle for the singular case
  CHECK(phi_time_integral(0, 1, 1, h) ==
        doctest::Approx(integrate_endpoint_singular([&](double u) { return phi_h(u, h); }, 0, 1)).epsilon(1e-9));
}

TEST_CASE("fractional operator values") {
  const int n = 64;
  std::vector<double> one(n + 1, 1.0), zero(n + 1, 0.0), lin(n + 1);
  for (int i = 0; i <= n; ++i) lin[i] = double(i) / n;
  const auto I1 = frac_integral(SampledFunction::uniform(1.0, n, one), FracOrder(0.25));
  CHECK(I1.values.back() == doctest::Approx(1 / std::tgamma(1.25)).epsilon(1e-12));
  CHECK(I1.values.back() == doctest::Approx(1.1032626).epsilon(1e-7));
  const auto Is = frac_integral(SampledFunction::uniform(1.0, n, lin), FracOrder(0.5));
  CHECK(Is.values.back() == doctest::Approx(0.7522528).epsilon(1e-7));
  for (double v : frac_integral(SampledFunction::uniform(1.0, n, zero), FracOrder(0.5)).values) CHECK(v == 0.0);

  const int N = 2048;
  std::vector<double> lin2(N + 1);
  for (int i = 0; i <= N; ++i) lin2[i] = double(i) / N;
  const auto Ds = frac_derivative(SampledFunction::uniform(1.0, N, lin2), FracOrder(0.5));
  CHECK(std::abs(Ds.values.back() - 1.1283792) < 1e-3);
  for (double v : frac_derivative(SampledFunction::uniform(1.0, N, std::vector<double>(N + 1, 0.0)), FracOrder(0.5)).values)
    CHECK(v == 0.0);
}

TEST_CASE("Volterra kernel and its constant") {
  const HurstParam h(0.75);
  for (double s : {0.01, 0.3, 0.9}) {
    CHECK(volterra_kernel(1.0, s, h, 1.0) > 0.0);
    CHECK(volterra_kernel(2.0, s, h, 1.0) > volterra_kernel(1.0, s, h, 1.0));
  }
  for (double hv : {0.6, 0.75, 0.9}) {
    const HurstParam hh(hv);
    const double c = volterra_constant(hh);
    CHECK(c > 0.0);
    const double mass = integrate_endpoint_singular(
        [&](double s) {
          const double k = volterra_kernel(1.0, s, hh, c);
          return k * k;
        },
        0.0, 1.0, 1e-10);
    CHECK(mass == doctest::Approx(1.0).epsilon(1e-4));
  }
  const double lit = std::sqrt(0.75 * 0.5 / std::beta(0.5, 0.25));
  const double c512 = calibrate_ch(h, 512);
  CHECK(std::abs(c512 / lit - 1) < 0.02);
  CHECK(std::abs(calibrate_ch(h, 1024) / c512 - 1) < 0.005);
}

TEST_CASE("covariance value") {
  const HurstParam h(0.75);
  const double c = fbm_covariance(0.25, 0.75, h);
  CHECK(c == doctest::Approx(0.5 * (std::pow(0.25, 1.5) + std::pow(0.75, 1.5) - std::pow(0.5, 1.5))).epsilon(1e-14));
  CHECK(c == doctest::Approx(phi_cell_integral(0, 0.25, 0, 0.75, h)).epsilon(1e-13));
  CHECK(fbm_covariance(0.5, 1.0, HurstParam(0.9)) == doctest::Approx(0.5));
}

TEST_CASE("volatility values") {
  const VolatilitySpec hl({HoLee{0.01}}), hw({HullWhite{0.01, 1.0}});
  CHECK(eval_vol(hl, 0, 3.0, 9.0) == 0.01);
  CHECK(eval_vol(hw, 0, 0.0, 0.0) == 0.01);
  CHECK(eval_vol(hw, 0, 0.0, 1.0) == doctest::Approx(0.0036788).epsilon(1e-5));
  CHECK(i_sigma(VolatilitySpec({HoLee{1.0}}), 0, 0, 2) == doctest::Approx(2.0));
  CHECK(i_sigma(hw, 0, 0.7, 0.7) == 0.0);
  CHECK(i_sigma(VolatilitySpec({HullWhite{1.0, 1.0}}), 0, 0, 1) == doctest::Approx(0.6321206).epsilon(1e-7));
  CHECK(validate_regularity(hl, HurstParam(0.75), 1.0).all_finite());
  CHECK(validate_regularity(hw, HurstParam(0.75), 1.0).all_finite());
}

TEST_CASE("drift values") {
  const HurstParam h(0.75);
  const VolatilitySpec one({HoLee{1.0}});
  CHECK(drift_at(one, h, 1, 0) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(drift_at(one, h, 1, 1) == doctest::Approx(1.75).epsilon(1e-12));
  CHECK(drift_holee(1, h, 1, 0) == doctest::Approx(0.25));
  CHECK(drift_holee(2, h, 1, 0.5) == doctest::Approx(4.0));
  CHECK(drift_at(VolatilitySpec({HoLee{2.0}}), h, 1, 0.5) == doctest::Approx(4.0).epsilon(1e-6));
  // int_0^t theta phi_H(t - theta) dtheta = t^2H / 2
  CHECK(integrate_endpoint_singular([&](double u) { return (1 - u) * phi_h(u, h); }, 0, 1) ==
        doctest::Approx(0.5).epsilon(1e-9));
  for (double x : {0.0, 1.0, 4.0}) CHECK(drift_at(VolatilitySpec({HullWhite{0.3, 0.5}}), h, 0.0, x) == 0.0);

  // J(1) = 0.375 sqrt(pi) erf(1)
  CHECK(hullwhite_j(1.0, h, 1.0) == doctest::Approx(0.375 * std::sqrt(std::numbers::pi) * std::erf(1.0)).epsilon(1e-10));
  CHECK(hullwhite_j(1.0, h, 1.0) == doctest::Approx(0.5601).epsilon(1e-4));
  CHECK(hullwhite_j(1.0, h, 0.0) == 0.0);
  // large mean reversion: both terms decay monotonically in alpha
  double prev = INFINITY;
  for (double a = 5; a <= 80; a *= 1.5) {
    const double v = std::abs(drift_hullwhite(1.0, a, h, 1.0, 1.0));
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("expectation kernel values") {
  const HurstParam h(0.75);
  const VolatilitySpec one({HoLee{1.0}});
  CHECK(expectation_kernel(one, h, 1, 2) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(expectation_kernel(one, h, 0, 2) == 0.0);
  CHECK(log_expectation(one, h, 1, 2) == doctest::Approx(8.0 / 7).epsilon(1e-10));
  CHECK(log_expectation(one, h, 0, 2) == 0.0);
}

TEST_CASE("market price of risk values") {
  const HurstParam h(0.7);
  const VolatilitySpec spec({HoLee{0.5}});
  const TimeGrid tg(1.0, 4);
  const MaturityGrid xg(2.0, 16);
  const auto S = drift_generic(spec, h, tg, xg);
  auto alpha = S;
  for (auto& v : alpha.values) v += 0.2 * 0.5;  // drift + c sigma
  auto m = solve_market_price_of_risk(spec, h, alpha, 0.25);
  CHECK(m.gamma(0) == doctest::Approx(-0.2).epsilon(1e-10));
  CHECK(m.residual < 1e-10);
  alpha = S;
  for (int i = 0; i <= 4; ++i)
    for (int k = 0; k <= 16; ++k) alpha.at(i, k) += xg.at(k);
  CHECK(solve_market_price_of_risk(spec, h, alpha, 0.25).residual > 0.1);
}

TEST_CASE("forward rate moments under Ho-Lee") {
  const HurstParam h(0.7);
  const double sigma = 0.01, r0 = 0.03;
  const TimeGrid tg(1.0, 64);
  const ForwardModel m(VolatilitySpec({HoLee{sigma}}), h, tg, MaturityGrid(1.0, 64), InitialCurve::flat(r0));
  const auto sampler = make_cholesky_sampler(tg, h);
  const int N = 100000;
  std::vector<double> beta(tg.size()), shorts(tg.size()), r_end(N);
  for (int p = 0; p < N; ++p) {
    sampler.sample(5, p, 1, beta);
    std::vector<double> inc(64);
    for (int l = 0; l < 64; ++l) inc[l] = beta[l + 1] - beta[l];
    m.short_rates(inc, shorts);
    r_end[p] = shorts.back();
  }
  // E r_t(0) = r0 + sigma^2 int_0^t int_0^s (2t - s - theta) phi_H(s - theta) dtheta ds
  const double t = 1.0;
  const double inner_int = integrate_graded(
      [&](double s) {
        return integrate_endpoint_singular([&](double u) { return (2 * t - 2 * s + u) * phi_h(u, h); }, 0, s);
      },
      t);
  const double mean_oracle = r0 + sigma * sigma * inner_int;
  const auto st = sample_stats(r_end);
  CHECK(std::abs(st.mean - mean_oracle) < 3 * st.std_error);
  const double var_oracle = sigma * sigma;  // sigma^2 t^2H at t = 1
  CHECK(std::abs(st.variance - var_oracle) < 3 * var_oracle * std::sqrt(2.0 / (N - 1)));
}

TEST_CASE("bond, account and discounted values") {
  const TimeGrid tg(1.0, 8);
  const ForwardModel m(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(2.0, 16), InitialCurve::flat(0.03));
  const auto sim = simulate_bonds(m, make_cholesky_sampler(tg, HurstParam(0.7)), {0.5, 1.0, 2.0}, 2, 1);
  CHECK(sim.prices.at(0, 0, 1) == doctest::Approx(0.9704455).epsilon(1e-7));
  CHECK(sim.account[8] == doctest::Approx(1.0304545).epsilon(1e-7));
  for (int i = 0; i <= 8; ++i) {
    CHECK(sim.discounted.at(1, i, 2) == doctest::Approx(std::exp(-0.06)).epsilon(1e-13));
    if (i > 0) CHECK(sim.account[i] >= sim.account[i - 1]);
    CHECK(sim.prices.at(0, i, 2) < sim.prices.at(0, i, 1) + (tg.at(i) > 1.0 ? INFINITY : 0.0));
  }
  for (int mi = 0; mi < 3; ++mi) CHECK(sim.discounted.at(0, 0, mi) == sim.prices.at(0, 0, mi));

  const ForwardModel zero(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(2.0, 16), InitialCurve::flat(0.0));
  const auto z = simulate_bonds(zero, make_cholesky_sampler(tg, HurstParam(0.7)), {1.0}, 1, 1);
  for (double s : z.account) CHECK(s == 1.0);

  // noisy model: Z > 0 and the closed form is exact at t = 0
  const ForwardModel hl(VolatilitySpec({HoLee{0.05}}), HurstParam(0.7), tg, MaturityGrid(2.0, 16), InitialCurve::flat(0.03));
  const auto paths = generate_cholesky(tg, 1, 4, HurstParam(0.7), 3);
  const auto cf = closed_form_bond(hl, paths, {1.0, 2.0});
  CHECK(cf.at(2, 0, 1) == doctest::Approx(std::exp(-0.06)).epsilon(1e-15));
  const auto s = simulate_bonds(hl, make_cholesky_sampler(tg, HurstParam(0.7)), {1.0, 2.0}, 50, 3);
  for (double v : s.discounted.values)
    if (!std::isnan(v)) CHECK(v > 0.0);
}

TEST_CASE("quasi-martingale values") {
  const HurstParam h(0.7);
  const TimeGrid tg(1.0, 64);
  const ForwardModel m(VolatilitySpec({HoLee{0.01}}), h, tg, MaturityGrid(1.0, 64), InitialCurve::flat(0.03));
  const auto rep = check_quasi_martingale(m, make_cholesky_sampler(tg, h), {{0.0, 1.0}, {0.5, 1.0}}, 100000, 12345);
  CHECK(rep.entries[0].z == 0.0);
  CHECK(rep.entries[0].mc_mean == doctest::Approx(std::exp(-0.03)).epsilon(1e-14));
  CHECK(rep.entries[1].target == doctest::Approx(0.9704455).epsilon(1e-7));
  CHECK(std::abs(rep.entries[1].z) < 3.0);

  const auto hw = drift_identity_check(VolatilitySpec({HullWhite{0.01, 1.0}}), h, TimeGrid(1.0, 512), 1.0);
  CHECK(hw.max_error <= 1e-6);
  const auto hl = drift_identity_check(VolatilitySpec({HoLee{1.0}}), HurstParam(0.75), TimeGrid(2.0, 512), 2.0);
  CHECK(hl.max_error <= 1e-6);
}

TEST_CASE("oscillation values") {
  const HurstParam h(0.7);
  const TimeGrid tg(1.0, 16);
  const ForwardModel m(VolatilitySpec({HoLee{0.01}}), h, tg, MaturityGrid(1.0, 16), InitialCurve::flat(0.03));
  const auto sim = simulate_bonds(m, make_cholesky_sampler(tg, h), {0.25, 0.5, 0.75, 1.0}, 10000, 8);
  CHECK(oscillation_probe(sim.discounted, sim.account, 10.0, {0.0, 0.5}).entries[0].frequency == 1.0);
  CHECK(oscillation_probe(sim.discounted, sim.account, 1e-9, {0.0}).entries[0].frequency == 0.0);
  CHECK(oscillation_probe(sim.discounted, sim.account, 0.05, {0.0}).entries[0].frequency > 0.0);
}

TEST_CASE("ledger values") {
  BondSurface z;
  z.t_grid = TimeGrid(1.0, 4);
  z.maturities = {1.0};
  z.n_paths = 1;
  z.values.assign(5, 1.0);
  const Strategy empty(z.t_grid, z.maturities, {});
  CHECK(total_variation(empty) == 0.0);
  const Strategy two(z.t_grid, z.maturities,
                     {Interval{0.0, 0.5, DiscreteMeasure{{{1.0, 1.0}}}, {}}, Interval{0.5, 1.0, DiscreteMeasure{{{1.0, 2.0}}}, {}}});
  CHECK(total_variation(two) == 2.0);
  const Strategy buy(z.t_grid, z.maturities, {Interval{0.0, 1.0, DiscreteMeasure{{{1.0, 1.0}}}, {}}});
  CHECK(total_variation(buy) == 1.0);
  const auto r = liquidation_value(buy, z, {0.0, 0.03});
  for (int i = 0; i <= 4; ++i) CHECK(r.value(0, i, 0.0) == 0.0);
  CHECK(r.value(0, 4, 0.03) == -2 * 0.03);
  CHECK(integration_by_parts_residual(empty.nominal_positions(), z, 0) == 0.0);
}

TEST_CASE("tangent residual values") {
  const auto fam = nelson_siegel_family();
  const auto grid = membership_grid();
  const std::vector<double> y{0.03, -0.01, 0.005, 1.5};
  std::vector<double> g2(grid.x.size()), gx(grid.x.size()), lin(grid.x.size());
  for (std::size_t k = 0; k < grid.x.size(); ++k) {
    g2[k] = fam.grad_y(grid.x[k], y)[1];
    gx[k] = fam.d_dx(grid.x[k], y);
    lin[k] = grid.x[k];
  }
  CHECK(tangent_residual(fam, y, g2, grid).residual <= 1e-12);
  CHECK(tangent_residual(fam, y, gx, grid).residual <= 1e-10);
  CHECK(tangent_residual(fam, y, lin, grid).residual > 0.1);
}

TEST_CASE("shift condition on toy families") {
  const auto grid = membership_grid(256);
  ManifoldFamily constant{"constant", 1,
                          [](double, const std::vector<double>& y) { return y[0]; },
                          [](double, const std::vector<double>&) { return std::vector<double>{1.0}; },
                          [](double, const std::vector<double>&) { return 0.0; },
                          [](const std::vector<double>&) { return true; }};
  ManifoldFamily wave{"sine", 2,
                      [](double x, const std::vector<double>& y) { return y[0] + y[1] * std::sin(x); },
                      [](double x, const std::vector<double>&) { return std::vector<double>{1.0, std::sin(x)}; },
                      [](double x, const std::vector<double>& y) { return y[1] * std::cos(x); },
                      [](const std::vector<double>&) { return true; }};
  const auto ys = latin_hypercube({{0.0, 1.0}, {0.5, 1.0}}, 5, 1);
  std::vector<std::vector<double>> ys1;
  for (const auto& y : ys) ys1.push_back({y[0]});
  CHECK(check_shift_condition(constant, ys1, grid).consistent);
  const auto v = check_shift_condition(wave, ys, grid);
  CHECK_FALSE(v.consistent);
  CHECK(v.label() == "inconsistent");
}

TEST_CASE("no nontrivial built-in model is Nelson-Siegel consistent") {
  const auto fam = nelson_siegel_family();
  const auto grid = membership_grid(256);
  const auto ys = latin_hypercube({{0.0, 0.06}, {-0.03, 0.03}, {-0.03, 0.03}, {0.5, 3.0}}, 5, 3);
  const HurstParam h(0.7);
  for (const auto& spec : {VolatilitySpec({HoLee{0.01}}), VolatilitySpec({HullWhite{0.01, 1.0}}),
                           VolatilitySpec({HoLee{0.01}, HullWhite{0.02, 0.5}})}) {
    const auto v = nagumo_full_check(fam, spec, h, {0.5, 1.0}, ys, grid);
    CHECK(v.label() == "inconsistent");
  }
  const auto hw = nagumo_full_check(fam, VolatilitySpec({HullWhite{0.01, 1.0}}), h, {0.5, 1.0}, ys, grid);
  REQUIRE(hw.drift_vol.witness);
  CHECK(hw.drift_vol.witness->term == "exp(-2 alpha x)");
}

TEST_CASE("controlled paths leave the family and are affine in the control") {
  const HurstParam h(0.75);
  const TimeGrid tg(1.0, 16);
  const ForwardModel m(VolatilitySpec({HoLee{0.01}}), h, tg, MaturityGrid(10.0, 160),
                       InitialCurve::nelson_siegel({0.04, -0.02, 0.01, 0.8}));
  std::vector<double> a(17), b(17);
  for (int i = 0; i <= 16; ++i) {
    a[i] = std::sin(4.0 * i / 16);
    b[i] = 1.0 - double(i) / 16;
  }
  std::vector<double> ab(17);
  for (int i = 0; i <= 16; ++i) ab[i] = a[i] + b[i];
  const auto p0 = controlled_path(m, {SampledFunction::uniform(1.0, 16, std::vector<double>(17, 0.0))});
  const auto pa = controlled_path(m, {SampledFunction::uniform(1.0, 16, a)});
  const auto pb = controlled_path(m, {SampledFunction::uniform(1.0, 16, b)});
  const auto pab = controlled_path(m, {SampledFunction::uniform(1.0, 16, ab)});
  for (std::size_t i = 0; i < p0.r.size(); ++i)
    CHECK(pab.r[i] - p0.r[i] == doctest::Approx((pa.r[i] - p0.r[i]) + (pb.r[i] - p0.r[i])).epsilon(1e-10).scale(1e-12));

  // distance of the curve at t = 1 from the Nelson-Siegel family
  const auto grid = membership_grid(161, 10.0);
  const auto fam = nelson_siegel_family();
  std::vector<double> g(161);
  for (int k = 0; k <= 160; ++k) g[k] = pb.at(0, 16, k);
  const auto fit = distance_to_family(fam, g, grid, {{0.04, -0.02, 0.01, 0.8}, {0.05, 0.0, 0.0, 1.5}});
  CHECK(fit.distance > 1e-6);
  for (int k = 0; k <= 160; ++k) g[k] = pb.at(0, 0, k);
  CHECK(distance_to_family(fam, g, grid, {{0.04, -0.02, 0.01, 0.8}}).distance < 1e-12);
}
