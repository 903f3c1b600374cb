#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "fhjm/hjm_sim.hpp"
#include "fhjm/numerics.hpp"

using namespace fhjm;

TEST_CASE("initial curves") {
  const auto flat = InitialCurve::flat(0.03);
  CHECK(flat(7.0) == 0.03);
  CHECK(flat.integral(5.0) == doctest::Approx(0.15));
  CHECK(std::isinf(flat.max_x()));

  const auto ns = InitialCurve::nelson_siegel({0.04, -0.02, 0.01, 0.8});
  CHECK(ns(0.0) == doctest::Approx(0.02));
  CHECK(ns.integral(3.0) == doctest::Approx(integrate_adaptive([&](double x) { return ns(x); }, 0, 3)).epsilon(1e-13));
  CHECK_THROWS(InitialCurve::nelson_siegel({0.04, -0.02, 0.01, 0.0}));

  const auto tab = InitialCurve::table({0.0, 1.0, 3.0}, {0.01, 0.03, 0.02});
  CHECK(tab(0.5) == doctest::Approx(0.02));
  CHECK(tab(2.0) == doctest::Approx(0.025));
  CHECK(tab.integral(3.0) == doctest::Approx(0.02 + 0.05));
  CHECK(tab.max_x() == 3.0);
  CHECK_THROWS_AS(tab(3.5), std::out_of_range);
  CHECK_THROWS(InitialCurve::table({0.5, 1.0}, {0.01, 0.02}));
  CHECK_THROWS(InitialCurve::table({0.0, 1.0, 1.0}, {0.01, 0.02, 0.03}));
  CHECK_THROWS(InitialCurve::table({0.0}, {0.01}));
}

TEST_CASE("grid and curve compatibility") {
  const VolatilitySpec spec({HoLee{0.01}});
  CHECK_THROWS(ForwardModel(spec, HurstParam(0.7), TimeGrid(1.0, 10), MaturityGrid(1.0, 15), InitialCurve::flat(0.0)));
  CHECK_THROWS(ForwardModel(spec, HurstParam(0.7), TimeGrid(1.0, 4), MaturityGrid(2.0, 4),
                            InitialCurve::table({0.0, 2.0}, {0.0, 0.0})));
  const ForwardModel m(spec, HurstParam(0.7), TimeGrid(1.0, 4), MaturityGrid(2.0, 4), InitialCurve::flat(0.0));
  CHECK(m.stride() == 2);
}

TEST_CASE("zero volatility transports the initial curve") {
  const auto init = InitialCurve::nelson_siegel({0.04, -0.02, 0.01, 0.8});
  const TimeGrid tg(1.0, 8);
  const ForwardModel m(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(2.0, 8), init);
  const auto paths = generate_cholesky(tg, 1, 2, HurstParam(0.7), 3);
  const auto surf = simulate_forward(m, paths);
  for (int p = 0; p < 2; ++p)
    for (int i = 0; i <= 8; ++i)
      for (int k = 0; k <= 8; ++k) CHECK(surf.at(p, i, k) == doctest::Approx(init(tg.at(i) + 0.25 * k)).epsilon(1e-15));
}

TEST_CASE("Ho-Lee noise is sigma beta_t at every maturity") {
  const HurstParam h(0.75);
  const double sigma = 0.02;
  const TimeGrid tg(1.0, 16);
  const ForwardModel m(VolatilitySpec({HoLee{sigma}}), h, tg, MaturityGrid(2.0, 32), InitialCurve::flat(0.01));
  const auto paths = generate_cholesky(tg, 1, 3, h, 8);
  const auto surf = simulate_forward(m, paths);
  for (int p = 0; p < 3; ++p)
    for (int i = 0; i <= 16; ++i)
      for (int k = 0; k <= 32; k += 5)
        CHECK(std::abs(surf.at(p, i, k) - m.mean_part(i, k) - sigma * paths.value(p, 0, i)) < 1e-15);

  // mean part: r_0 + dt sum_{l<i} S(t_l, x + t_i - t_l)
  const int i = 5, k = 3;
  double hand = 0.01;
  for (int l = 0; l < i; ++l) hand += tg.dt() * drift_holee(sigma, h, tg.at(l), 2.0 * k / 32 + tg.at(i) - tg.at(l));
  CHECK(m.mean_part(i, k) == doctest::Approx(hand).epsilon(1e-14));
}

TEST_CASE("bonds, money account and discounting under a flat deterministic curve") {
  const double r = 0.04;
  const TimeGrid tg(1.0, 4);
  const ForwardModel m(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(2.0, 8), InitialCurve::flat(r));
  const auto paths = generate_cholesky(tg, 1, 1, HurstParam(0.7), 1);
  const auto surf = simulate_forward(m, paths);
  const std::vector<double> mats{0.5, 1.0, 1.9};
  const auto bonds = bond_surface(m, surf, mats);
  const auto acc = money_account(surf);
  const auto z = discounted_surface(bonds, acc);
  for (int i = 0; i <= 4; ++i) {
    const double t = tg.at(i);
    CHECK(acc[i] == doctest::Approx(std::exp(r * t)).epsilon(1e-14));
    for (int mi = 0; mi < 3; ++mi) {
      if (t > mats[mi]) {
        CHECK(std::isnan(bonds.at(0, i, mi)));
        continue;
      }
      CHECK(bonds.at(0, i, mi) == doctest::Approx(std::exp(-r * (mats[mi] - t))).epsilon(1e-14));
      CHECK(z.at(0, i, mi) == doctest::Approx(bonds.at(0, i, mi) / acc[i]).epsilon(1e-15));
    }
  }
  CHECK(bonds.at(0, 2, 0) == 1.0);
  CHECK(bonds.at(0, 4, 1) == 1.0);
  CHECK_THROWS(bond_surface(m, surf, {2.5}));
}

TEST_CASE("streamed bond simulation equals the stored pipeline") {
  const HurstParam h(0.7);
  const TimeGrid tg(1.0, 16);
  const ForwardModel m(VolatilitySpec({HoLee{0.01}, HullWhite{0.02, 0.5}}), h, tg, MaturityGrid(2.0, 32),
                       InitialCurve::nelson_siegel({0.04, -0.02, 0.01, 0.8}));
  const auto sampler = make_cholesky_sampler(tg, h);
  const std::vector<double> mats{0.5, 1.0, 2.0};
  const auto sim = simulate_bonds(m, sampler, mats, 4, 21, 2);
  const auto surf = simulate_forward(m, sampler.generate(2, 4, 21));
  const auto bonds = bond_surface(m, surf, mats);
  const auto acc = money_account(surf);
  const auto z = discounted_surface(bonds, acc);
  for (std::size_t i = 0; i < bonds.values.size(); ++i) {
    if (std::isnan(bonds.values[i])) {
      CHECK(std::isnan(sim.prices.values[i]));
      continue;
    }
    CHECK(sim.prices.values[i] == doctest::Approx(bonds.values[i]).epsilon(1e-14));
    CHECK(sim.discounted.values[i] == doctest::Approx(z.values[i]).epsilon(1e-14));
  }
  for (std::size_t i = 0; i < acc.size(); ++i) CHECK(sim.account[i] == doctest::Approx(acc[i]).epsilon(1e-14));
}

TEST_CASE("closed-form bond formula agrees with integrating the curve") {
  const HurstParam h(0.7);
  const TimeGrid tg(1.0, 64);
  const ForwardModel m(VolatilitySpec({HoLee{0.01}}), h, tg, MaturityGrid(2.0, 128), InitialCurve::flat(0.03));
  const auto paths = generate_cholesky(tg, 1, 5, h, 2);
  const std::vector<double> mats{1.0, 2.0};
  const auto a = bond_surface(m, simulate_forward(m, paths), mats);
  const auto b = closed_form_bond(m, paths, mats);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i)
    if (!std::isnan(a.values[i])) worst = std::max(worst, std::abs(a.values[i] / b.values[i] - 1));
  CHECK(worst < 1e-3);
}

TEST_CASE("CSV headers") {
  const TimeGrid tg(1.0, 2);
  const ForwardModel m(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(1.0, 2), InitialCurve::flat(0.0));
  const auto surf = simulate_forward(m, generate_cholesky(tg, 1, 1, HurstParam(0.7), 1));
  std::ostringstream f, b;
  write_forward_csv(surf, f);
  CHECK(f.str().rfind("path_id,t,x,r\n", 0) == 0);
  const auto bonds = bond_surface(m, surf, {1.0});
  write_bond_csv(bonds, discounted_surface(bonds, money_account(surf)), b);
  CHECK(b.str().rfind("path_id,t,T,P,Z\n", 0) == 0);
  const std::string rows = b.str();
  CHECK(std::count(rows.begin(), rows.end(), '\n') == 4);
}
