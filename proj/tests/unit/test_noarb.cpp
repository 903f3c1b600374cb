#include <doctest.h>

#include <cmath>

#include "fhjm/noarb.hpp"

using namespace fhjm;

TEST_CASE("drift identity holds on a small grid") {
  const HurstParam h(0.7);
  const auto r = drift_identity_check(VolatilitySpec({HullWhite{0.5, 0.8}}), h, TimeGrid(1.0, 16), 1.5);
  CHECK(r.points == 17);
  CHECK(r.max_error < 1e-6);
  const auto hl = drift_identity_check(VolatilitySpec({HoLee{1.0}}), h, TimeGrid(1.0, 16), 2.0);
  CHECK(hl.max_error < 1e-12);
}

TEST_CASE("quasi-martingale panel under zero volatility is exact") {
  const TimeGrid tg(1.0, 8);
  const ForwardModel m(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(2.0, 16), InitialCurve::flat(0.03));
  const auto rep = check_quasi_martingale(m, make_cholesky_sampler(tg, HurstParam(0.7)), {{0.5, 1.0}, {1.0, 2.5}}, 3, 1);
  REQUIRE(rep.entries.size() == 2);
  for (const auto& e : rep.entries) {
    CHECK(e.std_error == 0.0);
    CHECK(e.z == 0.0);
    CHECK(e.mc_mean == doctest::Approx(std::exp(-0.03 * e.T)).epsilon(1e-13));
  }
  CHECK(rep.count_exceeding() == 0);
  CHECK_THROWS(check_quasi_martingale(m, make_cholesky_sampler(tg, HurstParam(0.7)), {{0.5, 3.0}}, 3, 1));
  CHECK_THROWS(check_quasi_martingale(m, make_cholesky_sampler(tg, HurstParam(0.7)), {{0.3, 1.0}}, 3, 1));
}

TEST_CASE("streamed and stored panels agree; drift and kernel sides coincide") {
  const HurstParam h(0.75);
  const TimeGrid tg(1.0, 16);
  const ForwardModel m(VolatilitySpec({HoLee{0.02}}), h, tg, MaturityGrid(2.0, 32), InitialCurve::flat(0.03));
  const auto sampler = make_cholesky_sampler(tg, h);
  const std::vector<QmPair> pairs{{0.5, 1.5}, {1.0, 2.0}};
  const auto streamed = check_quasi_martingale(m, sampler, pairs, 50, 9, 2);
  const auto sim = simulate_bonds(m, sampler, {1.5, 2.0}, 50, 9);
  const auto stored = check_quasi_martingale(sim.discounted, m, pairs);
  for (std::size_t q = 0; q < pairs.size(); ++q) {
    CHECK(streamed.entries[q].mc_mean == doctest::Approx(stored.entries[q].mc_mean).epsilon(1e-13));
    CHECK(streamed.entries[q].z == doctest::Approx(stored.entries[q].z).epsilon(1e-9));
    const auto& e = streamed.entries[q];
    CHECK(e.drift_side == doctest::Approx(e.kernel_side).epsilon(1e-10));
    CHECK(e.analytic_expectation == doctest::Approx(e.target).epsilon(1e-10));
  }
  CHECK_THROWS(check_quasi_martingale(sim.discounted, m, {{0.5, 1.0}}));
}

TEST_CASE("oscillation probe on a flat deterministic curve") {
  const double r = 0.04;
  const TimeGrid tg(1.0, 4);
  const ForwardModel m(VolatilitySpec({HoLee{0.0}}), HurstParam(0.7), tg, MaturityGrid(2.0, 8), InitialCurve::flat(r));
  const auto sim = simulate_bonds(m, make_cholesky_sampler(tg, HurstParam(0.7)), {0.5, 1.0}, 2, 1);
  // sup over (t, T) of Z_tau(tau) / Z_t(T) - 1 is exp(r (1 - tau)) - 1
  const auto wide = oscillation_probe(sim.discounted, sim.account, 0.05, {0.0, 0.75, 1.0});
  const auto tight = oscillation_probe(sim.discounted, sim.account, 0.01, {0.0, 0.75, 1.0});
  for (const auto& e : wide.entries) CHECK(e.hits == 2);
  CHECK(tight.entries[0].hits == 0);
  CHECK(tight.entries[1].hits == 0);
  CHECK(tight.entries[2].hits == 2);
  CHECK(tight.entries[2].frequency == 1.0);
  CHECK_THROWS(oscillation_probe(sim.discounted, sim.account, 0.0, {0.0}));

  const auto j = to_json(tight);
  CHECK(j.at("k") == 0.01);
  CHECK(j.at("taus").size() == 3);
}

TEST_CASE("json of an infinite z") {
  QuasiMartingaleReport rep;
  rep.n_paths = 1;
  QmEntry e;
  e.z = -INFINITY;
  rep.entries.push_back(e);
  const auto j = to_json(rep);
  CHECK(j.at("pairs")[0].at("z") == "-inf");
  CHECK(j.at("exceeding_3") == 1);
}
