#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "fhjm/fbm_engine.hpp"
#include "fhjm/numerics.hpp"

using namespace fhjm;

TEST_CASE("TimeGrid") {
  const TimeGrid g(2.0, 8);
  CHECK(g.dt() == 0.25);
  CHECK(g.size() == 9);
  CHECK(g.index_of(1.5) == 6);
  CHECK_THROWS(g.index_of(0.3));
  CHECK_THROWS(TimeGrid(0.0, 4));
  CHECK_THROWS(TimeGrid(1.0, 0));
}

TEST_CASE("method names") {
  for (auto m : {FbmMethod::kCholesky, FbmMethod::kVolterra, FbmMethod::kPolygonal})
    CHECK(fbm_method_from_string(to_string(m)) == m);
  CHECK_THROWS(fbm_method_from_string("hosking"));
}

TEST_CASE("fbm_covariance") {
  const HurstParam h(0.75);
  CHECK(fbm_covariance(1, 1, h) == doctest::Approx(1.0));
  CHECK(fbm_covariance(0.5, 1, HurstParam(0.6)) ==
        doctest::Approx(0.5 * (std::pow(0.5, 1.2) + 1 - std::pow(0.5, 1.2))));
  const double c = fbm_covariance(0.25, 0.75, h);
  CHECK(c == doctest::Approx(0.5 * (0.125 + std::pow(0.75, 1.5) - std::pow(0.5, 1.5))));
  CHECK(fbm_covariance(0.25, 0.75, h) == fbm_covariance(0.75, 0.25, h));
}

TEST_CASE("Gram matrix: stationary increments and self-similarity") {
  const HurstParam h(0.7);
  const int n = 10;
  const auto g1 = fbm_gram(TimeGrid(1.0, n), h);
  const auto g3 = fbm_gram(TimeGrid(3.0, n), h);
  CHECK((g3 - std::pow(3.0, 1.4) * g1).cwiseAbs().maxCoeff() < 1e-12);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < i; ++j) {
      const double var_inc = g1(i, i) + g1(j, j) - 2 * g1(i, j);
      CHECK(var_inc == doctest::Approx(std::pow((i - j) / double(n), 1.4)).epsilon(1e-10));
    }
}

TEST_CASE("Cholesky sampler reproduces the covariance") {
  const HurstParam h(0.8);
  const TimeGrid grid(1.0, 4);
  const auto s = make_cholesky_sampler(grid, h);
  CHECK(s.jitter() == 0.0);
  CHECK((s.map() * s.map().transpose() - fbm_gram(grid, h)).cwiseAbs().maxCoeff() < 1e-12);

  const int N = 20000;
  const auto paths = s.generate(1, N, 99);
  std::vector<double> b2(N), b4(N), prod(N);
  for (int p = 0; p < N; ++p) {
    b2[p] = paths.value(p, 0, 2);
    b4[p] = paths.value(p, 0, 4);
    prod[p] = b2[p] * b4[p];
    CHECK(paths.value(p, 0, 0) == 0.0);
  }
  const double tol = 4 * std::sqrt(2.0 / N);
  CHECK(std::abs(sample_stats(b4).variance - 1.0) < tol);
  CHECK(std::abs(sample_stats(b2).variance - std::pow(0.5, 1.6)) < tol);
  CHECK(std::abs(sample_stats(prod).mean - fbm_covariance(0.5, 1.0, h)) < tol);
}

TEST_CASE("components are independent") {
  const auto paths = generate_cholesky(TimeGrid(1.0, 2), 2, 20000, HurstParam(0.7), 5);
  std::vector<double> prod(paths.n_paths);
  for (int p = 0; p < paths.n_paths; ++p) prod[p] = paths.value(p, 0, 2) * paths.value(p, 1, 2);
  CHECK(std::abs(sample_stats(prod).mean) < 4 / std::sqrt(20000.0));
}

TEST_CASE("generation is deterministic and independent of thread count") {
  const auto s = make_cholesky_sampler(TimeGrid(1.0, 16), HurstParam(0.65));
  const auto a = s.generate(2, 37, 11, 1);
  const auto b = s.generate(2, 37, 11, 4);
  CHECK(a.samples == b.samples);
  // path p does not depend on how many paths were requested
  const auto c = s.generate(2, 5, 11, 1);
  for (int p = 0; p < 5; ++p)
    for (int j = 0; j < 2; ++j)
      for (int i = 0; i <= 16; ++i) CHECK(c.value(p, j, i) == a.value(p, j, i));
}

TEST_CASE("zero driver gives a zero path") {
  const auto s = make_volterra_sampler(TimeGrid(1.0, 64), HurstParam(0.7));
  std::vector<double> inc(64, 0.0), out(65, 1.0);
  s.apply(inc, 1, out);
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("Volterra weights are causal and near unit variance at t = 1") {
  const TimeGrid grid(1.0, 128);
  const HurstParam h(0.75);
  const auto W = volterra_weights(grid, h, VolterraRule::kSingularNode);
  for (int k = 0; k < 128; ++k)
    for (int j = k + 1; j < 128; ++j) CHECK(W(k, j) == 0.0);
  CHECK(grid.dt() * W.row(127).squaredNorm() == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("polygonal path at factor 1 equals the cell-average Volterra path") {
  const TimeGrid grid(1.0, 64);
  const HurstParam h(0.7);
  const auto drv = BrownianDriver::generate(grid, 1, 3, 17);
  const auto poly = generate_polygonal(drv, h, 1);
  const auto cell = generate_volterra(drv, h, VolterraRule::kCellAverage);
  double err = 0.0;
  for (std::size_t i = 0; i < poly.samples.size(); ++i) err = std::max(err, std::abs(poly.samples[i] - cell.samples[i]));
  CHECK(err < 1e-12);
  CHECK_THROWS(generate_polygonal(drv, h, 5));
}

TEST_CASE("CSV output") {
  const auto paths = generate_cholesky(TimeGrid(1.0, 2), 1, 1, HurstParam(0.7), 1);
  std::ostringstream os;
  write_paths_csv(paths, os);
  const std::string s = os.str();
  CHECK(s.rfind("path_id,component,t,value\n", 0) == 0);
  CHECK(std::count(s.begin(), s.end(), '\n') == 4);
}
