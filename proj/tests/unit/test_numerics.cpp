#include <doctest.h>

#include <atomic>
#include <cmath>
#include <numeric>
#include <vector>

#include "fhjm/numerics.hpp"

using namespace fhjm;

TEST_CASE("pairwise_sum matches exact sums and is order-stable") {
  std::vector<double> v(1000);
  std::iota(v.begin(), v.end(), 1.0);
  CHECK(pairwise_sum(v) == 500500.0);
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  // 1 + many tiny terms: a naive left fold drops them all
  std::vector<double> w(1 << 16, 1e-16);
  w[0] = 1.0;
  CHECK(pairwise_sum(w) == doctest::Approx(1.0 + (w.size() - 1) * 1e-16).epsilon(1e-15));
}

TEST_CASE("sample_stats on a known sample") {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto s = sample_stats(v);
  CHECK(s.count == 5);
  CHECK(s.mean == doctest::Approx(3.0));
  CHECK(s.variance == doctest::Approx(2.5));
  CHECK(s.std_error == doctest::Approx(std::sqrt(2.5 / 5)));
}

TEST_CASE("quadratures") {
  CHECK(integrate_adaptive([](double x) { return std::exp(x); }, 0, 1) == doctest::Approx(std::exp(1.0) - 1).epsilon(1e-13));
  // int_0^1 x^-1/2 = 2
  CHECK(integrate_endpoint_singular([](double x) { return 1 / std::sqrt(x); }, 0, 1) ==
        doctest::Approx(2.0).epsilon(1e-10));
  // int_0^2 x^0.4 = 2^1.4 / 1.4
  CHECK(integrate_graded([](double x) { return std::pow(x, 0.4); }, 2.0) ==
        doctest::Approx(std::pow(2.0, 1.4) / 1.4).epsilon(1e-12));
  // the dropped piece [0, 2^-47] carries 2^(-47 * 0.3) / 0.3 of int_0^2 x^-0.7
  const double dropped = std::pow(2.0, -47 * 0.3) / 0.3;
  CHECK(integrate_graded([](double x) { return std::pow(x, -0.7); }, 2.0) ==
        doctest::Approx(std::pow(2.0, 0.3) / 0.3 - dropped).epsilon(1e-10));
}

TEST_CASE("trapezoid weights") {
  const auto w = trapezoid_weights(4, 0.5);
  REQUIRE(w.size() == 5);
  CHECK(w.front() == 0.25);
  CHECK(w[2] == 0.5);
  CHECK(w.back() == 0.25);
}

TEST_CASE("parallel_for visits each index once") {
  for (unsigned threads : {1u, 3u, 8u}) {
    std::vector<std::atomic<int>> hits(97);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i]++; });
    for (auto& h : hits) CHECK(h.load() == 1);
  }
  CHECK(default_threads() >= 1);
}

TEST_CASE("format_number round-trips") {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23}) CHECK(std::stod(format_number(v)) == v);
}

TEST_CASE("path substreams do not depend on generation order") {
  NormalStream a(42, 7), b(42, 7), c(42, 8), d(43, 7);
  const double x = a();
  CHECK(x == b());
  CHECK(x != c());
  CHECK(x != d());
  CHECK(path_seed(1, 0) != path_seed(0, 1));
}
