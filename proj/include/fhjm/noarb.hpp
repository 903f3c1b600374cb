#ifndef FHJM_NOARB_HPP_
#define FHJM_NOARB_HPP_

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "fhjm/hjm_sim.hpp"

namespace fhjm {

struct DriftIdentityResult {
  double max_error = 0.0;
  double t_at_max = 0.0;
  int points = 0;
};

/// max over t_i <= T of |I_S(t_i, T) - e(t_i, T)|. I_S integrates the
/// product-integration drift over y with the trapezoid rule on `y_cells`
/// cells; e uses the same theta rule. Both sides vanish at t = 0.
DriftIdentityResult drift_identity_check(const VolatilitySpec& spec, HurstParam h,
                                         const TimeGrid& tg, double T,
                                         const DriftOptions& opts = {}, int y_cells = 512);

struct QmPair {
  double t = 0.0;
  double T = 0.0;
};

struct QmEntry {
  double t = 0.0;
  double T = 0.0;
  double target = 0.0;   // P(0, T)
  double mc_mean = 0.0;  // mean of Z_t(T)
  double std_error = 0.0;
  double z = 0.0;
  /// int_0^t I_alpha(s, T) ds for the simulated drift alpha, and
  /// int_0^t e(s, T) ds. They coincide under the no-arbitrage drift.
  double drift_side = 0.0;
  double kernel_side = 0.0;
  /// P(0,T) exp(kernel_side - drift_side): the exact E Z_t(T).
  double analytic_expectation = 0.0;
};

struct QuasiMartingaleReport {
  int n_paths = 0;
  std::vector<QmEntry> entries;
  int count_exceeding(double z_threshold = 3.0) const;
};

/// Monte Carlo panel streamed path by path; only the forward-curve rows
/// needed by the panel are built.
QuasiMartingaleReport check_quasi_martingale(const ForwardModel& model, const FbmSampler& sampler,
                                             const std::vector<QmPair>& pairs, int n_paths,
                                             std::uint64_t seed, unsigned threads = 1);

/// Same statistics from a stored discounted surface; each T must be one of
/// its maturities and each t a grid node.
QuasiMartingaleReport check_quasi_martingale(const BondSurface& discounted, const ForwardModel& model,
                                             const std::vector<QmPair>& pairs);

struct OscillationEntry {
  double tau = 0.0;
  int hits = 0;
  double frequency = 0.0;
};

struct OscillationReport {
  double k = 0.0;
  int n_paths = 0;
  std::vector<OscillationEntry> entries;
};

/// Fraction of paths on which sup |Z_tau(tau) / Z_t(T) - 1| < k over grid
/// times tau <= t and surface maturities t <= T <= T*. Z_tau(tau) = 1/S_0(tau).
OscillationReport oscillation_probe(const BondSurface& discounted, const std::vector<double>& account,
                                    double k, const std::vector<double>& taus);

nlohmann::json to_json(const DriftIdentityResult& r);
nlohmann::json to_json(const QuasiMartingaleReport& r);
nlohmann::json to_json(const OscillationReport& r);

}  // namespace fhjm

#endif  // FHJM_NOARB_HPP_
