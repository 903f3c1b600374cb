#ifndef FHJM_CONFIG_HPP_
#define FHJM_CONFIG_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhjm/hjm_sim.hpp"
#include "fhjm/market_ledger.hpp"
#include "fhjm/noarb.hpp"

namespace fhjm {

/// Invalid or inconsistent experiment configuration. what() names the
/// offending JSON path.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GridConfig {
  double t_star = 1.0;
  int n_steps = 64;
  double x_max = 10.0;
  int m_steps = 640;
};

struct MonteCarloConfig {
  int n_paths = 100;
  std::uint64_t seed = 12345;
  FbmMethod method = FbmMethod::kCholesky;
  int coarse_factor = 1;  // polygonal only
};

struct DriftIdentityConfig {
  double T = 1.0;
  int y_cells = 512;
  double tolerance = 1e-6;
};

struct QuasiMartingaleConfig {
  std::vector<QmPair> pairs;
  DriftSource drift = DriftSource::kModel;
  /// Also run the panel with the drift switched off.
  bool negative_control = false;
  double z_threshold = 3.0;
  int max_exceeding = 1;
};

struct OscillationConfig {
  double k = 0.05;
  std::vector<double> taus;
};

struct CheckConfig {
  std::optional<DriftIdentityConfig> drift_identity;
  std::optional<QuasiMartingaleConfig> quasi_martingale;
  std::optional<OscillationConfig> oscillation;
};

struct PortfolioConfig {
  std::vector<Interval> intervals;
  std::vector<double> ks;
  double admissibility_bound = 10.0;
};

struct ConsistencyConfig {
  std::string family = "nelson-siegel";
  /// Freeze the Nelson-Siegel decay at this value (the restricted family).
  std::optional<double> decay;
  int t_samples = 8;
  int y_samples = 50;
  std::vector<std::array<double, 2>> y_box;
  std::uint64_t seed = 7;
  int nodes = 512;
  double x_max = 10.0;
};

struct ExperimentConfig {
  std::vector<VolFactor> factors;
  double hurst = 0.75;
  GridConfig grid;
  InitialCurve initial_curve = InitialCurve::flat(0.03);
  MonteCarloConfig monte_carlo;
  std::vector<double> bond_maturities;
  int theta_cells = 1024;
  std::optional<CheckConfig> check;
  std::optional<PortfolioConfig> portfolio;
  std::optional<ConsistencyConfig> consistency;
  /// The validated document (overrides applied); hashed into the manifest.
  nlohmann::json source;

  VolatilitySpec spec() const { return VolatilitySpec(factors); }
  HurstParam hurst_param() const { return HurstParam(hurst); }
  TimeGrid t_grid() const { return TimeGrid(grid.t_star, grid.n_steps); }
  MaturityGrid x_grid() const { return MaturityGrid(grid.x_max, grid.m_steps); }
};

struct ConfigOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<long long> n_paths;
};

/// Validates `doc` and builds the configuration. Relative file references
/// (initial_curve.file) are resolved against `base_dir`.
ExperimentConfig parse_config(nlohmann::json doc, const ConfigOverrides& overrides = {},
                              const std::filesystem::path& base_dir = {});

/// Reads and parses a JSON file; any problem is a ConfigError.
ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides = {});

}  // namespace fhjm

#endif  // FHJM_CONFIG_HPP_
