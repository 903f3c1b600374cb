#ifndef FHJM_CONSISTENCY_LAB_HPP_
#define FHJM_CONSISTENCY_LAB_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fhjm/hjm_sim.hpp"

namespace fhjm {

/// Finite-dimensional curve family x -> F(x, y), y in R^q.
struct ManifoldFamily {
  std::string name;
  int q = 0;
  std::function<double(double, const std::vector<double>&)> f;
  /// dF/dy_i at (x, y), length q.
  std::function<std::vector<double>(double, const std::vector<double>&)> grad_y;
  std::function<double(double, const std::vector<double>&)> d_dx;
  std::function<bool(const std::vector<double>&)> in_domain;
};

/// y1 + y2 exp(-y4 x) + y3 x exp(-y4 x), y4 != 0.
ManifoldFamily nelson_siegel_family();
/// Nelson-Siegel with the decay frozen at y4 = alpha (parameters y1..y3).
ManifoldFamily nelson_siegel_fixed_decay(double alpha);

/// Nodes and quadrature weights of the weighted L2 norm used for membership.
struct MembershipGrid {
  std::vector<double> x;
  std::vector<double> w;
};
/// Trapezoid weights times exp(-x/4) on [0, x_max].
MembershipGrid membership_grid(int nodes = 512, double x_max = 10.0);

struct ResidualResult {
  double residual = 0.0;
  int rank = 0;
};

/// min_c ||g - sum_i c_i dF/dy_i(., y)||_w / max(||g||_w, 1e-300); SVD
/// pseudo-inverse, so a degenerate tangent basis just lowers the rank.
ResidualResult tangent_residual(const ManifoldFamily& fam, const std::vector<double>& y,
                                const std::vector<double>& g, const MembershipGrid& grid);

struct TangencyTolerance {
  double pass = 1e-6;
  double indeterminate = 1e-3;
};

enum class Outcome { kPass, kIndeterminate, kFail };
std::string to_string(Outcome o);

struct TangencyRecord {
  std::string vector;  // "shift", "drift", "sigma[j]"
  double t = 0.0;
  std::vector<double> y;
  double residual = 0.0;
  int rank = 0;
  Outcome outcome = Outcome::kPass;
};

struct Witness {
  std::string vector;
  std::string term;  // closed-form drift term, empty if not applicable
  double t = 0.0;
  std::vector<double> y;
  double residual = 0.0;       // of the offending vector
  double term_residual = 0.0;  // of the named term alone
};

struct TangencyVerdict {
  std::vector<TangencyRecord> records;
  /// Every record passed.
  bool consistent = true;
  /// No record failed but some fell in the indeterminate band.
  bool indeterminate = false;
  /// Consistent because the volatility vanishes identically.
  bool trivial = false;
  std::optional<Witness> witness;
  std::string label() const;  // "consistent", "consistent (trivial)", "indeterminate", "inconsistent"
};

/// Latin-hypercube samples in the box [lo_i, hi_i].
std::vector<std::vector<double>> latin_hypercube(const std::vector<std::array<double, 2>>& box, int count,
                                                 std::uint64_t seed);

/// dF/dx(., y) in the tangent space, for every sample.
TangencyVerdict check_shift_condition(const ManifoldFamily& fam, const std::vector<std::vector<double>>& ys,
                                      const MembershipGrid& grid, const TangencyTolerance& tol = {});

/// S(t, .) and every sigma_j(t, .) in the tangent space, for every (t, y).
/// On failure the witness sample is the one where the volatility condition is
/// best satisfied (ties broken by the largest drift residual); for
/// closed-form specs it names the drift term with the largest residual there.
TangencyVerdict check_drift_and_vol_condition(const ManifoldFamily& fam, const VolatilitySpec& spec,
                                              HurstParam h, const std::vector<double>& ts,
                                              const std::vector<std::vector<double>>& ys,
                                              const MembershipGrid& grid, const TangencyTolerance& tol = {},
                                              const DriftOptions& opts = {});

struct NagumoVerdict {
  TangencyVerdict shift;
  TangencyVerdict drift_vol;
  bool consistent() const { return shift.consistent && drift_vol.consistent; }
  std::string label() const;
};

NagumoVerdict nagumo_full_check(const ManifoldFamily& fam, const VolatilitySpec& spec, HurstParam h,
                                const std::vector<double>& ts, const std::vector<std::vector<double>>& ys,
                                const MembershipGrid& grid, const TangencyTolerance& tol = {},
                                const DriftOptions& opts = {});

/// Deterministic path of the control system
///   y(t_i, x_k) = r_0(t_i + x_k) + dt sum_{l<i} [S(t_l, .) + sum_j (I^{H-1/2} u_j)(t_l) sigma_j(t_l, .)](x_k + t_i - t_l),
/// u[j] sampled on the model's time grid.
ForwardSurface controlled_path(const ForwardModel& model, const std::vector<SampledFunction>& u);

struct FamilyFit {
  std::vector<double> y;
  double distance = 0.0;  // weighted L2 norm of F(., y) - g
};

/// Levenberg-Marquardt fit of the family to g from each start; best result.
FamilyFit distance_to_family(const ManifoldFamily& fam, const std::vector<double>& g,
                             const MembershipGrid& grid, const std::vector<std::vector<double>>& starts);

nlohmann::json to_json(const TangencyVerdict& v);
nlohmann::json to_json(const NagumoVerdict& v);

}  // namespace fhjm

#endif  // FHJM_CONSISTENCY_LAB_HPP_
