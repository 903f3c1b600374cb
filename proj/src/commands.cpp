#include "fhjm/commands.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <Eigen/Core>
#include <boost/version.hpp>
#include <openssl/evp.h>

#include "fhjm/consistency_lab.hpp"
#include "fhjm/numerics.hpp"

#ifndef FHJM_VERSION
#define FHJM_VERSION "0.0.0"
#endif

namespace fhjm {

namespace {

using nlohmann::json;

std::ofstream open_output(const std::filesystem::path& dir, const std::string& name) {
  std::ofstream out(dir / name, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + (dir / name).string());
  return out;
}

void close_output(std::ofstream& out, const std::filesystem::path& dir, const std::string& name) {
  out.close();
  if (!out) throw std::runtime_error("I/O error while writing " + (dir / name).string());
}

template <typename Fn>
void write_file(const RunContext& ctx, CommandResult& res, const std::string& name, Fn&& body) {
  auto out = open_output(ctx.out_dir, name);
  body(out);
  close_output(out, ctx.out_dir, name);
  res.files.push_back(name);
}

void write_json(const RunContext& ctx, CommandResult& res, const std::string& name, const json& j) {
  write_file(ctx, res, name, [&](std::ostream& o) { o << j.dump(2) << '\n'; });
}

DriftOptions drift_options(const ExperimentConfig& cfg, const RunContext& ctx) {
  DriftOptions o;
  o.theta_cells = cfg.theta_cells;
  o.threads = ctx.threads;
  return o;
}

ForwardModel make_model(const ExperimentConfig& cfg, const RunContext& ctx, DriftSource drift) {
  SimulationOptions opts;
  opts.drift = drift;
  opts.drift_options = drift_options(cfg, ctx);
  return ForwardModel(cfg.spec(), cfg.hurst_param(), cfg.t_grid(), cfg.x_grid(), cfg.initial_curve, opts);
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

}  // namespace

std::filesystem::path resolve_output_dir(const std::optional<std::string>& flag) {
  if (flag && !flag->empty()) return *flag;
  if (const char* env = std::getenv("FHJM_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "fhjm_out";
}

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 15];
  }
  return out;
}

const char* version() { return FHJM_VERSION; }

FbmSampler make_sampler(const ExperimentConfig& cfg) {
  const TimeGrid tg = cfg.t_grid();
  const HurstParam h = cfg.hurst_param();
  switch (cfg.monte_carlo.method) {
    case FbmMethod::kCholesky:
      return make_cholesky_sampler(tg, h);
    case FbmMethod::kVolterra:
      return make_volterra_sampler(tg, h);
    case FbmMethod::kPolygonal:
      return make_polygonal_sampler(tg, h, cfg.monte_carlo.coarse_factor);
  }
  throw std::logic_error("unknown sampler");
}

CommandResult cmd_simulate(const ExperimentConfig& cfg, const RunContext& ctx) {
  CommandResult res;
  const ForwardModel model = make_model(cfg, ctx, DriftSource::kModel);
  const FbmSampler sampler = make_sampler(cfg);
  const FbmPathSet paths = sampler.generate(model.dims(), cfg.monte_carlo.n_paths, cfg.monte_carlo.seed, ctx.threads);
  const ForwardSurface surface = simulate_forward(model, paths, ctx.threads);
  const BondSurface bonds = bond_surface(model, surface, cfg.bond_maturities);
  const auto account = money_account(surface);
  const BondSurface disc = discounted_surface(bonds, account);

  write_file(ctx, res, "fbm_paths.csv", [&](std::ostream& o) { write_paths_csv(paths, o); });
  write_file(ctx, res, "forward.csv", [&](std::ostream& o) { write_forward_csv(surface, o); });
  write_file(ctx, res, "bonds.csv", [&](std::ostream& o) { write_bond_csv(bonds, disc, o); });
  write_file(ctx, res, "money_account.csv", [&](std::ostream& o) {
    const TimeGrid& tg = surface.t_grid;
    o << "path_id,t,S0\n";
    for (int p = 0; p < surface.n_paths; ++p)
      for (int i = 0; i <= tg.n_steps; ++i)
        o << p << ',' << format_number(tg.at(i)) << ','
          << format_number(account[static_cast<std::size_t>(p) * tg.size() + static_cast<std::size_t>(i)]) << '\n';
  });
  res.summary = {{"n_paths", cfg.monte_carlo.n_paths},
                 {"method", to_string(sampler.method())},
                 {"sampler_jitter", sampler.jitter()},
                 {"vol_extrapolations", model.extrapolations()},
                 {"x_stride", model.stride()}};
  return res;
}

CommandResult cmd_drift(const ExperimentConfig& cfg, const RunContext& ctx) {
  CommandResult res;
  const VolatilitySpec spec = cfg.spec();
  const HurstParam h = cfg.hurst_param();
  const DriftField field = drift_generic(spec, h, cfg.t_grid(), cfg.x_grid(), drift_options(cfg, ctx));
  // The simulation uses S(t_l, .) for l < n only.
  const int rows = cfg.grid.n_steps;
  write_file(ctx, res, "drift.csv", [&](std::ostream& o) {
    o << "t,x,value\n";
    for (int i = 0; i < rows; ++i)
      for (int k = 0; k <= field.x_grid.m_steps; ++k)
        o << format_number(field.t_grid.at(i)) << ',' << format_number(field.x_grid.at(k)) << ','
          << format_number(field.at(i, k)) << '\n';
  });
  json summary = {{"rows", rows}, {"vol_extrapolations", field.extrapolations}, {"closed_form_available", spec.closed_form()}};
  if (spec.closed_form()) {
    const DriftComparison cmp = compare_with_closed_form(field, spec, h, rows);
    summary["max_abs_error"] = cmp.max_abs_error;
    summary["max_rel_error"] = finite_or_string(cmp.max_rel_error);
    summary["at"] = {{"t", cmp.t_at_max}, {"x", cmp.x_at_max}};
    summary["tolerance"] = 1e-6;
    summary["pass"] = cmp.max_rel_error <= 1e-6;
  }
  write_json(ctx, res, "drift_summary.json", summary);
  res.summary = summary;
  return res;
}

CommandResult cmd_check(const ExperimentConfig& cfg, const RunContext& ctx) {
  CommandResult res;
  json report = json::object();
  if (cfg.check) {
    const CheckConfig& c = *cfg.check;
    const VolatilitySpec spec = cfg.spec();
    const HurstParam h = cfg.hurst_param();
    if (c.drift_identity) {
      const auto& d = *c.drift_identity;
      const auto r = drift_identity_check(spec, h, cfg.t_grid(), d.T, drift_options(cfg, ctx), d.y_cells);
      json j = to_json(r);
      j["T"] = d.T;
      j["tolerance"] = d.tolerance;
      j["pass"] = r.max_error <= d.tolerance;
      report["drift_identity"] = j;
    }
    if (c.quasi_martingale || c.oscillation) {
      const FbmSampler sampler = make_sampler(cfg);
      if (c.quasi_martingale) {
        const auto& q = *c.quasi_martingale;
        auto run = [&](DriftSource src) {
          const ForwardModel model = make_model(cfg, ctx, src);
          const auto rep = check_quasi_martingale(model, sampler, q.pairs, cfg.monte_carlo.n_paths,
                                                  cfg.monte_carlo.seed, ctx.threads);
          json j = to_json(rep);
          const int exceeding = rep.count_exceeding(q.z_threshold);
          j["drift"] = src == DriftSource::kZero ? "zero" : "model";
          j["z_threshold"] = q.z_threshold;
          j["exceeding"] = exceeding;
          j["max_exceeding"] = q.max_exceeding;
          j["pass"] = exceeding <= q.max_exceeding;
          return j;
        };
        report["quasi_martingale"] = run(q.drift);
        if (q.negative_control) {
          json neg = run(DriftSource::kZero);
          neg["flagged"] = !neg["pass"].get<bool>();
          report["negative_control"] = neg;
        }
      }
      if (c.oscillation) {
        const auto& o = *c.oscillation;
        const ForwardModel model = make_model(cfg, ctx, DriftSource::kModel);
        const auto sim = simulate_bonds(model, sampler, cfg.bond_maturities, cfg.monte_carlo.n_paths,
                                        cfg.monte_carlo.seed, ctx.threads);
        const auto rep = oscillation_probe(sim.discounted, sim.account, o.k, o.taus);
        json j = to_json(rep);
        bool all_positive = true;
        for (const auto& e : rep.entries) all_positive = all_positive && e.hits > 0;
        j["pass"] = all_positive;
        report["oscillation"] = j;
      }
    }
  }
  write_json(ctx, res, "check.json", report);
  res.summary = report;
  return res;
}

CommandResult cmd_consistency(const ExperimentConfig& cfg, const RunContext& ctx) {
  CommandResult res;
  ConsistencyConfig fallback;
  fallback.y_box = {{0.0, 0.06}, {-0.03, 0.03}, {-0.03, 0.03}, {0.5, 3.0}};
  const ConsistencyConfig cc = cfg.consistency.value_or(fallback);
  const ManifoldFamily fam = cc.decay ? nelson_siegel_fixed_decay(*cc.decay) : nelson_siegel_family();
  const MembershipGrid grid = membership_grid(cc.nodes, cc.x_max);
  std::vector<double> ts;
  for (int k = 1; k <= cc.t_samples; ++k) ts.push_back(cfg.grid.t_star * k / cc.t_samples);
  const auto ys = latin_hypercube(cc.y_box, cc.y_samples, cc.seed);
  const NagumoVerdict v = nagumo_full_check(fam, cfg.spec(), cfg.hurst_param(), ts, ys, grid, {}, drift_options(cfg, ctx));
  json j = to_json(v);
  j["family"] = fam.name;
  j["t_samples"] = ts;
  j["y_samples"] = cc.y_samples;
  write_json(ctx, res, "consistency.json", j);
  res.summary = {{"verdict", v.label()}};
  if (v.drift_vol.witness) {
    const Witness& w = *v.drift_vol.witness;
    res.summary["witness"] = {{"vector", w.vector}, {"term", w.term}, {"t", w.t}, {"residual", w.residual},
                              {"term_residual", w.term_residual}};
  }
  return res;
}

CommandResult cmd_portfolio(const ExperimentConfig& cfg, const RunContext& ctx) {
  if (!cfg.portfolio) throw ConfigError("portfolio: required by the portfolio command");
  const PortfolioConfig& pc = *cfg.portfolio;
  CommandResult res;
  const ForwardModel model = make_model(cfg, ctx, DriftSource::kModel);
  const FbmSampler sampler = make_sampler(cfg);
  const auto sim = simulate_bonds(model, sampler, cfg.bond_maturities, cfg.monte_carlo.n_paths,
                                  cfg.monte_carlo.seed, ctx.threads);
  const Strategy strategy(cfg.t_grid(), cfg.bond_maturities, pc.intervals);
  const LedgerResult ledger = liquidation_value(strategy, sim.discounted, pc.ks, ctx.threads);

  std::vector<double> ibp(static_cast<std::size_t>(sim.discounted.n_paths));
  parallel_for(ibp.size(), ctx.threads, [&](std::size_t p) {
    const int path = static_cast<int>(p);
    ibp[p] = integration_by_parts_residual(strategy.positions(sim.discounted, path), sim.discounted, path);
  });
  double ibp_max = 0.0;
  for (double r : ibp) ibp_max = std::max(ibp_max, r);

  for (std::size_t k = 0; k < pc.ks.size(); ++k) {
    const std::string name = "ledger_k" + std::to_string(k) + ".csv";
    write_file(ctx, res, name, [&](std::ostream& o) { write_ledger_csv(ledger, pc.ks[k], o); });
  }
  json per_k = json::array();
  for (const auto& s : summarize(ledger, pc.admissibility_bound))
    per_k.push_back({{"k", s.k},
                     {"mean_V_T", s.mean},
                     {"q05", s.q05},
                     {"q50", s.q50},
                     {"q95", s.q95},
                     {"inadmissible_paths", s.inadmissible}});
  const json summary = {{"n_paths", cfg.monte_carlo.n_paths},
                        {"admissibility_M", pc.admissibility_bound},
                        {"total_variation", total_variation(strategy)},
                        {"ledger", per_k},
                        {"integration_by_parts", {{"max_residual", ibp_max}, {"tolerance", 1e-10}, {"pass", ibp_max <= 1e-10}}}};
  write_json(ctx, res, "portfolio_summary.json", summary);
  res.summary = summary;
  return res;
}

CommandResult run_command(const std::string& name, const ExperimentConfig& cfg, const RunContext& ctx) {
  std::error_code ec;
  std::filesystem::create_directories(ctx.out_dir, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + ctx.out_dir.string() + ": " + ec.message());
  CommandResult res;
  if (name == "simulate")
    res = cmd_simulate(cfg, ctx);
  else if (name == "drift")
    res = cmd_drift(cfg, ctx);
  else if (name == "check")
    res = cmd_check(cfg, ctx);
  else if (name == "consistency")
    res = cmd_consistency(cfg, ctx);
  else if (name == "portfolio")
    res = cmd_portfolio(cfg, ctx);
  else
    throw std::invalid_argument("unknown command '" + name + "'");

  const std::string canonical = cfg.source.dump();
  const json manifest = {
      {"command", name},
      {"fhjm_version", version()},
      {"config_sha256", sha256_hex(canonical)},
      {"seed", cfg.monte_carlo.seed},
      {"n_paths", cfg.monte_carlo.n_paths},
      {"config", cfg.source},
      {"outputs", res.files},
      {"libraries",
       {{"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                      std::to_string(EIGEN_MINOR_VERSION)},
        {"boost", BOOST_LIB_VERSION},
        {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                              std::to_string(NLOHMANN_JSON_VERSION_PATCH)}}},
      {"compiler", __VERSION__}};
  auto out = open_output(ctx.out_dir, "manifest.json");
  out << manifest.dump(2) << '\n';
  close_output(out, ctx.out_dir, "manifest.json");
  return res;
}

}  // namespace fhjm
