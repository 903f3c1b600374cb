#include "fhjm/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>
#include <sstream>

namespace fhjm {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

std::string join(const std::string& base, const std::string& key) { return base.empty() ? key : base + "." + key; }
std::string join(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

void expect_object(const json& j, const std::string& where) {
  if (!j.is_object()) fail(where, "expected an object");
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys) {
  expect_object(j, where);
  const std::set<std::string> ok(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!ok.count(it.key())) fail(join(where, it.key()), "unknown key");
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) fail(where, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) fail(where, "must be finite");
  return v;
}

double number_or(const json& parent, const char* key, const std::string& where, double fallback) {
  return parent.contains(key) ? number(parent.at(key), join(where, key)) : fallback;
}

long long integer(const json& j, const std::string& where) {
  if (!j.is_number_integer()) fail(where, "expected an integer");
  return j.get<long long>();
}

int int_or(const json& parent, const char* key, const std::string& where, int fallback, long long lo,
           long long hi) {
  if (!parent.contains(key)) return fallback;
  const std::string w = join(where, key);
  const long long v = integer(parent.at(key), w);
  if (v < lo || v > hi) fail(w, "must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "]");
  return static_cast<int>(v);
}

std::uint64_t seed_value(const json& j, const std::string& where) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) fail(where, "seed must be non-negative");
  fail(where, "expected an integer");
}

std::vector<double> number_list(const json& j, const std::string& where) {
  if (!j.is_array()) fail(where, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], join(where, i)));
  return out;
}

void strictly_increasing(const std::vector<double>& v, const std::string& where) {
  for (std::size_t i = 1; i < v.size(); ++i)
    if (!(v[i] > v[i - 1])) fail(join(where, i), "values must be strictly increasing");
}

bool on_grid(const TimeGrid& tg, double t) {
  try {
    tg.index_of(t);
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

VolFactor parse_factor(const json& j, const std::string& where) {
  expect_object(j, where);
  if (!j.contains("type") || !j.at("type").is_string()) fail(join(where, "type"), "expected a string");
  const std::string type = j.at("type").get<std::string>();
  if (type == "ho-lee") {
    allow_keys(j, where, {"type", "sigma"});
    if (!j.contains("sigma")) fail(join(where, "sigma"), "required");
    const double s = number(j.at("sigma"), join(where, "sigma"));
    if (s < 0.0) fail(join(where, "sigma"), "must be >= 0");
    return HoLee{s};
  }
  if (type == "hull-white") {
    allow_keys(j, where, {"type", "sigma", "alpha"});
    if (!j.contains("sigma")) fail(join(where, "sigma"), "required");
    if (!j.contains("alpha")) fail(join(where, "alpha"), "required");
    const double s = number(j.at("sigma"), join(where, "sigma"));
    const double a = number(j.at("alpha"), join(where, "alpha"));
    if (s < 0.0) fail(join(where, "sigma"), "must be >= 0");
    if (!(a > 0.0)) fail(join(where, "alpha"), "must be > 0");
    return HullWhite{s, a};
  }
  if (type == "tabulated") {
    allow_keys(j, where, {"type", "t", "x", "values"});
    for (const char* k : {"t", "x", "values"})
      if (!j.contains(k)) fail(join(where, k), "required");
    Tabulated tab;
    tab.t = number_list(j.at("t"), join(where, "t"));
    tab.x = number_list(j.at("x"), join(where, "x"));
    strictly_increasing(tab.t, join(where, "t"));
    strictly_increasing(tab.x, join(where, "x"));
    const json& rows = j.at("values");
    const std::string w = join(where, "values");
    if (!rows.is_array() || rows.size() != tab.t.size()) fail(w, "expected one row per t node");
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const auto row = number_list(rows[i], join(w, i));
      if (row.size() != tab.x.size()) fail(join(w, i), "expected one value per x node");
      tab.values.insert(tab.values.end(), row.begin(), row.end());
    }
    return tab;
  }
  fail(join(where, "type"), "unknown factor type '" + type + "' (ho-lee, hull-white, tabulated)");
}

InitialCurve read_curve_file(const std::filesystem::path& file, const std::string& where) {
  std::ifstream in(file);
  if (!in) fail(where, "cannot open '" + file.string() + "'");
  std::vector<double> x;
  std::vector<double> r;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ls(line);
    double a = 0.0;
    double b = 0.0;
    if (!(ls >> a >> b)) {
      if (line_no == 1) continue;  // header
      fail(where, file.string() + ":" + std::to_string(line_no) + ": expected 'x,r'");
    }
    x.push_back(a);
    r.push_back(b);
  }
  try {
    return InitialCurve::table(std::move(x), std::move(r));
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

InitialCurve parse_curve(const json& j, const std::string& where, const std::filesystem::path& base_dir) {
  allow_keys(j, where, {"flat", "nelson_siegel", "x", "r", "file"});
  const int forms = static_cast<int>(j.contains("flat")) + static_cast<int>(j.contains("nelson_siegel")) +
                    static_cast<int>(j.contains("x") || j.contains("r")) + static_cast<int>(j.contains("file"));
  if (forms != 1) fail(where, "give exactly one of flat, nelson_siegel, x/r, file");
  if (j.contains("flat")) return InitialCurve::flat(number(j.at("flat"), join(where, "flat")));
  if (j.contains("nelson_siegel")) {
    const auto y = number_list(j.at("nelson_siegel"), join(where, "nelson_siegel"));
    if (y.size() != 4) fail(join(where, "nelson_siegel"), "expected [y1, y2, y3, y4]");
    if (y[3] == 0.0) fail(join(where, "nelson_siegel"), "y4 must be nonzero");
    return InitialCurve::nelson_siegel({y[0], y[1], y[2], y[3]});
  }
  if (j.contains("file")) {
    if (!j.at("file").is_string()) fail(join(where, "file"), "expected a path");
    std::filesystem::path file = j.at("file").get<std::string>();
    if (file.is_relative()) file = base_dir / file;
    return read_curve_file(file, join(where, "file"));
  }
  if (!j.contains("x") || !j.contains("r")) fail(where, "tabulated curve needs both x and r");
  try {
    return InitialCurve::table(number_list(j.at("x"), join(where, "x")), number_list(j.at("r"), join(where, "r")));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    fail(where, e.what());
  }
}

GateRule parse_gate(const json& j, const std::string& where) {
  GateRule g;
  if (j.is_null()) return g;
  expect_object(j, where);
  const std::string type = j.value("type", std::string("always"));
  if (type == "always") {
    allow_keys(j, where, {"type"});
    return g;
  }
  if (type != "threshold") fail(join(where, "type"), "unknown gate '" + type + "' (always, threshold)");
  allow_keys(j, where, {"type", "t", "T", "level", "direction"});
  for (const char* k : {"t", "T", "level"})
    if (!j.contains(k)) fail(join(where, k), "required");
  g.kind = GateRule::Kind::kThreshold;
  g.t_observe = number(j.at("t"), join(where, "t"));
  g.T_observe = number(j.at("T"), join(where, "T"));
  g.level = number(j.at("level"), join(where, "level"));
  const std::string dir = j.value("direction", std::string("above"));
  if (dir != "above" && dir != "below") fail(join(where, "direction"), "expected 'above' or 'below'");
  g.above = dir == "above";
  return g;
}

std::vector<QmPair> parse_pairs(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty()) fail(where, "expected a non-empty array of [t, T] pairs");
  std::vector<QmPair> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto v = number_list(j[i], join(where, i));
    if (v.size() != 2) fail(join(where, i), "expected [t, T]");
    out.push_back({v[0], v[1]});
  }
  return out;
}

void require_maturity(const std::vector<double>& maturities, double T, const std::string& where) {
  for (double m : maturities)
    if (std::abs(m - T) <= 1e-12 * std::max(1.0, T)) return;
  fail(where, "maturity " + std::to_string(T) + " is not listed in bond_maturities");
}

}  // namespace

ExperimentConfig parse_config(json doc, const ConfigOverrides& overrides, const std::filesystem::path& base_dir) {
  allow_keys(doc, "config",
             {"model", "grid", "initial_curve", "monte_carlo", "bond_maturities", "check", "portfolio",
              "consistency"});
  if (overrides.seed) doc["monte_carlo"]["seed"] = *overrides.seed;
  if (overrides.n_paths) doc["monte_carlo"]["n_paths"] = *overrides.n_paths;

  ExperimentConfig cfg;

  if (!doc.contains("model")) fail("model", "required");
  const json& model = doc.at("model");
  allow_keys(model, "model", {"hurst", "factors", "theta_cells"});
  if (!model.contains("hurst")) fail("model.hurst", "required");
  cfg.hurst = number(model.at("hurst"), "model.hurst");
  if (!(cfg.hurst > 0.5 && cfg.hurst < 1.0)) fail("model.hurst", "must lie in (0.5, 1)");
  if (!model.contains("factors") || !model.at("factors").is_array() || model.at("factors").empty())
    fail("model.factors", "expected a non-empty array of volatility factors");
  for (std::size_t j = 0; j < model.at("factors").size(); ++j)
    cfg.factors.push_back(parse_factor(model.at("factors")[j], join("model.factors", j)));
  cfg.theta_cells = int_or(model, "theta_cells", "model", cfg.theta_cells, 2, 1 << 20);

  if (doc.contains("grid")) {
    const json& g = doc.at("grid");
    allow_keys(g, "grid", {"t_star", "n_steps", "x_max", "m_steps"});
    cfg.grid.t_star = number_or(g, "t_star", "grid", cfg.grid.t_star);
    cfg.grid.n_steps = int_or(g, "n_steps", "grid", cfg.grid.n_steps, 1, 1 << 20);
    cfg.grid.x_max = number_or(g, "x_max", "grid", cfg.grid.x_max);
    cfg.grid.m_steps = int_or(g, "m_steps", "grid", cfg.grid.m_steps, 1, 1 << 24);
  }
  if (!(cfg.grid.t_star > 0.0)) fail("grid.t_star", "must be > 0");
  if (!(cfg.grid.x_max > 0.0)) fail("grid.x_max", "must be > 0");
  {
    const double ratio = (cfg.grid.x_max / cfg.grid.m_steps) / (cfg.grid.t_star / cfg.grid.n_steps);
    const double q = std::round(ratio);
    if (q < 1.0 || std::abs(ratio - q) > 1e-9 * q)
      fail("grid", "x spacing x_max/m_steps must be a positive integer multiple of t_star/n_steps");
  }

  if (doc.contains("initial_curve")) cfg.initial_curve = parse_curve(doc.at("initial_curve"), "initial_curve", base_dir);
  if (cfg.initial_curve.max_x() < cfg.grid.t_star + cfg.grid.x_max * (1.0 - 1e-12))
    fail("initial_curve", "tabulated curve must cover [0, t_star + x_max]");

  if (doc.contains("monte_carlo")) {
    const json& mc = doc.at("monte_carlo");
    allow_keys(mc, "monte_carlo", {"n_paths", "seed", "method", "coarse_factor"});
    if (mc.contains("n_paths")) {
      const long long n = integer(mc.at("n_paths"), "monte_carlo.n_paths");
      if (n < 1 || n > 100'000'000) fail("monte_carlo.n_paths", "must lie in [1, 100000000]");
      cfg.monte_carlo.n_paths = static_cast<int>(n);
    }
    if (mc.contains("seed")) cfg.monte_carlo.seed = seed_value(mc.at("seed"), "monte_carlo.seed");
    if (mc.contains("method")) {
      if (!mc.at("method").is_string()) fail("monte_carlo.method", "expected a string");
      try {
        cfg.monte_carlo.method = fbm_method_from_string(mc.at("method").get<std::string>());
      } catch (const std::exception&) {
        fail("monte_carlo.method", "expected cholesky, volterra or polygonal");
      }
    }
    cfg.monte_carlo.coarse_factor = int_or(mc, "coarse_factor", "monte_carlo", 1, 1, 1 << 20);
  }
  if (cfg.grid.n_steps % cfg.monte_carlo.coarse_factor != 0)
    fail("monte_carlo.coarse_factor", "must divide grid.n_steps");
  if (cfg.monte_carlo.method == FbmMethod::kCholesky && cfg.grid.n_steps > 4096)
    fail("grid.n_steps", "the cholesky sampler supports at most 4096 steps");

  const TimeGrid tg = cfg.t_grid();
  if (doc.contains("bond_maturities")) {
    cfg.bond_maturities = number_list(doc.at("bond_maturities"), "bond_maturities");
    strictly_increasing(cfg.bond_maturities, "bond_maturities");
    for (std::size_t m = 0; m < cfg.bond_maturities.size(); ++m) {
      const double T = cfg.bond_maturities[m];
      if (!(T > 0.0)) fail(join("bond_maturities", m), "must be > 0");
      if (T > cfg.grid.x_max * (1.0 + 1e-12)) fail(join("bond_maturities", m), "must not exceed grid.x_max");
    }
  } else if (cfg.grid.t_star <= cfg.grid.x_max) {
    cfg.bond_maturities = {cfg.grid.t_star};
  }

  if (doc.contains("check")) {
    const json& c = doc.at("check");
    allow_keys(c, "check", {"drift_identity", "quasi_martingale", "oscillation"});
    CheckConfig check;
    if (c.contains("drift_identity")) {
      const json& d = c.at("drift_identity");
      const std::string w = "check.drift_identity";
      allow_keys(d, w, {"T", "y_cells", "tolerance"});
      DriftIdentityConfig di;
      di.T = number_or(d, "T", w, cfg.grid.t_star);
      if (!(di.T > 0.0)) fail(join(w, "T"), "must be > 0");
      di.y_cells = int_or(d, "y_cells", w, di.y_cells, 1, 1 << 20);
      di.tolerance = number_or(d, "tolerance", w, di.tolerance);
      check.drift_identity = di;
    }
    if (c.contains("quasi_martingale")) {
      const json& q = c.at("quasi_martingale");
      const std::string w = "check.quasi_martingale";
      allow_keys(q, w, {"pairs", "drift", "negative_control", "z_threshold", "max_exceeding"});
      QuasiMartingaleConfig qm;
      if (!q.contains("pairs")) fail(join(w, "pairs"), "required");
      qm.pairs = parse_pairs(q.at("pairs"), join(w, "pairs"));
      for (std::size_t i = 0; i < qm.pairs.size(); ++i) {
        const auto& p = qm.pairs[i];
        const std::string pw = join(join(w, "pairs"), i);
        if (p.t < 0.0 || p.t > cfg.grid.t_star * (1.0 + 1e-12) || !on_grid(tg, p.t))
          fail(pw, "t must be a node of the time grid");
        if (p.T < p.t) fail(pw, "needs t <= T");
        if (p.T - p.t > cfg.grid.x_max * (1.0 + 1e-12)) fail(pw, "T - t must not exceed grid.x_max");
      }
      const std::string drift = q.value("drift", std::string("model"));
      if (drift != "model" && drift != "zero") fail(join(w, "drift"), "expected 'model' or 'zero'");
      qm.drift = drift == "zero" ? DriftSource::kZero : DriftSource::kModel;
      if (q.contains("negative_control")) {
        if (!q.at("negative_control").is_boolean()) fail(join(w, "negative_control"), "expected true or false");
        qm.negative_control = q.at("negative_control").get<bool>();
      }
      qm.z_threshold = number_or(q, "z_threshold", w, qm.z_threshold);
      qm.max_exceeding = int_or(q, "max_exceeding", w, qm.max_exceeding, 0, 1 << 20);
      check.quasi_martingale = qm;
    }
    if (c.contains("oscillation")) {
      const json& o = c.at("oscillation");
      const std::string w = "check.oscillation";
      allow_keys(o, w, {"k", "tau"});
      OscillationConfig oc;
      oc.k = number_or(o, "k", w, oc.k);
      if (!(oc.k > 0.0)) fail(join(w, "k"), "must be > 0");
      oc.taus = o.contains("tau") ? number_list(o.at("tau"), join(w, "tau")) : std::vector<double>{0.0};
      for (std::size_t i = 0; i < oc.taus.size(); ++i)
        if (!on_grid(tg, oc.taus[i])) fail(join(join(w, "tau"), i), "must be a node of the time grid");
      if (cfg.bond_maturities.empty()) fail("bond_maturities", "the oscillation probe needs traded bonds");
      check.oscillation = oc;
    }
    cfg.check = check;
  }

  if (doc.contains("portfolio")) {
    const json& p = doc.at("portfolio");
    allow_keys(p, "portfolio", {"strategies", "k", "admissibility_M"});
    PortfolioConfig pc;
    if (!p.contains("strategies") || !p.at("strategies").is_array())
      fail("portfolio.strategies", "expected an array of intervals");
    const json& list = p.at("strategies");
    for (std::size_t s = 0; s < list.size(); ++s) {
      const std::string w = join("portfolio.strategies", s);
      const json& iv = list[s];
      allow_keys(iv, w, {"from", "to", "atoms", "gate"});
      Interval out;
      if (!iv.contains("from") || !iv.contains("to")) fail(w, "needs from and to");
      out.from = number(iv.at("from"), join(w, "from"));
      out.to = number(iv.at("to"), join(w, "to"));
      if (!iv.contains("atoms") || !iv.at("atoms").is_array()) fail(join(w, "atoms"), "expected an array");
      for (std::size_t a = 0; a < iv.at("atoms").size(); ++a) {
        const json& at = iv.at("atoms")[a];
        const std::string aw = join(join(w, "atoms"), a);
        allow_keys(at, aw, {"T", "w"});
        if (!at.contains("T") || !at.contains("w")) fail(aw, "needs T and w");
        Atom atom{number(at.at("T"), join(aw, "T")), number(at.at("w"), join(aw, "w"))};
        require_maturity(cfg.bond_maturities, atom.T, join(aw, "T"));
        out.measure.atoms.push_back(atom);
      }
      out.gate = parse_gate(iv.contains("gate") ? iv.at("gate") : json(), join(w, "gate"));
      if (out.gate.kind == GateRule::Kind::kThreshold)
        require_maturity(cfg.bond_maturities, out.gate.T_observe, join(join(w, "gate"), "T"));
      pc.intervals.push_back(out);
    }
    pc.ks = p.contains("k") ? number_list(p.at("k"), "portfolio.k") : std::vector<double>{0.0};
    if (pc.ks.empty()) fail("portfolio.k", "expected at least one cost rate");
    for (std::size_t i = 0; i < pc.ks.size(); ++i)
      if (pc.ks[i] < 0.0) fail(join("portfolio.k", i), "must be >= 0");
    pc.admissibility_bound = number_or(p, "admissibility_M", "portfolio", pc.admissibility_bound);
    if (!(pc.admissibility_bound > 0.0)) fail("portfolio.admissibility_M", "must be > 0");
    try {
      Strategy(tg, cfg.bond_maturities, pc.intervals);
    } catch (const std::exception& e) {
      fail("portfolio.strategies", e.what());
    }
    cfg.portfolio = pc;
  }

  if (doc.contains("consistency")) {
    const json& c = doc.at("consistency");
    const std::string w = "consistency";
    allow_keys(c, w, {"family", "decay", "t_samples", "y_samples", "y_box", "seed", "nodes", "x_max"});
    ConsistencyConfig cc;
    if (c.contains("family")) {
      if (!c.at("family").is_string()) fail(join(w, "family"), "expected a string");
      cc.family = c.at("family").get<std::string>();
    }
    if (cc.family != "nelson-siegel") fail(join(w, "family"), "unknown family '" + cc.family + "' (nelson-siegel)");
    if (c.contains("decay") && !c.at("decay").is_null()) {
      cc.decay = number(c.at("decay"), join(w, "decay"));
      if (*cc.decay == 0.0) fail(join(w, "decay"), "must be nonzero");
    }
    cc.t_samples = int_or(c, "t_samples", w, cc.t_samples, 1, 1 << 16);
    cc.y_samples = int_or(c, "y_samples", w, cc.y_samples, 1, 1 << 20);
    if (c.contains("seed")) cc.seed = seed_value(c.at("seed"), join(w, "seed"));
    cc.nodes = int_or(c, "nodes", w, cc.nodes, 2, 1 << 20);
    cc.x_max = number_or(c, "x_max", w, cc.x_max);
    if (!(cc.x_max > 0.0)) fail(join(w, "x_max"), "must be > 0");
    const std::size_t q = cc.decay ? 3 : 4;
    if (c.contains("y_box")) {
      const json& box = c.at("y_box");
      if (!box.is_array()) fail(join(w, "y_box"), "expected an array of [lo, hi]");
      for (std::size_t i = 0; i < box.size(); ++i) {
        const auto v = number_list(box[i], join(join(w, "y_box"), i));
        if (v.size() != 2 || v[0] > v[1]) fail(join(join(w, "y_box"), i), "expected [lo, hi] with lo <= hi");
        cc.y_box.push_back({v[0], v[1]});
      }
    } else {
      cc.y_box = {{0.0, 0.06}, {-0.03, 0.03}, {-0.03, 0.03}};
      if (q == 4) cc.y_box.push_back({0.5, 3.0});
    }
    if (cc.y_box.size() != q)
      fail(join(w, "y_box"), "expected " + std::to_string(q) + " intervals for this family");
    if (q == 4 && cc.y_box[3][0] <= 0.0 && cc.y_box[3][1] >= 0.0)
      fail(join(w, "y_box"), "the decay interval must exclude 0");
    cfg.consistency = cc;
  }

  cfg.source = std::move(doc);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const ConfigOverrides& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(std::move(doc), overrides, path.parent_path());
}

}  // namespace fhjm
