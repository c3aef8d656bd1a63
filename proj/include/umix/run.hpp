#pragma once
// Config ingestion and command dispatch for the command line driver.

#include <chrono>
#include <cstdint>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "umix/congruence.hpp"
#include "umix/dolgopyat.hpp"
#include "umix/error.hpp"
#include "umix/flattening.hpp"
#include "umix/group.hpp"
#include "umix/mixing.hpp"
#include "umix/report.hpp"
#include "umix/sft.hpp"
#include "umix/thermo.hpp"

namespace umix {

inline const std::vector<std::string>& known_commands() {
  static const std::vector<std::string> c{"rpf",     "bowen",           "twist-gap", "cayley-gap",
                                          "flatten", "dolgopyat-check", "mixing"};
  return c;
}

// ---------------------------------------------------------------------------
// Field access with named errors.

namespace cfg {

inline Error bad(const std::string& field, const std::string& what) {
  return Error(Errc::ConfigParseError, "field '" + field + "': " + what);
}

inline const nlohmann::json& need(const nlohmann::json& j, const std::string& key, const std::string& path) {
  if (!j.is_object() || !j.contains(key)) throw bad(path + key, "missing");
  return j.at(key);
}

template <class T>
T as(const nlohmann::json& v, const std::string& field) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) throw bad(field, "expected true or false");
    } else if constexpr (std::is_same_v<T, double>) {
      if (!v.is_number()) throw bad(field, "expected a number");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) throw bad(field, "expected an integer");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) throw bad(field, "expected a string");
    }
    return v.get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw bad(field, e.what());
  }
}

template <class T>
T get(const nlohmann::json& j, const std::string& key, const T& dflt, const std::string& path = "") {
  if (!j.is_object() || !j.contains(key)) return dflt;
  return as<T>(j.at(key), path + key);
}

template <class T>
T req(const nlohmann::json& j, const std::string& key, const std::string& path = "") {
  return as<T>(need(j, key, path), path + key);
}

}  // namespace cfg

/// Parse JSON text; syntax errors carry the line and column.
inline nlohmann::json parse_config_text(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    size_t line = 1, col = 1;
    for (size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw Error(Errc::ConfigParseError, "line " + std::to_string(line) + ", column " + std::to_string(col) + ": " +
                                            e.what());
  }
}

inline nlohmann::json load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(Errc::IoError, "cannot read " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config_text(ss.str());
}

// ---------------------------------------------------------------------------
// Blocks.

inline Subshift subshift_from(const nlohmann::json& j) {
  const auto& b = cfg::need(j, "subshift", "");
  int n = cfg::req<int>(b, "alphabet_size", "subshift.");
  double theta = cfg::req<double>(b, "theta", "subshift.");
  const auto& t = cfg::need(b, "transition", "subshift.");
  if (!t.is_array()) throw cfg::bad("subshift.transition", "expected a list of rows");
  IntMatrix m;
  for (size_t i = 0; i < t.size(); ++i) {
    if (!t[i].is_array()) throw cfg::bad("subshift.transition[" + std::to_string(i) + "]", "expected a row");
    std::vector<int> row;
    for (size_t k = 0; k < t[i].size(); ++k)
      row.push_back(cfg::as<int>(t[i][k], "subshift.transition[" + std::to_string(i) + "][" + std::to_string(k) + "]"));
    m.push_back(row);
  }
  return build_subshift(n, m, theta);
}

inline ThermoConfig thermo_config_from(const nlohmann::json& j) {
  ThermoConfig c;
  nlohmann::json b = j.contains("thermo") ? j.at("thermo") : nlohmann::json::object();
  c.depth = cfg::get<int>(b, "depth", c.depth, "thermo.");
  c.power_iter_tol = cfg::get<double>(b, "tol", c.power_iter_tol, "thermo.");
  c.power_iter_max = cfg::get<int>(b, "max_iter", c.power_iter_max, "thermo.");
  c.a_window = cfg::get<double>(b, "a_window", c.a_window, "thermo.");
  c.lip_bound = cfg::get<double>(b, "lip_bound", c.lip_bound, "thermo.");
  validate(c);
  return c;
}

/// {"expr": "...", "depth": J} or {"table": [...], "depth": J}.
inline CylinderFunction function_from(const nlohmann::json& j, const std::string& key, const Subshift& s,
                                      int default_depth) {
  const auto& b = cfg::need(j, key, "");
  int depth = cfg::get<int>(b, "depth", default_depth, key + ".");
  if (b.contains("table")) {
    std::vector<double> v;
    for (const auto& x : b.at("table")) v.push_back(cfg::as<double>(x, key + ".table"));
    return table_function(s, depth, v);
  }
  return potential_table(cfg::req<std::string>(b, "expr", key + "."), s, depth);
}

inline FiniteGroup group_from_block(const nlohmann::json& b, const std::string& path) {
  std::string kind = cfg::req<std::string>(b, "kind", path);
  if (kind == "trivial") return cyclic_group(1);
  if (kind == "cyclic") return cyclic_group(cfg::req<int>(b, "q", path));
  if (kind == "sl2") return sl2_group(cfg::req<int>(b, "p", path));
  if (kind == "product") {
    std::vector<FiniteGroup> fs;
    const auto& f = cfg::need(b, "factors", path);
    for (size_t i = 0; i < f.size(); ++i) fs.push_back(group_from_block(f[i], path + "factors[" + std::to_string(i) + "]."));
    return product_group(fs);
  }
  throw cfg::bad(path + "kind", "unknown group kind '" + kind + "'");
}

inline FiniteGroup group_from(const nlohmann::json& j) { return group_from_block(cfg::need(j, "group", ""), "group."); }

inline int element_from(const FiniteGroup& g, const nlohmann::json& v, const std::string& field) {
  if (v.is_number_integer()) {
    int x = v.get<int>();
    if (x < 0 || x >= g.order()) throw cfg::bad(field, "element index out of range");
    return x;
  }
  int x = g.find_label(cfg::as<std::string>(v, field));
  if (x < 0) throw cfg::bad(field, "unknown group element '" + v.get<std::string>() + "'");
  return x;
}

/// generating | constant (value) | edges ([[i, j, element], ...]).
inline Cocycle cocycle_from(const nlohmann::json& j, const Subshift& s, const FiniteGroup& g) {
  nlohmann::json b = j.contains("cocycle") ? j.at("cocycle") : nlohmann::json{{"kind", "generating"}};
  std::string kind = cfg::req<std::string>(b, "kind", "cocycle.");
  if (g.order() == 1) return constant_cocycle(s, g, g.id());
  if (kind == "generating") return generating_cocycle(s, g);
  if (kind == "constant") return constant_cocycle(s, g, element_from(g, cfg::need(b, "value", "cocycle."), "cocycle.value"));
  if (kind == "edges") {
    std::map<std::pair<int, int>, int> m;
    for (const auto& e : cfg::need(b, "values", "cocycle.")) {
      if (!e.is_array() || e.size() != 3) throw cfg::bad("cocycle.values", "expected [i, j, element] triples");
      m[{cfg::as<int>(e[0], "cocycle.values"), cfg::as<int>(e[1], "cocycle.values")}] =
          element_from(g, e[2], "cocycle.values");
    }
    return Cocycle(s, g, m);
  }
  throw cfg::bad("cocycle.kind", "unknown cocycle kind '" + kind + "'");
}

inline Thermo thermo_from(const nlohmann::json& j, const Subshift& s) {
  ThermoConfig c = thermo_config_from(j);
  CylinderFunction tau = j.contains("roof") ? function_from(j, "roof", s, std::min(c.depth, 2))
                                            : potential_table("1", s, 1);
  return Thermo(s, tau, c);
}

inline ojson constants_json(const ThermoConstants& k) {
  return ojson{{"T0", k.T0},        {"A_f", k.A_f},         {"C_f", k.C_f},     {"tau_sup", k.tau_sup},
               {"tau_lip", k.tau_lip}, {"tau_lip_e", k.tau_lip_e}, {"f_sup", k.f_sup}, {"f_lip", k.f_lip},
               {"f_lip_e", k.f_lip_e}};
}

inline std::string word_text(const int* w, int len) {
  std::string s;
  for (int i = 0; i < len; ++i) s += std::to_string(w[i]) + (i + 1 < len ? " " : "");
  return s;
}

// ---------------------------------------------------------------------------
// Commands.

inline void run_rpf(const nlohmann::json& j, RunReport& r) {
  Subshift s = subshift_from(j);
  ThermoConfig c = thermo_config_from(j);
  CylinderFunction f = j.contains("potential") ? function_from(j, "potential", s, 1) : potential_table("0", s, 1);
  if (f.depth > c.depth + 1) throw Error(Errc::DepthMismatch, "potential deeper than K+1");
  Transfer op(s, c.depth);
  RpfData d = rpf_solve(op, op.on_ext(f), c);
  double hmin = *std::min_element(d.h.begin(), d.h.end());
  r.summary["lambda"] = d.lambda;
  r.summary["pressure"] = std::log(d.lambda);
  r.summary["h_min"] = hmin;
  r.summary["residual_h"] = d.residual_h;
  r.summary["residual_nu"] = d.residual_nu;
  r.summary["iterations"] = d.iterations;
  Table t{"rpf", {"cylinder", "h", "nu"}, {}};
  for (size_t i = 0; i < op.size(); ++i) t.add({word_text(op.cyl().word(i), op.depth()), d.h[i], d.nu[i]});
  r.tables.push_back(t);
}

inline void run_bowen(const nlohmann::json& j, RunReport& r) {
  Subshift s = subshift_from(j);
  Thermo th = thermo_from(j, s);
  const Normalized& n = th.normalized0();
  auto one = th.op().apply(exp_weights(n.f_ext), std::vector<double>(th.size(), 1.0));
  auto nu = th.op().apply_adjoint(exp_weights(n.f_ext), th.nuU());
  double r1 = 0.0, r2 = 0.0;
  for (size_t i = 0; i < th.size(); ++i) {
    r1 = std::max(r1, std::fabs(one[i] - 1.0));
    r2 += std::fabs(nu[i] - th.nuU()[i]);
  }
  GibbsReport g = gibbs_check(th, 1, th.depth());
  r.summary["delta"] = th.delta();
  r.summary["lambda0"] = th.base().lambda;
  r.summary["normalized_L1_residual"] = r1;
  r.summary["normalized_adjoint_residual"] = r2;
  r.summary["gibbs_c1"] = g.c1;
  r.summary["gibbs_c2"] = g.c2;
  r.summary["constants"] = constants_json(th.constants());
  Table t{"measure", {"cylinder", "nu_U", "h0", "tau"}, {}};
  auto tau = th.tau_cyl();
  for (size_t i = 0; i < th.size(); ++i)
    t.add({word_text(th.cyl().word(i), th.depth()), th.nuU()[i], th.base().h[i], tau[i]});
  r.tables.push_back(t);
}

inline FiberedFunction sector_function(const Thermo& th, const FiniteGroup& g, const std::string& sector,
                                       std::mt19937_64& rng) {
  FiberedFunction H(th.depth(), g.order(), th.size());
  H.zero_sum = true;
  if (sector.rfind("character:", 0) == 0) {
    if (g.kind() != "cyclic") throw Error(Errc::ValidationError, "character sectors need a cyclic group");
    auto chi = cyclic_character(g.order(), std::stoi(sector.substr(10)));
    for (size_t u = 0; u < th.size(); ++u)
      for (int x = 0; x < g.order(); ++x) H.fiber(u)[x] = chi[x];
    return H;
  }
  if (sector != "zero_sum") throw Error(Errc::ValidationError, "unknown sector '" + sector + "'");
  for (size_t u = 0; u < th.size(); ++u) {
    auto v = random_zero_sum_unit(g.order(), rng);
    std::copy(v.begin(), v.end(), H.fiber(u));
  }
  return H;
}

inline void run_twist_gap(const nlohmann::json& j, RunReport& r, std::mt19937_64& rng) {
  Subshift s = subshift_from(j);
  Thermo th = thermo_from(j, s);
  nlohmann::json b = j.contains("twist_gap") ? j.at("twist_gap") : nlohmann::json::object();
  int kmax = cfg::get<int>(b, "kmax", 30, "twist_gap.");
  double a = cfg::get<double>(b, "a", 0.0, "twist_gap.");
  double bb = cfg::get<double>(b, "b", 0.0, "twist_gap.");
  std::string sector = cfg::get<std::string>(b, "sector", "zero_sum", "twist_gap.");
  std::vector<int> levels;
  if (b.contains("levels"))
    for (const auto& q : b.at("levels")) levels.push_back(cfg::as<int>(q, "twist_gap.levels"));
  std::vector<FiniteGroup> groups;
  if (levels.empty())
    groups.push_back(group_from(j));
  else
    for (int q : levels) groups.push_back(level_group(cfg::get<std::string>(b, "group_kind", "sl2", "twist_gap."), q));
  Table t{"twist_gap", {"level", "k", "norm"}, {}};
  ojson lv = ojson::array();
  double lo = INFINITY, hi = 0.0;
  for (const auto& g : groups) {
    Cocycle c = cocycle_from(j, s, g);
    CongruenceOperator M(th, g, c, cd(a, bb));
    FiberedFunction H = sector_function(th, g, sector, rng);
    GapReport gr = twisted_decay(M, H, kmax, th.nuU());
    for (size_t k = 0; k < gr.norms.size(); ++k) t.add({static_cast<long long>(g.level()), static_cast<long long>(k), gr.norms[k]});
    lv.push_back(ojson{{"level", g.level()}, {"order", g.order()}, {"eta_hat", gr.eta_hat}, {"C", gr.C},
                       {"residual", gr.residual}, {"fit_from", gr.fit_from}, {"fit_to", gr.fit_to}});
    lo = std::min(lo, gr.eta_hat);
    hi = std::max(hi, gr.eta_hat);
  }
  r.summary["levels"] = lv;
  r.summary["eta_min"] = lo;
  r.summary["eta_max"] = hi;
  r.summary["constants"] = constants_json(th.constants());
  r.tables.push_back(t);
}

inline void run_cayley_gap(const nlohmann::json& j, RunReport& r) {
  FiniteGroup g = group_from(j);
  nlohmann::json b = j.contains("cayley_gap") ? j.at("cayley_gap") : nlohmann::json::object();
  std::vector<int> gens;
  if (b.contains("generators") && b.at("generators").is_array()) {
    for (const auto& x : b.at("generators")) gens.push_back(element_from(g, x, "cayley_gap.generators"));
  } else {
    std::string which = cfg::get<std::string>(b, "generators", "standard", "cayley_gap.");
    if (which != "standard") throw cfg::bad("cayley_gap.generators", "expected 'standard' or a list");
    auto [A, B] = standard_generators(g);
    gens = g.kind() == "cyclic" ? std::vector<int>{A} : std::vector<int>{A, B};
  }
  CayleyGraph cg(g, gens);
  CayleyGap gap = cayley_gap(cg);
  r.summary["order"] = g.order();
  r.summary["degree"] = gap.lambda1;
  r.summary["lambda1"] = gap.lambda1;
  r.summary["lambda2"] = gap.lambda2;
  r.summary["eps"] = gap.eps;
  r.summary["connected"] = gap.connected;
}

inline void run_flatten(const nlohmann::json& j, RunReport& r, std::mt19937_64& rng) {
  Subshift s = subshift_from(j);
  Thermo th = thermo_from(j, s);
  nlohmann::json b = j.contains("flatten") ? j.at("flatten") : nlohmann::json::object();
  FlattenParams p;
  if (b.contains("levels")) {
    p.levels.clear();
    for (const auto& q : b.at("levels")) p.levels.push_back(cfg::as<int>(q, "flatten.levels"));
  }
  p.group_kind = cfg::get<std::string>(b, "group_kind", p.group_kind, "flatten.");
  p.cocycle = cfg::get<std::string>(b, "cocycle", p.cocycle, "flatten.");
  p.trials = cfg::get<int>(b, "trials", p.trials, "flatten.");
  p.r_fixed = cfg::get<int>(b, "r", p.r_fixed, "flatten.");
  p.r_extra = cfg::get<int>(b, "r_extra", p.r_extra, "flatten.");
  p.p = cfg::get<int>(b, "p", p.p, "flatten.");
  p.head = cfg::get<int>(b, "head", p.head, "flatten.");
  p.b = cfg::get<double>(b, "b", p.b, "flatten.");
  p.cayley_cap = cfg::get<int>(b, "cayley_cap", p.cayley_cap, "flatten.");
  if (p.cocycle != "generating" && p.cocycle != "constant") throw cfg::bad("flatten.cocycle", "expected generating or constant");
  FlattenResult res = flattening_experiment(th, p, rng);
  Table rows{"flatten_trials", {"q", "order", "r", "trial", "ratio"}, {}};
  for (const auto& x : res.rows)
    rows.add({static_cast<long long>(x.q), static_cast<long long>(x.order), static_cast<long long>(x.r),
              static_cast<long long>(x.trial), x.ratio});
  Table lv{"flatten_levels", {"q", "order", "r", "paths", "max_ratio", "lambda2", "eps", "generates"}, {}};
  for (const auto& x : res.levels) {
    lv.add({static_cast<long long>(x.q), static_cast<long long>(x.order), static_cast<long long>(x.r),
            static_cast<long long>(x.paths), x.max_ratio, x.lambda2, x.eps, static_cast<long long>(x.generates)});
    if (!x.warning.empty()) r.warnings.push_back("q=" + std::to_string(x.q) + ": " + x.warning);
  }
  r.summary["slope"] = res.slope;
  r.summary["slope_se"] = res.slope_se;
  r.summary["cocycle"] = p.cocycle;
  r.summary["p"] = p.p;
  r.tables.push_back(rows);
  r.tables.push_back(lv);
}

inline DolgopyatInputs dolgopyat_inputs_from(const nlohmann::json& b) {
  DolgopyatInputs in;
  const std::string P = "dolgopyat.";
  in.a = cfg::get<double>(b, "a", in.a, P);
  in.b = cfg::get<double>(b, "b", in.b, P);
  in.ell0 = cfg::get<int>(b, "ell0", in.ell0, P);
  in.m1 = cfg::get<int>(b, "m1", in.m1, P);
  in.m0 = cfg::get<int>(b, "m0", in.m0, P);
  in.p1 = cfg::get<int>(b, "p1", in.p1, P);
  in.u0_symbol = cfg::get<int>(b, "u0_symbol", in.u0_symbol, P);
  in.delta0 = cfg::get<double>(b, "delta0", in.delta0, P);
  in.r0 = cfg::get<double>(b, "r0", in.r0, P);
  in.delta1 = cfg::get<double>(b, "delta1", in.delta1, P);
  in.slack = cfg::get<double>(b, "slack", in.slack, P);
  return in;
}

inline ojson dolgopyat_constants_json(const DolgopyatConstants& k) {
  const auto& h = k.hyp;
  return ojson{{"c0", h.c0},
               {"kappa1", h.kappa1},
               {"kappa2", h.kappa2},
               {"rho", h.rho},
               {"p0", h.p0},
               {"p1", k.in.p1},
               {"m1", k.in.m1},
               {"T0", k.T0},
               {"A_f", k.A_f},
               {"A0", k.A0},
               {"E", k.E},
               {"eps1", k.eps1},
               {"eps1_terms", {k.eps1_terms[0], k.eps1_terms[1], k.eps1_terms[2]}},
               {"m", k.m},
               {"m_terms", {k.m_terms[0], k.m_terms[1], k.m_terms[2]}},
               {"mu", k.mu},
               {"mu_terms", {k.mu_terms[0], k.mu_terms[1], k.mu_terms[2]}},
               {"b0", k.b0},
               {"gibbs_c1", k.c1},
               {"gibbs_c2", k.c2},
               {"eta_wdense", k.eta_wdense},
               {"eta_theory", k.eta_theory}};
}

inline void run_dolgopyat(const nlohmann::json& j, RunReport& r, std::mt19937_64& rng) {
  Subshift s = subshift_from(j);
  Thermo th = thermo_from(j, s);
  FiniteGroup g = j.contains("group") ? group_from(j) : cyclic_group(1);
  Cocycle c = cocycle_from(j, s, g);
  nlohmann::json b = j.contains("dolgopyat") ? j.at("dolgopyat") : nlohmann::json::object();
  DolgopyatInputs in = dolgopyat_inputs_from(b);
  int trials = cfg::get<int>(b, "trials", 200, "dolgopyat.");
  int pairs = cfg::get<int>(b, "pairs", 50, "dolgopyat.");
  long tri = cfg::get<long>(b, "triangle_pairs", 100000, "dolgopyat.");
  DolgopyatConstants k = solve_constants(th, in);
  r.summary["constants"] = dolgopyat_constants_json(k);
  r.summary["feasible"] = true;
  PartitionXi P = build_partition_xi(in.b, k, th);
  ojson part{{"b", P.b},
             {"cap", P.cap},
             {"C_cells", P.C.size()},
             {"D_cells", P.D.size()},
             {"X_cells", P.X.size()},
             {"diameter_violations", P.violations},
             {"notes", P.notes}};
  ojson secs = ojson::array();
  for (const auto& w : P.sections) secs.push_back(word_text(w.data(), static_cast<int>(w.size())));
  part["sections"] = secs;
  r.summary["partition"] = part;
  ContractionReport cr = contraction_check(th, P, k, trials, rng);
  r.summary["contraction"] = ojson{{"trials", cr.trials},
                                   {"eta_hat", cr.eta_hat},
                                   {"eta_const", cr.eta_const},
                                   {"eta_theory", cr.eta_theory},
                                   {"cone_violations", cr.cone_violations},
                                   {"wdense_failures", cr.wdense_failures},
                                   {"wdense_min_ratio", cr.wdense_min_ratio},
                                   {"eta_wdense", cr.eta_wdense},
                                   {"certificate_ok", cr.certificate_ok},
                                   {"trapped_failures", cr.trapped_failures},
                                   {"beta_failures", cr.beta_failures},
                                   {"beta_lip_max", cr.beta_lip_max},
                                   {"beta_lip_bound", cr.beta_lip_bound}};
  DominationSummary ds = domination_trials(th, g, c, P, k, pairs, rng);
  r.summary["domination"] = ojson{{"pairs", ds.pairs},
                                  {"selected", ds.selected},
                                  {"selection_failures", ds.selection_failures},
                                  {"hypothesis_failures", ds.hypothesis_failures},
                                  {"pointwise_violations", ds.pointwise_violations},
                                  {"lip_violations", ds.lip_violations},
                                  {"prelim_violations", ds.prelim_violations},
                                  {"max_pointwise_ratio", ds.max_pointwise},
                                  {"witnesses", ds.witnesses}};
  Selection us = uniform_fiber_selection(th, g, c, P, k, rng);
  r.summary["uniform_fiber_selection"] =
      ojson{{"ok", us.ok()}, {"failed_cells", us.failed_cells.size()}, {"selected", us.J.size()}};
  if (!us.ok()) r.warnings.push_back("uniform-fiber selection failed: roof looks degenerate for this b");
  Branches br(th, in.a, k.m, &P, &c, &g);
  SeparationReport sep = separation_diagnostic(P, k, br);
  r.summary["separation"] = ojson{{"min_separation", sep.min_separation},
                                  {"threshold", sep.threshold},
                                  {"max_variation", sep.max_variation},
                                  {"meets_threshold", sep.lnic_like()},
                                  {"reverse_bound_ok", sep.reverse_ok()}};
  TriangleTrials tt = strong_triangle_trials(tri, rng);
  r.summary["strong_triangle"] = ojson{{"pairs", tt.pairs}, {"violations", tt.violations}};
  Table cells{"partition_cells", {"kind", "index", "word", "diameter"}, {}};
  auto add = [&](const char* kind, const std::vector<Word>& ws) {
    for (size_t i = 0; i < ws.size(); ++i)
      cells.add({std::string(kind), static_cast<long long>(i), word_text(ws[i].data(), static_cast<int>(ws[i].size())),
                 s.diameter(ws[i])});
  };
  add("C", P.C);
  add("D", P.D);
  add("Z", P.Z);
  add("X", P.X);
  r.tables.push_back(cells);
}

/// {"spatial": expr, "fiber": "ones" | "zero_sum" | [values], "poly": [...], "support": [lo, hi]}.
inline Observable observable_from(const nlohmann::json& b, const std::string& path, const Thermo& th,
                                  const FiniteGroup& g) {
  std::string sx = cfg::get<std::string>(b, "spatial", "1", path);
  CylinderFunction sp = potential_table(sx, th.shift(), th.depth());
  std::vector<double> fiber;
  if (b.contains("fiber") && b.at("fiber").is_array()) {
    for (const auto& x : b.at("fiber")) fiber.push_back(cfg::as<double>(x, path + "fiber"));
    if (static_cast<int>(fiber.size()) != g.order()) throw cfg::bad(path + "fiber", "one value per group element");
  } else {
    std::string f = cfg::get<std::string>(b, "fiber", "ones", path);
    if (f == "ones")
      fiber.assign(g.order(), 1.0);
    else if (f == "zero_sum")
      fiber = zero_sum_fiber(g);
    else
      throw cfg::bad(path + "fiber", "expected ones, zero_sum or a list");
  }
  std::vector<double> poly{1.0};
  if (b.contains("poly")) {
    poly.clear();
    for (const auto& x : b.at("poly")) poly.push_back(cfg::as<double>(x, path + "poly"));
  }
  double lo = 0.0, hi = std::numeric_limits<double>::infinity();
  if (b.contains("support")) {
    const auto& s = b.at("support");
    if (!s.is_array() || s.size() != 2) throw cfg::bad(path + "support", "expected [lo, hi]");
    lo = cfg::as<double>(s[0], path + "support");
    hi = cfg::as<double>(s[1], path + "support");
  }
  return product_observable(th, sp.values, fiber, poly, lo, hi);
}

inline void run_mixing(const nlohmann::json& j, RunReport& r) {
  Subshift s = subshift_from(j);
  Thermo th = thermo_from(j, s);
  FiniteGroup g = j.contains("group") ? group_from(j) : cyclic_group(1);
  Cocycle c = cocycle_from(j, s, g);
  nlohmann::json b = j.contains("mixing") ? j.at("mixing") : nlohmann::json::object();
  Observable phi = observable_from(b.value("phi", nlohmann::json::object()), "mixing.phi.", th, g);
  Observable psi = observable_from(b.value("psi", nlohmann::json::object()), "mixing.psi.", th, g);
  ForwardChain ch(th, g, c);
  int kmax = cfg::get<int>(b, "kmax", 60, "mixing.");
  Table lt{"laplace", {"a", "b", "series_re", "series_im", "direct_re", "direct_im", "rel_err", "series_tail"}, {}};
  double worst = 0.0;
  if (b.contains("xi_grid")) {
    for (const auto& x : b.at("xi_grid")) {
      if (!x.is_array() || x.size() != 2) throw cfg::bad("mixing.xi_grid", "expected [re, im] pairs");
      cd xi(cfg::as<double>(x[0], "mixing.xi_grid"), cfg::as<double>(x[1], "mixing.xi_grid"));
      LaplaceValue sr = laplace_series(th, g, c, phi, psi, xi, kmax);
      LaplaceValue dr = laplace_direct(ch, phi, psi, xi);
      double rel = std::abs(sr.value - dr.value) / std::max(std::abs(dr.value), 1e-300);
      worst = std::max(worst, rel);
      lt.add({xi.real(), xi.imag(), sr.value.real(), sr.value.imag(), dr.value.real(), dr.value.imag(), rel, sr.tail});
    }
  }
  r.summary["laplace_max_rel_err"] = worst;
  r.tables.push_back(lt);
  Table ct{"correlation", {"t", "upsilon", "upsilon0", "upsilon1"}, {}};
  std::vector<double> grid;
  if (b.contains("t_grid")) {
    const auto& tg = b.at("t_grid");
    double from = cfg::get<double>(tg, "from", 0.0, "mixing.t_grid.");
    double to = cfg::req<double>(tg, "to", "mixing.t_grid.");
    double step = cfg::req<double>(tg, "step", "mixing.t_grid.");
    if (!(step > 0.0) || to < from) throw Error(Errc::ValidationError, "t_grid needs step > 0 and to >= from");
    for (long i = 0;; ++i) {
      double t = from + step * static_cast<double>(i);
      if (t > to + 1e-12) break;
      grid.push_back(t);
    }
  }
  int cap = cfg::get<int>(b, "unroll_cap", grid.empty() ? -1 : default_unroll_cap(grid.back(), ch.tau_min()), "mixing.");
  double split = 0.0;
  for (double t : grid) {
    CorrelationValue v = correlation_direct(ch, phi, psi, t, cap);
    ct.add({t, v.total, v.upsilon0, v.upsilon1});
    if (t >= ch.tau_max()) split = std::max(split, std::fabs(v.total - v.upsilon0));
  }
  r.summary["tau_max"] = ch.tau_max();
  r.summary["tau_min"] = ch.tau_min();
  r.summary["split_defect"] = split;
  r.tables.push_back(ct);
  if (cfg::get<bool>(b, "fit", false, "mixing.") && !grid.empty()) {
    DecayFit f = decay_fit(ch, phi, psi, grid, 1e-12, cap);
    r.summary["decay"] = ojson{{"eta_hat", f.eta_hat},
                               {"C_hat", f.C_hat},
                               {"residual", f.residual},
                               {"points", f.points},
                               {"all_below_floor", f.all_below_floor}};
    if (f.all_below_floor) r.warnings.push_back("correlation below the fit floor on the whole tail");
  }
}

// ---------------------------------------------------------------------------

inline bool is_validation_error(Errc e) {
  switch (e) {
    case Errc::ConfigParseError:
    case Errc::ValidationError:
    case Errc::NonSquareMatrix:
    case Errc::DeadSymbol:
    case Errc::ThetaOutOfRange:
    case Errc::DepthZero:
    case Errc::MalformedExpression:
    case Errc::NotPrime:
    case Errc::OrderTooLarge:
    case Errc::NotMixing:
    case Errc::NonPositiveRoof:
    case Errc::InadmissibleWord:
    case Errc::DepthMismatch:
    case Errc::LengthMismatch:
    case Errc::AOutOfWindow:
      return true;
    default:
      return false;
  }
}

/// Dispatch one parsed config; the summary echoes the command and seed.
inline RunReport run(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(Errc::ConfigParseError, "config must be a JSON object");
  std::string cmd = cfg::req<std::string>(j, "command");
  if (std::find(known_commands().begin(), known_commands().end(), cmd) == known_commands().end())
    throw cfg::bad("command", "unknown command '" + cmd + "'");
  std::uint64_t seed = cfg::get<std::uint64_t>(j, "seed", 1);
  std::mt19937_64 rng(seed);
  RunReport r;
  r.summary["command"] = cmd;
  r.summary["seed"] = seed;
  auto t0 = std::chrono::steady_clock::now();
  if (cmd == "rpf") run_rpf(j, r);
  else if (cmd == "bowen") run_bowen(j, r);
  else if (cmd == "twist-gap") run_twist_gap(j, r, rng);
  else if (cmd == "cayley-gap") run_cayley_gap(j, r);
  else if (cmd == "flatten") run_flatten(j, r, rng);
  else if (cmd == "dolgopyat-check") run_dolgopyat(j, r, rng);
  else run_mixing(j, r);
  r.timings.emplace_back(cmd, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  return r;
}

}  // namespace umix
