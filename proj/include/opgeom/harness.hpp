// Configuration ingestion, preset catalog, deterministic suite orchestration
// and report emission for the verification CLI.

#pragma once

#include <algorithm>
#include <chrono>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "opgeom/dirac.hpp"

namespace opgeom {

using json = nlohmann::ordered_json;

struct VerificationConfig {
  bool sigma_mode = true;            // sigma route vs raw (P,Q) route
  SigmaField sigma;                  // sigma route
  std::array<MatrixField2, 4> rawP;  // raw route
  MatrixField2 rawQ;
  MatrixField2 csub;
  bool has_csub = false;
  bool has_A = false;
  std::array<Expr, 4> A;  // declared potential; theorem1 override when present
  Expr rho = Expr::constant(1.0);
  ChartBox chart;
  std::vector<GaugeField> gauges;
  std::vector<double> mass_values{0.0, 1.0, 2.5};
  std::vector<std::string> suites;  // empty = all
  std::map<std::string, double> tolerances;
  std::uint64_t seed = 20240;
  std::string digest = "0000000000000000";
};

inline const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names = {
      "adjugation",  "appendixE",       "bispinor",  "clifford",  "csub_laws",
      "f_covariance", "f_homogeneity",  "lorentz",   "metric",    "nondegenerate",
      "oracle_fd",   "potential_gauge", "sandwich",  "selfadjoint", "theorem1"};
  return names;
}

inline double default_tolerance(const std::string& suite) {
  // algebraic identities 1e-10 .. 1e-12; first-derivative identities 1e-7 ..
  // 1e-9; anything mixing symbolic and finite-difference paths 1e-6
  static const std::map<std::string, double> tol = {
      {"selfadjoint", 1e-10}, {"nondegenerate", 0.0}, {"metric", 1e-10},
      {"clifford", 1e-12},    {"sandwich", 1e-12},    {"f_covariance", 1e-7},
      {"f_homogeneity", 1e-9}, {"csub_laws", 1e-7},   {"potential_gauge", 1e-7},
      {"adjugation", 1e-7},   {"lorentz", 1e-7},      {"theorem1", 1e-7},
      {"appendixE", 1e-7},    {"bispinor", 1e-7},     {"oracle_fd", 1e-6}};
  return tol.at(suite);
}

struct SuiteReport {
  std::string suite;
  bool pass = false;
  double max_residual = 0.0;
  Point4 worst_x{};
  Covector4 worst_p{};
  int samples = 0;
  double wall_time_s = 0.0;
  std::string error;  // nonempty when the suite aborted
};

// ---------------------------------------------------------------------------
// config loading

namespace detail {

inline std::string fnv1a64_hex(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

inline Expr parse_expr_field(const json& j, const std::string& where) {
  if (!j.is_string())
    throw ValidationError(where + ": expected an expression string");
  try {
    return Expr::parse(j.get<std::string>());
  } catch (const ParseError& e) {
    throw ValidationError(where + ": " + e.what());
  }
}

inline MatrixField2 parse_matrix_field(const json& j, const std::string& where) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_array() || j[0].size() != 2 ||
      !j[1].is_array() || j[1].size() != 2)
    throw ValidationError(where + ": expected a 2x2 array of expression strings");
  MatrixField2 f;
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c)
      f(r, c) = parse_expr_field(j[r][c],
                                 where + "[" + std::to_string(r) + "][" + std::to_string(c) + "]");
  return f;
}

}  // namespace detail

// Standard gauge set used when a config does not specify any gauge fields:
// a conformal factor, a phase, a constant boost, an x-dependent boost and the
// x-dependent nilpotent SL(2,C) field.
inline std::vector<GaugeField> default_gauges() {
  std::vector<GaugeField> g;
  g.push_back(GaugeField::psi(Expr::parse("0.1*x2")));
  g.push_back(GaugeField::phi(Expr::parse("0.2*x3")));
  MatrixField2 boost;
  boost(0, 0) = Expr::constant(std::exp(0.15));
  boost(1, 1) = Expr::constant(std::exp(-0.15));
  g.push_back(GaugeField::sl2c(boost));
  MatrixField2 boost_x;
  boost_x(0, 0) = Expr::parse("exp(0.2*x1)");
  boost_x(1, 1) = Expr::parse("exp(-0.2*x1)");
  g.push_back(GaugeField::sl2c(boost_x));
  MatrixField2 nil;
  nil(0, 0) = Expr::constant(1.0);
  nil(0, 1) = Expr::parse("0.3*x1");
  nil(1, 1) = Expr::constant(1.0);
  g.push_back(GaugeField::sl2c(nil));
  return g;
}

inline VerificationConfig load_config_json(const json& j, const std::string& digest) {
  VerificationConfig cfg;
  cfg.digest = digest;

  if (!j.contains("operator")) throw ValidationError("config: missing 'operator' block");
  const json& opj = j["operator"];
  if (opj.contains("sigma")) {
    if (!opj["sigma"].is_array() || opj["sigma"].size() != 4)
      throw ValidationError("operator.sigma: expected 4 matrices");
    cfg.sigma_mode = true;
    for (int a = 0; a < 4; ++a)
      cfg.sigma[a] =
          detail::parse_matrix_field(opj["sigma"][a], "operator.sigma[" + std::to_string(a) + "]");
  } else if (opj.contains("P") && opj.contains("Q")) {
    cfg.sigma_mode = false;
    if (!opj["P"].is_array() || opj["P"].size() != 4)
      throw ValidationError("operator.P: expected 4 matrices");
    for (int a = 0; a < 4; ++a)
      cfg.rawP[a] = detail::parse_matrix_field(opj["P"][a], "operator.P[" + std::to_string(a) + "]");
    cfg.rawQ = detail::parse_matrix_field(opj["Q"], "operator.Q");
  } else {
    throw ValidationError("operator: expected either 'sigma' or raw 'P' and 'Q'");
  }

  if (j.contains("rho")) cfg.rho = detail::parse_expr_field(j["rho"], "rho");

  if (j.contains("chart")) {
    const json& c = j["chart"];
    if (c.contains("lo"))
      for (int a = 0; a < 4; ++a) cfg.chart.lo[a] = c["lo"].at(a).get<double>();
    if (c.contains("hi"))
      for (int a = 0; a < 4; ++a) cfg.chart.hi[a] = c["hi"].at(a).get<double>();
    if (c.contains("seed")) cfg.chart.seed = c["seed"].get<std::uint64_t>();
    if (c.contains("sample_count")) cfg.chart.sample_count = c["sample_count"].get<int>();
  }
  cfg.chart.validate();

  if (j.contains("csub")) {
    cfg.csub = detail::parse_matrix_field(j["csub"], "csub");
    cfg.has_csub = true;
  }
  if (j.contains("A")) {
    if (!j["A"].is_array() || j["A"].size() != 4)
      throw ValidationError("A: expected 4 expression strings");
    for (int a = 0; a < 4; ++a)
      cfg.A[a] = detail::parse_expr_field(j["A"][a], "A[" + std::to_string(a) + "]");
    cfg.has_A = true;
  }

  if (j.contains("gauges") && !j["gauges"].empty()) {
    int idx = 0;
    for (const json& gj : j["gauges"]) {
      std::string where = "gauges[" + std::to_string(idx++) + "]";
      std::string kind = gj.value("kind", "");
      if (kind == "scalar_psi")
        cfg.gauges.push_back(GaugeField::psi(detail::parse_expr_field(gj.at("psi"), where + ".psi")));
      else if (kind == "phase_phi")
        cfg.gauges.push_back(GaugeField::phi(detail::parse_expr_field(gj.at("phi"), where + ".phi")));
      else if (kind == "sl2c_R")
        cfg.gauges.push_back(GaugeField::sl2c(detail::parse_matrix_field(gj.at("R"), where + ".R")));
      else if (kind == "gl2c_Q")
        cfg.gauges.push_back(GaugeField::gl2c(detail::parse_matrix_field(gj.at("Q"), where + ".Q")));
      else
        throw ValidationError(where + ": unknown gauge kind '" + kind + "'");
    }
  } else {
    cfg.gauges = default_gauges();
  }

  if (j.contains("mass_values")) {
    cfg.mass_values.clear();
    for (const json& m : j["mass_values"]) {
      double v = m.get<double>();
      if (v < 0.0) throw ValidationError("mass_values: mass must be non-negative");
      cfg.mass_values.push_back(v);
    }
    if (cfg.mass_values.empty()) throw ValidationError("mass_values: must not be empty");
  }

  if (j.contains("suites")) {
    for (const json& s : j["suites"]) {
      std::string name = s.get<std::string>();
      if (std::find(suite_names().begin(), suite_names().end(), name) == suite_names().end())
        throw ValidationError("suites: unknown suite '" + name + "'");
      cfg.suites.push_back(name);
    }
  }

  if (j.contains("tolerances")) {
    for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it) {
      if (std::find(suite_names().begin(), suite_names().end(), it.key()) == suite_names().end())
        throw ValidationError("tolerances: unknown suite '" + it.key() + "'");
      cfg.tolerances[it.key()] = it.value().get<double>();
    }
  }

  if (j.contains("seed")) cfg.seed = j["seed"].get<std::uint64_t>();

  // -- validation of field contents over the chart box -----------------------
  auto check_expr = [&cfg](const Expr& e, const std::string& where) {
    try {
      validate_field(e, cfg.chart);
    } catch (const ValidationError& err) {
      throw ValidationError(where + ": " + err.what());
    }
  };

  Rng rng(cfg.chart.seed);
  const int nval = std::max(16, cfg.chart.sample_count / 4);

  if (cfg.sigma_mode) {
    for (int a = 0; a < 4; ++a)
      for (int k = 0; k < 4; ++k)
        check_expr(cfg.sigma[a].e[k], "operator.sigma[" + std::to_string(a) + "]");
    for (int i = 0; i < nval; ++i) {
      Point4 x = rng.point_in(cfg.chart);
      for (int a = 0; a < 4; ++a) {
        if (cfg.sigma[a].eval(x).hermiticity_residual() > kTolHerm)
          throw ValidationError("operator.sigma[" + std::to_string(a) +
                                "]: not Hermitian at a sampled chart point");
      }
      try {
        (void)frame_at(cfg.sigma, x);
      } catch (const DegeneracyError& e) {
        throw ValidationError(std::string("operator.sigma: ") + e.what());
      }
    }
  } else {
    for (int a = 0; a < 4; ++a)
      for (int k = 0; k < 4; ++k)
        check_expr(cfg.rawP[a].e[k], "operator.P[" + std::to_string(a) + "]");
    for (int k = 0; k < 4; ++k) check_expr(cfg.rawQ.e[k], "operator.Q");
  }

  check_expr(cfg.rho, "rho");
  for (int i = 0; i < nval; ++i) {
    Point4 x = rng.point_in(cfg.chart);
    Complex r = cfg.rho.eval(x);
    if (std::abs(r.imag()) > 1e-12 * (1.0 + std::abs(r.real())) || r.real() <= 0.0)
      throw ValidationError("rho: density must be strictly positive real over the chart");
  }

  if (cfg.has_csub) {
    for (int k = 0; k < 4; ++k) check_expr(cfg.csub.e[k], "csub");
    for (int i = 0; i < nval; ++i) {
      Point4 x = rng.point_in(cfg.chart);
      if (cfg.csub.eval(x).hermiticity_residual() > kTolHerm)
        throw ValidationError("csub: not Hermitian at a sampled chart point");
    }
  }
  if (cfg.has_A) {
    for (int a = 0; a < 4; ++a) {
      check_expr(cfg.A[a], "A[" + std::to_string(a) + "]");
      for (int i = 0; i < nval; ++i) {
        Complex v = cfg.A[a].eval(rng.point_in(cfg.chart));
        if (std::abs(v.imag()) > 1e-12 * (1.0 + std::abs(v.real())))
          throw ValidationError("A[" + std::to_string(a) + "]: potential must be real-valued");
      }
    }
  }

  int gidx = 0;
  for (const GaugeField& g : cfg.gauges) {
    try {
      validate_gauge(g, cfg.chart);
    } catch (const ValidationError& e) {
      throw ValidationError("gauges[" + std::to_string(gidx) + "]: " + e.what());
    }
    ++gidx;
  }

  // csub derived from A when only A is given (sigma route)
  if (cfg.sigma_mode && !cfg.has_csub) {
    MatrixField2 c;
    if (cfg.has_A)
      for (int a = 0; a < 4; ++a) c = c + cfg.A[a] * cfg.sigma[a];
    cfg.csub = c;
    cfg.has_csub = true;
  }

  return cfg;
}

inline VerificationConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  std::string bytes = buf.str();
  json j;
  try {
    j = json::parse(bytes);
  } catch (const std::exception& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  return load_config_json(j, detail::fnv1a64_hex(bytes));
}

inline RawOperator build_operator(const VerificationConfig& cfg) {
  if (cfg.sigma_mode) return reconstruct(cfg.sigma, cfg.csub, cfg.rho);
  RawOperator op;
  op.P = cfg.rawP;
  op.Q = cfg.rawQ;
  op.rho = cfg.rho;
  return op;
}

// ---------------------------------------------------------------------------
// suite runner

namespace detail {

struct ResidualTracker {
  double max_residual = 0.0;
  Point4 worst_x{};
  Covector4 worst_p{};
  int samples = 0;

  void record(double r, const Point4& x, const Covector4& p = Covector4{}) {
    if (r > max_residual) {
      max_residual = r;
      worst_x = x;
      worst_p = p;
    }
  }
};

struct SuiteContext {
  const VerificationConfig& cfg;
  RawOperator op;
  SigmaField sigma;

  explicit SuiteContext(const VerificationConfig& c)
      : cfg(c), op(build_operator(c)), sigma(sigma_fields(op)) {}

  std::uint64_t suite_seed(const std::string& name) const {
    return cfg.seed ^ std::hash<std::string>{}(name);
  }
  int x_count() const { return cfg.chart.sample_count; }

  std::vector<GaugeField> gauges_of(GaugeField::Kind k) const {
    std::vector<GaugeField> out;
    for (const auto& g : cfg.gauges)
      if (g.kind == k) out.push_back(g);
    return out;
  }
};

// a random constant Hermitian non-degenerate symbol (as matrices)
inline std::array<Mat2, 4> random_symbol(Rng& rng) {
  for (;;) {
    Mat4r e{};
    for (int j = 0; j < 4; ++j)
      for (int a = 0; a < 4; ++a) e[j][a] = rng.uniform(-1.5, 1.5);
    if (std::abs(mat4_det(e)) < 0.25) continue;
    return sigma_from_frame(e);
  }
}

inline Mat2 random_matrix(Rng& rng) {
  Mat2 m;
  for (int k = 0; k < 4; ++k)
    m.m[k] = Complex(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
  return m;
}

using SuiteFn = std::function<void(const SuiteContext&, Rng&, ResidualTracker&)>;

inline void suite_selfadjoint(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    Covector4 p = rng.covector();
    double r = principal_symbol(c.op, x, p).hermiticity_residual();
    r = std::max(r, subprincipal_symbol(c.op, x).hermiticity_residual());
    t.record(r, x, p);
    ++t.samples;
  }
}

inline void suite_nondegenerate(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  double min_det = std::numeric_limits<double>::infinity();
  Point4 worst{};
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    auto s = eval_fields(c.sigma, x);
    Mat4r e{};
    for (int a = 0; a < 4; ++a) {
      e[0][a] = s[a](1, 0).real();
      e[1][a] = s[a](1, 0).imag();
      e[2][a] = 0.5 * (s[a](0, 0) - s[a](1, 1)).real();
      e[3][a] = 0.5 * s[a].trace().real();
    }
    double d = std::abs(mat4_det(e));
    if (d < min_det) {
      min_det = d;
      worst = x;
    }
    ++t.samples;
  }
  // degeneracy defect: positive when the sampled minimum falls below the
  // threshold, zero otherwise
  t.record(std::max(0.0, kTolDegenerate - min_det), worst);
}

inline void suite_metric(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    MetricPair mp = metric_at(c.sigma, x);
    double r = std::max({mp.twopath_residual, mp.orthonormality_residual, mp.inverse_residual,
                         mp.imag_residual, mp.lorentzian ? 0.0 : 1.0});
    t.record(r, x);
    ++t.samples;
  }
}

inline void suite_clifford(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    Covector4 p = rng.covector();
    Covector4 q = rng.covector();
    t.record(clifford_residual(c.sigma, x, p, q), x, p);
    ++t.samples;
    auto s = random_symbol(rng);
    t.record(clifford_residual_matrices(s, metric_from_matrices(s).g_up, rng.covector(),
                                        rng.covector()),
             x, p);
    ++t.samples;
  }
}

inline void suite_sandwich(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    Mat2 P = random_matrix(rng);
    auto [r1, r2] = pauli_sandwich_residuals(c.sigma, x, P);
    t.record(std::max(r1, r2), x);
    ++t.samples;
    auto s = random_symbol(rng);
    auto [r3, r4] =
        pauli_sandwich_residuals_matrices(s, metric_from_matrices(s).g_cov, random_matrix(rng));
    t.record(std::max(r3, r4), x);
    ++t.samples;
    t.record(adjugate_frame_relation(c.sigma, x), x);
  }
}

inline void suite_f_covariance(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  auto rs = c.gauges_of(GaugeField::Kind::Sl2cR);
  if (rs.empty()) throw ValidationError("f_covariance: no sl2c_R gauge field configured");
  for (const auto& g : rs)
    for (int i = 0; i < c.x_count(); ++i) {
      Point4 x = rng.point_in(c.cfg.chart);
      t.record(f_covariance_residual(c.sigma, g.mat, x), x);
      ++t.samples;
    }
}

inline void suite_f_homogeneity(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  auto ps = c.gauges_of(GaugeField::Kind::ScalarPsi);
  if (ps.empty()) throw ValidationError("f_homogeneity: no scalar_psi gauge field configured");
  for (const auto& g : ps)
    for (int i = 0; i < c.x_count(); ++i) {
      Point4 x = rng.point_in(c.cfg.chart);
      t.record(f_homogeneity_residual(c.sigma, g.scalar, x), x);
      ++t.samples;
    }
}

inline void suite_csub_laws(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  bool any = false;
  for (const auto& g : c.cfg.gauges) {
    for (int i = 0; i < c.x_count(); ++i) {
      Point4 x = rng.point_in(c.cfg.chart);
      if (g.kind != GaugeField::Kind::Gl2cQ) {
        t.record(csub_law_residual(c.op, g, x), x);
        ++t.samples;
        any = true;
      }
      t.record(subprincipal_law_residual(c.op, g, x), x);
      ++t.samples;
      any = true;
    }
  }
  if (!any) throw ValidationError("csub_laws: no gauge fields configured");
}

inline void suite_potential_gauge(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    t.record(extract_A_at(c.op, x).residual, x);
    ++t.samples;
  }
  for (const auto& g : c.cfg.gauges) {
    if (g.kind == GaugeField::Kind::Gl2cQ) continue;
    for (int i = 0; i < c.x_count(); ++i) {
      Point4 x = rng.point_in(c.cfg.chart);
      t.record(potential_law_residual(c.op, g, x), x);
      ++t.samples;
    }
  }
}

inline void suite_adjugation(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  auto rs = c.gauges_of(GaugeField::Kind::Sl2cR);
  auto psis = c.gauges_of(GaugeField::Kind::ScalarPsi);
  auto phis = c.gauges_of(GaugeField::Kind::PhasePhi);
  if (rs.empty() || psis.empty() || phis.empty())
    throw ValidationError("adjugation: needs sl2c_R, scalar_psi and phase_phi gauge fields");
  const int nx = std::max(4, c.x_count() / 8);
  std::vector<Point4> xs;
  std::vector<Covector4> ps;
  for (int i = 0; i < nx; ++i) {
    xs.push_back(rng.point_in(c.cfg.chart));
    ps.push_back(rng.covector());
  }
  for (const auto& g : rs) {
    AdjugationReport rep =
        adjugation_properties(c.op, g.mat, psis[0].scalar, phis[0].scalar, xs, ps);
    double r = std::max({rep.sl2c_residual, rep.psi_residual, rep.phi_residual,
                         rep.involution_residual});
    t.record(r, xs[0], ps[0]);
    t.samples += nx;
  }
  // f anticommutes with adjugation
  SigmaField tilde = adjugate_fields(c.sigma);
  for (const Point4& x : xs) {
    t.record((f_at(c.sigma, x).adjugate() + f_at(tilde, x)).max_abs(), x);
    ++t.samples;
  }
}

inline void suite_lorentz(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  auto rs = c.gauges_of(GaugeField::Kind::Sl2cR);
  if (rs.empty()) throw ValidationError("lorentz: no sl2c_R gauge field configured");
  const int nx = std::max(4, c.x_count() / 8);
  std::vector<Point4> xs;
  std::vector<Covector4> ps;
  for (int i = 0; i < nx; ++i) {
    xs.push_back(rng.point_in(c.cfg.chart));
    ps.push_back(rng.covector());
  }
  for (const auto& g : rs) {
    for (double m : c.cfg.mass_values) {
      t.record(dirac_lorentz_residual(c.op, g.mat, m, xs, ps), xs[0], ps[0]);
      t.samples += nx;
    }
    // frame transformation is a proper Lorentz transformation
    for (const Point4& x : xs) {
      LorentzMatrix lm = lorentz_matrix(g.mat, c.sigma, x);
      t.record(std::max(lm.eta_residual, std::abs(lm.det - 1.0)), x);
      ++t.samples;
    }
  }
}

inline void suite_theorem1(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  Theorem1Context ctx(c.op);
  std::optional<Vec4r> override_A;
  const int nx = c.x_count();
  for (int i = 0; i < nx; ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    Vec4r A{};
    if (c.cfg.has_A) {
      for (int a = 0; a < 4; ++a) A[a] = c.cfg.A[a].eval(x).real();
      override_A = A;
    }
    for (int k = 0; k < 5; ++k) {
      Covector4 p = rng.covector();
      for (double m : c.cfg.mass_values) {
        t.record(ctx.residual(m, x, p, override_A ? &*override_A : nullptr), x, p);
        ++t.samples;
      }
    }
  }
}

inline void suite_appendixE(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  for (int i = 0; i < c.x_count(); ++i) {
    Point4 x = rng.point_in(c.cfg.chart);
    t.record(appendixE_residual(c.sigma, x), x);
    ++t.samples;
  }
}

inline const std::array<Expr, 4>& default_bispinor_field() {
  static const std::array<Expr, 4> psi = {
      Expr::parse("1+0.1*x1"), Expr::parse("x2-0.2*x4"), Expr::parse("0.5*x3"),
      Expr::parse("exp(0.1*x4)")};
  return psi;
}

inline void suite_bispinor(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  const int nx = std::max(8, c.x_count() / 4);
  for (double m : c.cfg.mass_values) {
    BispinorContext bc(c.op, m, default_bispinor_field());
    for (int i = 0; i < nx; ++i) {
      Point4 x = rng.point_in(c.cfg.chart);
      t.record(bc.residual_at(x), x);
      ++t.samples;
    }
  }
}

inline void suite_oracle_fd(const SuiteContext& c, Rng& rng, ResidualTracker& t) {
  // every derivative-bearing expression in the config, symbolic vs FD
  std::vector<Expr> exprs;
  if (c.cfg.sigma_mode)
    for (int a = 0; a < 4; ++a)
      for (int k = 0; k < 4; ++k) exprs.push_back(c.cfg.sigma[a].e[k]);
  else
    for (int a = 0; a < 4; ++a)
      for (int k = 0; k < 4; ++k) exprs.push_back(c.cfg.rawP[a].e[k]);
  if (c.cfg.has_csub)
    for (int k = 0; k < 4; ++k) exprs.push_back(c.cfg.csub.e[k]);
  exprs.push_back(c.cfg.rho);
  for (const auto& g : c.cfg.gauges) {
    if (g.kind == GaugeField::Kind::ScalarPsi || g.kind == GaugeField::Kind::PhasePhi)
      exprs.push_back(g.scalar);
    else
      for (int k = 0; k < 4; ++k) exprs.push_back(g.mat.e[k]);
  }

  const int nx = std::max(8, c.x_count() / 8);
  for (int i = 0; i < nx; ++i) {
    Point4 x = rng.interior_point_in(c.cfg.chart);
    for (const Expr& e : exprs) {
      for (int a = 0; a < 4; ++a) {
        Complex dsym = e.derivative(a).eval(x);
        Complex dfd = numeric_partial(e, x, a);
        t.record(std::abs(dsym - dfd) / (1.0 + std::abs(dsym)), x);
      }
      ++t.samples;
    }
    // bracket form of f against its finite-difference oracle
    t.record((f_at(c.sigma, x) - f_fd_oracle(c.sigma, x, 1e-4)).max_abs(), x);
    // generalised Poisson bracket against FD
    Covector4 p = rng.covector();
    SigmaField tilde = adjugate_fields(c.sigma);
    t.record((poisson3(c.sigma, tilde, c.sigma, x, p) -
              poisson3_fd(c.sigma, tilde, c.sigma, x, p, 1e-4))
                 .max_abs(),
             x, p);
    // Christoffel symbols against FD of the covariant metric
    Christoffel ch = christoffel_at(c.sigma, x);
    Christoffel chfd = christoffel_fd_oracle(c.sigma, x, 1e-4);
    double cr = 0.0;
    for (int b = 0; b < 4; ++b)
      for (int al = 0; al < 4; ++al)
        for (int ga = 0; ga < 4; ++ga)
          cr = std::max(cr, std::abs(ch.gamma[b][al][ga] - chfd.gamma[b][al][ga]));
    t.record(cr, x);
    t.samples += 3;
  }
}

inline const std::map<std::string, SuiteFn>& suite_registry() {
  static const std::map<std::string, SuiteFn> reg = {
      {"selfadjoint", suite_selfadjoint},
      {"nondegenerate", suite_nondegenerate},
      {"metric", suite_metric},
      {"clifford", suite_clifford},
      {"sandwich", suite_sandwich},
      {"f_covariance", suite_f_covariance},
      {"f_homogeneity", suite_f_homogeneity},
      {"csub_laws", suite_csub_laws},
      {"potential_gauge", suite_potential_gauge},
      {"adjugation", suite_adjugation},
      {"lorentz", suite_lorentz},
      {"theorem1", suite_theorem1},
      {"appendixE", suite_appendixE},
      {"bispinor", suite_bispinor},
      {"oracle_fd", suite_oracle_fd}};
  return reg;
}

}  // namespace detail

inline double suite_tolerance(const VerificationConfig& cfg, const std::string& name) {
  auto it = cfg.tolerances.find(name);
  return it != cfg.tolerances.end() ? it->second : default_tolerance(name);
}

inline std::vector<SuiteReport> run_suites(const VerificationConfig& cfg) {
  std::vector<std::string> selected = cfg.suites.empty() ? suite_names() : cfg.suites;
  std::sort(selected.begin(), selected.end());
  selected.erase(std::unique(selected.begin(), selected.end()), selected.end());

  detail::SuiteContext ctx(cfg);
  std::vector<SuiteReport> out;
  for (const std::string& name : selected) {
    SuiteReport rep;
    rep.suite = name;
    auto t0 = std::chrono::steady_clock::now();
    try {
      detail::ResidualTracker tracker;
      Rng rng(ctx.suite_seed(name));
      detail::suite_registry().at(name)(ctx, rng, tracker);
      rep.max_residual = tracker.max_residual;
      rep.worst_x = tracker.worst_x;
      rep.worst_p = tracker.worst_p;
      rep.samples = tracker.samples;
      rep.pass = tracker.max_residual <= suite_tolerance(cfg, name);
    } catch (const std::exception& e) {
      rep.pass = false;
      rep.max_residual = std::numeric_limits<double>::infinity();
      rep.error = e.what();
    }
    rep.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(rep));
  }
  // failing suites first, then by name
  std::stable_sort(out.begin(), out.end(), [](const SuiteReport& a, const SuiteReport& b) {
    if (a.pass != b.pass) return !a.pass;
    return a.suite < b.suite;
  });
  return out;
}

// ---------------------------------------------------------------------------
// report emission

inline json report_to_json(const std::vector<SuiteReport>& reports,
                           const VerificationConfig& cfg) {
  json j;
  j["version"] = "1.0";
  j["config_digest"] = cfg.digest;
  j["seed"] = cfg.seed;
  json suites = json::array();
  for (const SuiteReport& r : reports) {
    json s;
    s["suite"] = r.suite;
    s["status"] = r.pass ? "PASS" : "FAIL";
    s["max_residual"] =
        std::isfinite(r.max_residual) ? json(r.max_residual) : json("inf");
    s["worst_point"] = {{"x", {r.worst_x[0], r.worst_x[1], r.worst_x[2], r.worst_x[3]}},
                        {"p", {r.worst_p[0], r.worst_p[1], r.worst_p[2], r.worst_p[3]}}};
    s["samples"] = r.samples;
    s["wall_time_s"] = r.wall_time_s;
    if (!r.error.empty()) s["error"] = r.error;
    suites.push_back(std::move(s));
  }
  j["suites"] = std::move(suites);
  return j;
}

inline std::string emit_report(const std::vector<SuiteReport>& reports,
                               const VerificationConfig& cfg, const std::string& format) {
  if (format == "json") return report_to_json(reports, cfg).dump(2) + "\n";
  std::ostringstream os;
  os << "config " << cfg.digest << " seed " << cfg.seed << "\n";
  for (const SuiteReport& r : reports) {
    char line[256];
    std::snprintf(line, sizeof(line), "%-16s %s  max_residual=%.3e  samples=%-6d  wall=%.3fs",
                  r.suite.c_str(), r.pass ? "PASS" : "FAIL", r.max_residual, r.samples,
                  r.wall_time_s);
    os << line;
    if (!r.pass && r.error.empty()) {
      char wp[160];
      std::snprintf(wp, sizeof(wp), "  worst x=(%g,%g,%g,%g) p=(%g,%g,%g,%g)", r.worst_x[0],
                    r.worst_x[1], r.worst_x[2], r.worst_x[3], r.worst_p[0], r.worst_p[1],
                    r.worst_p[2], r.worst_p[3]);
      os << wp;
    }
    if (!r.error.empty()) os << "  error: " << r.error;
    os << "\n";
  }
  int failed = 0;
  for (const SuiteReport& r : reports) failed += r.pass ? 0 : 1;
  os << (failed == 0 ? "all suites passed" : std::to_string(failed) + " suite(s) failed") << "\n";
  return os.str();
}

inline bool all_passed(const std::vector<SuiteReport>& reports) {
  for (const SuiteReport& r : reports)
    if (!r.pass) return false;
  return true;
}

// ---------------------------------------------------------------------------
// preset catalog

inline std::vector<std::string> preset_names() {
  return {"minkowski", "conformal", "em_wave", "boosted", "curved", "sl2c_xdep"};
}

namespace detail {

inline json sigma_to_json(const SigmaField& sigma) {
  json out = json::array();
  for (int a = 0; a < 4; ++a) {
    json m = json::array();
    for (int r = 0; r < 2; ++r) {
      json row = json::array();
      for (int cidx = 0; cidx < 2; ++cidx) row.push_back(sigma[a](r, cidx).str());
      m.push_back(std::move(row));
    }
    out.push_back(std::move(m));
  }
  return out;
}

inline json default_gauges_json() {
  json g = json::array();
  g.push_back({{"kind", "scalar_psi"}, {"psi", "0.1*x2"}});
  g.push_back({{"kind", "phase_phi"}, {"phi", "0.2*x3"}});
  std::string a1 = Expr::constant(std::exp(0.15)).str();
  std::string a2 = Expr::constant(std::exp(-0.15)).str();
  g.push_back({{"kind", "sl2c_R"}, {"R", {{a1, "0"}, {"0", a2}}}});
  g.push_back({{"kind", "sl2c_R"}, {"R", {{"exp(0.2*x1)", "0"}, {"0", "exp(-0.2*x1)"}}}});
  g.push_back({{"kind", "sl2c_R"}, {"R", {{"1", "0.3*x1"}, {"0", "1"}}}});
  return g;
}

}  // namespace detail

inline json preset_config(const std::string& name) {
  json j;
  SigmaField s = standard_sigma_fields();

  if (name == "minkowski") {
    j["operator"] = {{"sigma", detail::sigma_to_json(s)}};
  } else if (name == "conformal") {
    Expr scale = Expr::parse("exp(0.2*x1)");  // e^{2 psi}, psi = 0.1*x1
    SigmaField cs;
    for (int a = 0; a < 4; ++a) cs[a] = scale * s[a];
    j["operator"] = {{"sigma", detail::sigma_to_json(cs)}};
  } else if (name == "em_wave") {
    j["operator"] = {{"sigma", detail::sigma_to_json(s)}};
    j["A"] = {"0", "0", "0", "0.5*cos(x1)"};
  } else if (name == "boosted") {
    MatrixField2 R;
    R(0, 0) = Expr::constant(std::exp(0.15));
    R(1, 1) = Expr::constant(std::exp(-0.15));
    R(0, 1) = Expr::constant(0.0);
    R(1, 0) = Expr::constant(0.0);
    MatrixField2 Rd = R.dagger();
    SigmaField bs;
    for (int a = 0; a < 4; ++a) bs[a] = Rd * (s[a] * R);
    j["operator"] = {{"sigma", detail::sigma_to_json(bs)}};
  } else if (name == "curved") {
    SigmaField cs = s;
    cs[3] = Expr::parse("1+0.1*sin(x1)") * s[3];
    j["operator"] = {{"sigma", detail::sigma_to_json(cs)}};
  } else if (name == "sl2c_xdep") {
    // R(x) = exp(x^1 n) = I + x^1 n for the nilpotent n = (0 1; 0 0)
    MatrixField2 R;
    R(0, 0) = Expr::constant(1.0);
    R(0, 1) = Expr::variable(0);
    R(1, 0) = Expr::constant(0.0);
    R(1, 1) = Expr::constant(1.0);
    MatrixField2 Rd = R.dagger();
    SigmaField ts;
    for (int a = 0; a < 4; ++a) ts[a] = Rd * (s[a] * R);
    j["operator"] = {{"sigma", detail::sigma_to_json(ts)}};
  } else {
    throw ValidationError("unknown preset '" + name + "'");
  }

  j["rho"] = "1";
  j["chart"] = {{"lo", {-1.0, -1.0, -1.0, -1.0}},
                {"hi", {1.0, 1.0, 1.0, 1.0}},
                {"seed", 1234},
                {"sample_count", 200}};
  j["gauges"] = detail::default_gauges_json();
  j["mass_values"] = {0.0, 1.0, 2.5};
  j["seed"] = 20240;
  return j;
}

inline VerificationConfig load_preset(const std::string& name) {
  json j = preset_config(name);
  std::string bytes = j.dump(2) + "\n";
  return load_config_json(j, detail::fnv1a64_hex(bytes));
}

}  // namespace opgeom
