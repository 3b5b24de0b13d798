// Command-line front end: classify, iterates, psi, relate, mm, validate.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "json_io.hpp"
#include "svg.hpp"
#include "sinkasym/acceptance.hpp"
#include "sinkasym/iterates.hpp"
#include "sinkasym/mm.hpp"
#include "sinkasym/ode.hpp"
#include "sinkasym/psi_numeric.hpp"
#include "sinkasym/relate.hpp"
#include "sinkasym/system.hpp"

namespace fs = std::filesystem;
using namespace sinkasym;
using io::json;

namespace {

enum Exit { kOk = 0, kInput = 1, kRegime = 2, kValidation = 3 };

struct Config {
  std::string input;
  int m_max = 4;
  int order = 0;  // 0: chosen from kappa
  double rtol = 1e-10;
  double atol = 1e-13;
  std::string out = "out";
  bool svg = false;
  std::uint64_t seed = 20261016;
  std::vector<double> x0;
  std::optional<double> eps, eta;
};

// Collects the report text and the files to write.
class Artifacts {
 public:
  explicit Artifacts(std::string dir) : dir_(std::move(dir)) {}

  std::ostringstream report;

  void add(const std::string& name, const std::string& body) { files_.push_back({name, body}); }
  void add_json(const std::string& name, const json& j) { add(name, j.dump(2) + "\n"); }

  void write() const {
    fs::create_directories(dir_);
    auto put = [&](const std::string& name, const std::string& body) {
      std::ofstream f(fs::path(dir_) / name, std::ios::binary);
      if (!f) throw Error(ErrorKind::input, "cannot write " + (fs::path(dir_) / name).string());
      f << body;
    };
    put("report.txt", report.str());
    for (const auto& [name, body] : files_) put(name, body);
    std::cout << report.str();
  }

 private:
  std::string dir_;
  std::vector<std::pair<std::string, std::string>> files_;
};

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::input, "cannot read " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

SinkSystem load_system(const Config& cfg, std::string* name = nullptr) {
  if (cfg.input.empty()) throw Error(ErrorKind::input, "--input is required");
  const io::SystemInput in = io::parse_system(io::parse_text(read_file(cfg.input), cfg.input), cfg.input);
  if (name) *name = in.name;
  return build_system(in.A, in.b);
}

OdeOptions ode_options(const Config& cfg) {
  OdeOptions o;
  o.rtol = cfg.rtol;
  o.atol = cfg.atol;
  return o;
}

std::vector<double> default_x0(const Config& cfg, std::size_t n) {
  if (cfg.x0.empty()) return std::vector<double>(n, 0.01);
  if (cfg.x0.size() != n) {
    throw Error(ErrorKind::input, "--x0 has " + std::to_string(cfg.x0.size()) +
                                      " entries, the system has dimension " + std::to_string(n));
  }
  return cfg.x0;
}

std::string vec_str(const std::vector<double>& v) {
  std::string s = "(";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_real(v[i]);
  return s + ")";
}

std::string trajectory_csv(const Trajectory<double>& tr, double T, int samples) {
  std::string s = "t";
  for (std::size_t i = 0; i < tr.dim(); ++i) s += ",x" + std::to_string(i + 1);
  s += "\n";
  for (int k = 0; k <= samples; ++k) {
    const double t = T * k / samples;
    const auto x = tr.at(t);
    s += format_real(t);
    for (double v : x) s += "," + format_real(v);
    s += "\n";
  }
  return s;
}

bool is_star(const SinkSystem& sys) {
  return sys.dim() == 2 && sys.spectrum.diagonal_input &&
         sys.spectrum.eigenvalues[0] == sys.spectrum.eigenvalues[1] && sys.A(0, 1) == 0.0 &&
         sys.A(1, 0) == 0.0;
}

std::string shape_name(const SinkSystem& sys) {
  if (sys.dim() != 2) return std::to_string(sys.dim()) + "-D sink";
  return is_star(sys) ? "star node" : "node";
}

int run_classify(const Config& cfg) {
  std::string name;
  const SinkSystem sys = load_system(cfg, &name);
  const Spectrum& sp = sys.spectrum;
  const std::string spacing = sys.classification == Spacing::closely ? "closely-spaced" : "widely-spaced";
  Artifacts art(cfg.out);
  auto& r = art.report;
  if (!name.empty()) r << name << "\n";
  r << shape_name(sys) << ", kappa=" << format_real(sp.kappa) << ", " << spacing
    << " (alpha=" << sys.alpha() << ")\n";
  r << "eigenvalues (slowest first):";
  for (double l : sp.eigenvalues) r << " " << format_real(l);
  r << "\n";
  if (sp.kappa_exact) r << "kappa exactly " << sp.kappa_exact->num << "/" << sp.kappa_exact->den << "\n";
  r << "alpha=" << sys.alpha() << ", beta=" << sys.beta() << "\n";
  if (sp.resonances.empty()) {
    r << "no resonances\n";
  } else {
    r << "resonances:\n";
    for (const auto& res : sp.resonances) {
      r << "  lambda_" << res.j + 1 << " =";
      for (std::size_t i = 0; i < res.m.size(); ++i) {
        if (res.m[i]) r << " + " << res.m[i] << "*lambda_" << i + 1;
      }
      r << "  (order " << res.order << ")\n";
    }
  }
  for (const auto& w : sp.warnings) r << "warning: " << w << "\n";

  json j = {{"shape", shape_name(sys)},
            {"dimension", sys.dim()},
            {"eigenvalues", sp.eigenvalues},
            {"kappa", sp.kappa},
            {"alpha", sys.alpha()},
            {"beta", sys.beta()},
            {"spacing", spacing}};
  if (sp.kappa_exact) j["kappa_exact"] = {sp.kappa_exact->num, sp.kappa_exact->den};
  json res = json::array();
  for (const auto& x : sp.resonances) res.push_back({{"target", x.j + 1}, {"m", x.m}, {"order", x.order}});
  j["resonances"] = res;
  j["warnings"] = sp.warnings;
  art.add_json("classify.json", j);
  art.write();
  return kOk;
}

int run_iterates(const Config& cfg) {
  const SinkSystem sys = load_system(cfg);
  const IterateSet its = build_iterates(sys, cfg.m_max);
  Artifacts art(cfg.out);
  auto& r = art.report;
  r << "iterates in eigen-coordinates u = Pinv x, parameters y0 = psi(u0)\n";
  json all = json::array();
  for (int m = 1; m <= its.m_max(); ++m) {
    const auto [rate, power] = its.orders.at(m - 1);
    r << "\nD_" << m << ": error O(|y0|^" << format_real(power) << " e^{"
      << format_real(rate * its.mu1) << " t})\n";
    r << pretty(its, m);
    json comps = json::array();
    for (const auto& c : its.D(m)) comps.push_back(io::series_to_json(c));
    json simp = json::array();
    for (const auto& c : its.D_simplified(m)) simp.push_back(io::series_to_json(c));
    all.push_back({{"m", m},
                   {"guaranteed_rate", rate * its.mu1},
                   {"guaranteed_power", power},
                   {"components", comps},
                   {"simplified", simp}});
  }
  art.add_json("iterates.json", {{"eigenvalues", sys.spectrum.eigenvalues}, {"iterates", all}});
  art.write();
  return kOk;
}

int run_psi(const Config& cfg) {
  const SinkSystem sys = load_system(cfg);
  const PsiApprox psi = build_psi(sys, cfg.m_max);
  const std::vector<double> x0 = default_x0(cfg, sys.dim());
  Artifacts art(cfg.out);
  auto& r = art.report;
  const auto names = param_names(sys.dim(), "u0");
  r << "psi_m in eigen-coordinates u0 = Pinv x0\n";
  json list = json::array();
  for (int m = 1; m <= psi.m_max(); ++m) {
    r << "\npsi_" << m << " (degrees < " << psi.degree_cap[m - 1] << "):\n";
    json comps = json::array();
    for (std::size_t j = 0; j < sys.dim(); ++j) {
      r << "  psi" << j + 1 << " = " << psi.psi(m)[j].str(names) << "\n";
      comps.push_back(io::poly_to_json(psi.psi(m)[j]));
    }
    list.push_back({{"m", m}, {"degree_cap", psi.degree_cap[m - 1]}, {"components", comps}});
  }
  Eigen::VectorXd xv = Eigen::Map<const Eigen::VectorXd>(x0.data(), static_cast<Eigen::Index>(x0.size()));
  Eigen::VectorXd uv = sys.spectrum.Pinv * xv;
  const std::vector<double> u0(uv.data(), uv.data() + uv.size());
  PsiNumericOptions po;
  po.rtol = std::min(cfg.rtol, 1e-12);
  const auto num = psi_numeric_eigen(sys, u0, po);
  r << "\nspot check at x0 = " << vec_str(x0) << ", u0 = " << vec_str(u0) << "\n";
  r << "  numeric psi(u0) = " << vec_str(num.value) << " (quadrature error <= " << vec_str(num.error) << ")\n";
  json checks = json::array();
  for (int m = 1; m <= psi.m_max(); ++m) {
    const auto v = psi.eval(m, u0);
    double dev = 0.0;
    for (std::size_t j = 0; j < v.size(); ++j) dev = std::max(dev, std::abs(v[j] - num.value[j]));
    r << "  |psi_" << m << " - psi| = " << format_real(dev) << "\n";
    checks.push_back({{"m", m}, {"value", v}, {"max_abs_deviation", dev}});
  }
  art.add_json("psi.json", {{"approximations", list},
                            {"spot_check", {{"x0", x0}, {"u0", u0}, {"numeric", num.value},
                                            {"numeric_error", num.error}, {"symbolic", checks}}}});
  art.write();
  return kOk;
}

int run_relate(const Config& cfg) {
  const SinkSystem sys = load_system(cfg);
  if (sys.dim() != 2) throw Error(ErrorKind::unsupported_shape, "relate needs a 2-D system");
  const int order = cfg.order > 0 ? cfg.order
                                  : std::max(2, static_cast<int>(std::floor(sys.kappa() + 1e-9)));
  const RelationSeries rel = relate_series(sys, order);
  Artifacts art(cfg.out);
  auto& r = art.report;
  r << shape_name(sys) << ", kappa=" << format_real(sys.kappa()) << ", relation through order "
    << order << "\n";
  r << rel.str() << "\n";
  r << "parameters: ";
  for (std::size_t i = 0; i < rel.param_names.size(); ++i) r << (i ? ", " : "") << rel.param_names[i];
  r << " (psi of the initial point in oriented eigen-coordinates)\n";
  for (const auto& t : rel.terms) {
    r << "  x^" << format_real(t.power) << (t.logpow ? " ln x" : "") << ": "
      << (t.ic_dependent ? "depends on the initial condition" : "fixed by the system") << "\n";
  }
  json j = io::relation_to_json(rel);

  // Evaluate at a concrete trajectory and sample it for the CSV and plot.
  const std::vector<double> x0 = default_x0(cfg, 2);
  const auto traj = integrate<double>(sys, x0, 20.0, ode_options(cfg));
  art.add("trajectory.csv", trajectory_csv(traj, 20.0, 400));
  std::optional<std::vector<double>> params;
  try {
    const SinkSystem d = detail::oriented_diagonal(sys).first;
    const Eigen::MatrixXd P = detail::oriented_diagonal(sys).second;
    Eigen::Vector2d u = P.inverse() * Eigen::Vector2d(x0[0], x0[1]);
    params = psi_numeric_eigen(d, {u(0), u(1)}).value;
    r << "at x0 = " << vec_str(x0) << ": " << rel.str(&*params) << "\n";
    j["x0"] = x0;
    j["params"] = *params;
    j["coefficients"] = rel.coefficients(*params);
  } catch (const Error& e) {
    r << "no numeric evaluation at x0 = " << vec_str(x0) << ": " << e.what() << "\n";
  }
  art.add_json("relation.json", j);

  if (cfg.svg) {
    std::vector<svg::Curve> curves;
    const double w = 1.2 * std::max(std::abs(x0[0]), std::abs(x0[1]));
    for (int k = 0; k < 12; ++k) {
      const double th = 2 * M_PI * k / 12;
      try {
        const auto tr = integrate<double>(sys, {w * 0.8 * std::cos(th), w * 0.8 * std::sin(th)}, 15.0,
                                          ode_options(cfg));
        svg::Curve c;
        for (int i = 0; i <= 300; ++i) {
          const auto x = tr.at(15.0 * i / 300);
          c.push_back({x[0], x[1]});
        }
        curves.push_back(std::move(c));
      } catch (const Error&) {
      }
    }
    svg::Curve overlay;
    if (params && rel.abscissa == 1) {
      const double x1_end = traj.at(0.0)[0];
      for (int i = 1; i <= 200; ++i) {
        const double x = x1_end * i / 200.0;
        try {
          overlay.push_back({x, rel.eval(x, *params)});
        } catch (const Error&) {
        }
      }
    }
    art.add("phase_portrait.svg", svg::phase_portrait(curves, overlay, w, "trajectories and relation"));
    if (is_star(sys)) {
      const SignMap m = concavity_map(relate_series(sys, 2), 2.0, -1.0, 1.0, 41);
      art.add("concavity_sign_map.svg", svg::sign_map(m, "sign of the x1^2 coefficient"));
      r << "concavity sign map written to concavity_sign_map.svg\n";
    }
  }
  art.write();
  return kOk;
}

int run_mm(const Config& cfg) {
  io::MMInput in;
  if (!cfg.input.empty()) {
    in = io::parse_mm(io::parse_text(read_file(cfg.input), cfg.input), cfg.input);
  }
  if (cfg.eps || cfg.eta) {
    if (!cfg.eps || !cfg.eta) throw Error(ErrorKind::input, "--eps and --eta go together");
    in.scaling = dimensionless(*cfg.eps, *cfg.eta);
  } else if (cfg.input.empty()) {
    throw Error(ErrorKind::input, "mm needs --input or --eps/--eta");
  }
  if (!cfg.x0.empty()) {
    if (cfg.x0.size() != 2) throw Error(ErrorKind::input, "--x0 needs two entries for mm");
    in.x0 = cfg.x0;
  }
  const double eps = in.scaling.eps, eta = in.scaling.eta;
  const MMExpansion ex = mm_expansion(eps, eta);
  const MMSpectrum& sp = ex.spectrum;
  const int N = std::max(cfg.m_max, static_cast<int>(std::floor(sp.kappa)) + 1);
  const SigmaSequence seq = sigma_recursion(eps, eta, std::min(N, 60));

  Artifacts art(cfg.out);
  auto& r = art.report;
  if (in.scaling.source) {
    const auto& d = *in.scaling.source;
    r << "rate constants k1=" << format_real(d.k1) << " k-1=" << format_real(d.km1)
      << " k2=" << format_real(d.k2) << " e0=" << format_real(d.e0) << ", Km=" << format_real(in.scaling.Km)
      << "\n";
  }
  r << "eps=" << format_real(eps) << ", eta=" << format_real(eta) << "\n";
  r << "lambda_+=" << format_real(sp.lambda_plus) << ", lambda_-=" << format_real(sp.lambda_minus)
    << ", kappa=" << format_real(sp.kappa) << "\n";
  r << "sigma_+=" << format_real(sp.sigma_plus) << ", sigma_-=" << format_real(sp.sigma_minus) << "\n";
  r << "case: " << to_string(ex.templates.front().kind) << "\n";
  r << "\n n  sigma_n                  denominator\n";
  for (std::size_t n = 1; n < seq.sigma.size(); ++n) {
    char line[96];
    std::snprintf(line, sizeof line, "%2zu  %-23.16g  %.16g\n", n, seq.sigma[n],
                  n >= 2 ? seq.denominators[n] : 0.0);
    r << line;
  }
  if (seq.pole_index) {
    r << "pole at n=" << *seq.pole_index << ", log coefficient " << format_real(*seq.log_coefficient) << "\n";
  }
  r << "\n";
  for (const auto& t : ex.templates) r << to_string(t.kind) << ": " << t.str() << "\n";
  for (const auto& w : ex.warnings) r << "warning: " << w << "\n";

  RateLawOptions ro;
  const RateLawReport rl = rate_law_errors(eps, eta, in.x0, ro);
  r << "\nrate laws from x0 = " << vec_str(in.x0) << " (predicted alpha-law class "
    << to_string(rl.predicted) << " = " << format_real(rl.predicted_alpha_rate) << ")\n";
  if (rl.conclusive) {
    r << "  QSSA error:    " << rl.qssa.str() << "\n";
    r << "  alpha-law error: " << rl.alpha.str() << "\n";
    r << "  class " << (rl.class_matches() ? "matches" : "does not match") << " the prediction\n";
  } else {
    r << "  inconclusive: " << rl.note << "\n";
  }

  // CSV of the two rate-law errors along the trajectory.
  const SinkSystem sys = mm_system(eps, eta);
  OdeOptions o = ode_options(cfg);
  o.ball = 0.0;
  const double T = rl.qssa.window_hi > 0 ? rl.qssa.window_hi : 20.0;
  const auto traj = integrate<double>(sys, in.x0, T, o);
  std::string csv = "t,x,y,qssa_error,alpha_error\n";
  for (int k = 0; k <= 400; ++k) {
    const double t = T * k / 400;
    const auto x = traj.at(t);
    const RateLaws laws = rate_laws(std::max(0.0, x[0]), sp.sigma_plus);
    csv += format_real(t) + "," + format_real(x[0]) + "," + format_real(x[1]) + "," +
           format_real(x[1] - laws.qssa) + "," + format_real(x[1] - laws.alpha) + "\n";
  }
  art.add("rate_laws.csv", csv);

  json templates = json::array();
  for (const auto& t : ex.templates) {
    json terms = json::array();
    for (const auto& term : t.terms) {
      json e = {{"power", term.power}, {"logpow", term.logpow}};
      e["coeff"] = term.coeff ? json(*term.coeff) : json("C");
      terms.push_back(e);
    }
    templates.push_back({{"case", to_string(t.kind)}, {"terms", terms},
                         {"remainder_power", t.remainder_power},
                         {"remainder_little_o", t.remainder_little_o}, {"text", t.str()}});
  }
  json j = {{"eps", eps}, {"eta", eta},
            {"lambda_plus", sp.lambda_plus}, {"lambda_minus", sp.lambda_minus},
            {"sigma_plus", sp.sigma_plus}, {"sigma_minus", sp.sigma_minus},
            {"kappa", sp.kappa}, {"sigma", seq.sigma}, {"templates", templates},
            {"warnings", ex.warnings},
            {"rate_laws", {{"x0", in.x0}, {"predicted_class", to_string(rl.predicted)},
                           {"predicted_alpha_rate", rl.predicted_alpha_rate},
                           {"conclusive", rl.conclusive}, {"qssa", io::fit_to_json(rl.qssa)},
                           {"alpha", io::fit_to_json(rl.alpha)},
                           {"class_matches", rl.class_matches()}}}};
  if (seq.pole_index) {
    j["pole_index"] = *seq.pole_index;
    j["log_coefficient"] = *seq.log_coefficient;
  }
  art.add_json("mm.json", j);

  if (cfg.svg) {
    const double w = std::max(1.0, 1.1 * std::max(in.x0[0], in.x0[1]));
    svg::Canvas c(0.0, w, 0.0, w);
    c.axes("x (substrate)", "y (complex)");
    svg::Curve h, a, tr;
    for (int i = 0; i <= 200; ++i) {
      const double x = w * i / 200;
      const RateLaws laws = rate_laws(x, sp.sigma_plus);
      h.push_back({x, laws.qssa});
      a.push_back({x, laws.alpha});
    }
    for (int i = 0; i <= 400; ++i) {
      const auto x = traj.at(T * i / 400);
      tr.push_back({x[0], x[1]});
    }
    c.polyline(h, "#3366aa", 1.5, "5,3");
    c.polyline(a, "#cc3311", 1.5, "2,2");
    c.polyline(tr, "#222222", 1.5);
    c.title("trajectory between the QSSA and alpha-law curves");
    art.add("mm_phase.svg", c.str());
  }
  art.write();
  return kOk;
}

int run_validate(const Config& cfg) {
  const auto results = acceptance::run_all(cfg.seed);
  Artifacts art(cfg.out);
  json rows = json::array();
  int failed = 0;
  std::string failures;
  for (const auto& res : results) {
    art.report << acceptance::format_line(res) << "\n";
    rows.push_back({{"id", res.id}, {"name", res.name}, {"pass", res.pass}, {"detail", res.detail}});
    if (!res.pass) {
      ++failed;
      failures += "[" + std::to_string(res.id) + "] " + res.name + "\n  " + res.detail + "\n";
    }
  }
  art.report << results.size() - failed << "/" << results.size() << " criteria passed\n";
  art.add_json("validate.json", {{"seed", cfg.seed}, {"results", rows}});
  if (failed) art.add("validation_failures.txt", failures);
  art.write();
  return failed ? kValidation : kOk;
}

int exit_code_for(ErrorKind k) {
  switch (k) {
    case ErrorKind::input:
    case ErrorKind::dimension:
    case ErrorKind::domain:
      return kInput;
    default:
      return kRegime;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Asymptotic expansions of solutions approaching a sink of x' = Ax + b(x)"};
  app.require_subcommand(1);
  Config cfg;

  auto common = [&](CLI::App* sub, bool needs_input) {
    auto* in = sub->add_option("--input", cfg.input, "system definition (JSON)");
    if (needs_input) in->required()->check(CLI::ExistingFile);
    sub->add_option("--m-max", cfg.m_max, "highest iterate / psi index")->capture_default_str()->check(CLI::Range(1, 12));
    sub->add_option("--rtol", cfg.rtol, "integrator relative tolerance")->capture_default_str();
    sub->add_option("--atol", cfg.atol, "integrator absolute tolerance")->capture_default_str();
    sub->add_option("--out", cfg.out, "output directory")->capture_default_str();
    sub->add_flag("--svg", cfg.svg, "also write SVG plots");
    sub->add_option("--seed", cfg.seed, "seed for randomized sweeps")->capture_default_str();
  };

  auto* classify = app.add_subcommand("classify", "spectrum, kappa, spacing and resonances");
  common(classify, true);
  auto* iterates = app.add_subcommand("iterates", "iterates D_m with guaranteed orders");
  common(iterates, true);
  auto* psi = app.add_subcommand("psi", "psi_m polynomials and a numeric spot check");
  common(psi, true);
  psi->add_option("--x0", cfg.x0, "spot-check point (default 0.01 in every coordinate)")->delimiter(',');
  auto* relate = app.add_subcommand("relate", "relation between the coordinates of a 2-D system");
  common(relate, true);
  relate->add_option("--x0", cfg.x0, "initial point for the numeric evaluation")->delimiter(',');
  relate->add_option("--order", cfg.order, "relation order (default floor(kappa), at least 2)");
  auto* mm = app.add_subcommand("mm", "Michaelis-Menten slow manifold and rate laws");
  common(mm, false);
  mm->add_option("--eps", cfg.eps, "e0/Km");
  mm->add_option("--eta", cfg.eta, "k2/(k-1 + k2)");
  mm->add_option("--x0", cfg.x0, "dimensionless initial (x, y), default (0.2, 0)")->delimiter(',');
  auto* validate = app.add_subcommand("validate", "run the acceptance criteria");
  common(validate, false);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }
  if (!(cfg.rtol > 0) || !(cfg.atol > 0)) {
    std::cerr << "input error: tolerances must be positive\n";
    return kInput;
  }

  try {
    if (*classify) return run_classify(cfg);
    if (*iterates) return run_iterates(cfg);
    if (*psi) return run_psi(cfg);
    if (*relate) return run_relate(cfg);
    if (*mm) return run_mm(cfg);
    if (*validate) return run_validate(cfg);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
  return kInput;
}
