#include "runners.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <random>
#include <sstream>

#include "schottky/cm.hpp"
#include "schottky/curves.hpp"
#include "schottky/jets.hpp"
#include "schottky/psido.hpp"
#include "schottky/rational.hpp"
#include "schottky/report.hpp"
#include "schottky/schottky.hpp"
#include "schottky/theta.hpp"
#include "schottky/ufield.hpp"
#include "schottky/waves.hpp"

using namespace schottky;

namespace schottkylab {

namespace {

// ---------------------------------------------------------------------------
// shared plumbing

std::uint64_t to_seed(const std::string& value, const std::string& key) {
  std::size_t used = 0;
  std::uint64_t out = 0;
  try {
    out = std::stoull(value, &used);
  } catch (const std::exception&) {
    throw UsageError("key '" + key + "': '" + value + "' is not a seed");
  }
  if (used != value.size()) {
    throw UsageError("key '" + key + "': '" + value + "' is not a seed");
  }
  return out;
}

// Seed resolution for stochastic commands: the flag wins, then [run] seed;
// absence is a usage error because the run would not be reproducible.
std::uint64_t required_seed(Manifest& m, const RunContext& ctx) {
  if (m.has("run", "seed")) {
    const std::uint64_t from_manifest = to_seed(m.take("run", "seed"), "seed");
    return ctx.has_seed ? ctx.seed : from_manifest;
  }
  if (ctx.has_seed) return ctx.seed;
  throw UsageError("this command is stochastic: set seed in [run] or pass --seed");
}

double pick_tol(Manifest& m, const RunContext& ctx, double fallback) {
  if (m.has("run", "tol")) {
    const double from_manifest = to_double(m.take("run", "tol"), "tol");
    return ctx.has_tol ? ctx.tol : from_manifest;
  }
  return ctx.has_tol ? ctx.tol : fallback;
}

struct Outputs {
  std::filesystem::path dir;
  std::string stem;

  void write(const std::string& ext, const std::string& content) const {
    std::filesystem::create_directories((dir / (stem + ext)).parent_path());
    const std::filesystem::path path = dir / (stem + ext);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw UsageError("cannot write " + path.string());
    out << content;
  }
};

Outputs make_outputs(Manifest& m, const RunContext& ctx, const std::string& command) {
  std::string stem = m.take_or("run", "out", "");
  if (stem.empty()) {
    stem = command;
    std::replace(stem.begin(), stem.end(), '.', '_');
  }
  return Outputs{ctx.out_dir, stem};
}

// Writes the report pair, prints the text form, and converts the verdict to
// an exit status, naming the criterion on failure.
int finish_report(const ResidualReport& rep, const Outputs& out,
                  const std::string& extra_txt = "") {
  std::string txt = rep.to_text();
  if (!extra_txt.empty()) txt += extra_txt;
  out.write(".txt", txt);
  out.write(".json", rep.to_json());
  std::fputs(txt.c_str(), stdout);
  if (!rep.pass()) {
    std::fprintf(stderr, "threshold failure: %s max_residual=%s tol=%s\n",
                 rep.criterion.c_str(), format_double(rep.max_residual).c_str(),
                 format_double(rep.tol_used).c_str());
    return 1;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// input assembly

VectorXcd to_vector(const std::vector<cdouble>& v) {
  VectorXcd out(static_cast<int>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<int>(i)] = v[i];
  return out;
}

VectorXcd take_vector(Manifest& m, const std::string& sec, const std::string& key,
                      int expected) {
  const VectorXcd v = to_vector(to_complex_list(m.take(sec, key), key));
  if (v.size() != expected) {
    throw UsageError("key '" + key + "': expected " + std::to_string(expected) +
                     " entries, got " + std::to_string(v.size()));
  }
  return v;
}

RiemannMatrix take_matrix(Manifest& m, const std::string& sec) {
  const int g = static_cast<int>(to_int(m.take(sec, "genus"), "genus"));
  if (g < 1 || g > 16) throw UsageError("genus must be between 1 and 16");
  const std::vector<cdouble> entries = to_complex_list(m.take(sec, "matrix"), "matrix");
  if (static_cast<int>(entries.size()) != g * g) {
    throw UsageError("key 'matrix': expected " + std::to_string(g * g) +
                     " row-major entries, got " + std::to_string(entries.size()));
  }
  MatrixXcd M(g, g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) M(i, j) = entries[static_cast<std::size_t>(i * g + j)];
  }
  try {
    return RiemannMatrix(M);
  } catch (const NumericError& e) {
    throw UsageError(std::string("invalid riemann matrix: ") + e.what());
  }
}

PeriodData load_curve(Manifest& m, const std::string& sec) {
  HyperellipticCurve curve;
  int quad_order = 200;
  if (m.has(sec, "curve_file")) {
    const std::filesystem::path rel = m.take(sec, "curve_file");
    const std::filesystem::path path = rel.is_absolute() ? rel : m.base_dir() / rel;
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open curve file " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    const CurveFile cf = parse_curve_file(buf.str());
    curve = cf.curve;
    quad_order = cf.quad_order;
  } else {
    curve.branch_points = to_complex_list(m.take(sec, "branch_points"), "branch_points");
  }
  if (m.has(sec, "quad_order")) {
    quad_order = static_cast<int>(to_int(m.take(sec, "quad_order"), "quad_order"));
  }
  return hyperelliptic_periods(curve, quad_order);
}

// Jacobian data for the detector commands: either a curve (periods plus
// calibrated vectors) or an explicit matrix with whichever of u, v, w the
// command needs.  `z` overrides the base point in both routes.
struct JacobianInput {
  RiemannMatrix B;
  std::optional<PeriodData> pd;
  KPVectors vecs;
  bool has_u = false;
  bool has_v = false;
  bool has_w = false;
};

JacobianInput load_jacobian(Manifest& m) {
  const std::string sec = "jacobian";
  const bool from_curve = m.has(sec, "curve_file") || m.has(sec, "branch_points");
  if (from_curve && m.has(sec, "matrix")) {
    throw UsageError("[jacobian] must give either a curve or a matrix, not both");
  }
  std::optional<JacobianInput> in;
  if (from_curve) {
    PeriodData pd = load_curve(m, sec);
    KPVectors vecs = kp_vectors(pd);
    RiemannMatrix B = pd.B;
    in.emplace(JacobianInput{std::move(B), std::move(pd), std::move(vecs), true, true, true});
  } else {
    RiemannMatrix B = take_matrix(m, sec);
    const int g = B.g();
    KPVectors vecs;
    vecs.U = VectorXcd::Zero(g);
    vecs.V = VectorXcd::Zero(g);
    vecs.W = VectorXcd::Zero(g);
    vecs.Z = VectorXcd::Zero(g);
    in.emplace(JacobianInput{std::move(B), std::nullopt, std::move(vecs), false, false, false});
    if (m.has(sec, "u")) {
      in->vecs.U = take_vector(m, sec, "u", g);
      in->has_u = true;
    }
    if (m.has(sec, "v")) {
      in->vecs.V = take_vector(m, sec, "v", g);
      in->has_v = true;
    }
    if (m.has(sec, "w")) {
      in->vecs.W = take_vector(m, sec, "w", g);
      in->has_w = true;
    }
  }
  if (m.has(sec, "z")) in->vecs.Z = take_vector(m, sec, "z", in->B.g());
  return std::move(*in);
}

void need_uvw(const JacobianInput& in, bool u, bool v, bool w) {
  if (u && !in.has_u) throw UsageError("[jacobian] needs 'u' (or a curve input)");
  if (v && !in.has_v) throw UsageError("[jacobian] needs 'v' (or a curve input)");
  if (w && !in.has_w) throw UsageError("[jacobian] needs 'w' (or a curve input)");
}

CMState load_cm_state(Manifest& m, const std::string& sec) {
  CMState s;
  const std::vector<cdouble> x = to_complex_list(m.take(sec, "x"), "x");
  const std::vector<cdouble> p = to_complex_list(m.take(sec, "p"), "p");
  if (x.size() != p.size()) throw UsageError("[cm] x and p must have equal length");
  s.x = x;
  s.p = p;
  const std::string kind = m.take_or(sec, "kind", "rational");
  if (kind == "rational") {
    s.kind = CMKind::rational;
  } else if (kind == "trigonometric") {
    s.kind = CMKind::trigonometric;
  } else if (kind == "elliptic") {
    s.kind = CMKind::elliptic;
    s.period1 = to_complex(m.take(sec, "period1"), "period1");
    s.period2 = to_complex(m.take(sec, "period2"), "period2");
  } else {
    throw UsageError("kind must be rational, trigonometric or elliptic");
  }
  return s;
}

std::string vector_text(const VectorXcd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += " ";
    out += format_complex(v[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// theta group

TruncationSpec theta_trunc(Manifest& m, const RunContext& ctx) {
  TruncationSpec trunc;
  trunc.tol = pick_tol(m, ctx, trunc.tol);
  return trunc;
}

int run_theta(const std::string& command, Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, command);
  const TruncationSpec trunc = theta_trunc(m, ctx);
  const RiemannMatrix B = take_matrix(m, "theta");
  const VectorXcd z = take_vector(m, "theta", "z", B.g());

  ThetaResult res;
  if (command == "theta.eval") {
    res = theta(z, B, trunc);
  } else if (command == "theta.deriv") {
    std::vector<VectorXcd> dirs;
    for (int k = 1; k <= 8; ++k) {
      const std::string key = "dir" + std::to_string(k);
      if (!m.has("theta", key)) break;
      dirs.push_back(take_vector(m, "theta", key, B.g()));
    }
    if (dirs.empty()) throw UsageError("theta.deriv needs dir1 (then dir2, ...)");
    std::vector<int> mset;
    for (double ix : to_double_list(m.take("theta", "multiset"), "multiset")) {
      const int i = static_cast<int>(ix);
      if (i < 0 || i >= static_cast<int>(dirs.size())) {
        throw UsageError("multiset index " + std::to_string(i) + " has no matching dir");
      }
      mset.push_back(i);
    }
    res = theta_multi(z, B, dirs, {mset}, trunc)[0];
  } else {  // theta.char
    const std::vector<double> eps = to_double_list(m.take("theta", "eps"), "eps");
    std::vector<double> delta(static_cast<std::size_t>(B.g()), 0.0);
    if (m.has("theta", "delta")) delta = to_double_list(m.take("theta", "delta"), "delta");
    if (static_cast<int>(eps.size()) != B.g() || static_cast<int>(delta.size()) != B.g()) {
      throw UsageError("eps and delta must have one entry per genus");
    }
    Characteristic chi;
    chi.eps = Eigen::Map<const VectorXd>(eps.data(), B.g());
    chi.delta = Eigen::Map<const VectorXd>(delta.data(), B.g());
    res = theta_char(z, B, chi, {}, trunc);
  }
  m.assert_consumed();

  std::string txt;
  txt += "command: " + command + "\n";
  txt += "value: " + format_complex(res.value) + "\n";
  txt += "scale: " + format_double(res.scale) + "\n";
  txt += "tail: " + format_double(res.tail) + "\n";
  txt += "radius: " + std::to_string(res.radius) + "\n";
  std::string json = "{\n";
  json += "  \"command\": \"" + command + "\",\n";
  json += "  \"value\": [" + format_double(res.value.real()) + ", " +
          format_double(res.value.imag()) + "],\n";
  json += "  \"scale\": " + format_double(res.scale) + ",\n";
  json += "  \"tail\": " + format_double(res.tail) + ",\n";
  json += "  \"radius\": " + std::to_string(res.radius) + "\n}\n";
  out.write(".txt", txt);
  out.write(".json", json);
  std::fputs(txt.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// curve group

int run_curve(const std::string& command, Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, command);
  const PeriodData pd = load_curve(m, "curve");

  if (command == "curve.flex") {
    const cdouble x_p = to_complex(m.take("curve", "x_p"), "x_p");
    std::vector<cdouble> waypoints;
    if (m.has("curve", "waypoints")) {
      waypoints = to_complex_list(m.take("curve", "waypoints"), "waypoints");
    }
    const double tol = pick_tol(m, ctx, 1e-5);
    m.assert_consumed();
    const KPVectors fx = flex_data(pd, x_p, waypoints);
    ResidualReport rep = flex_residual(pd.B, fx.U, fx.V, fx.A, fx.p, fx.E, tol);
    rep.details["A"] = vector_text(fx.A);
    rep.details["p"] = format_complex(fx.p);
    rep.details["E"] = format_complex(fx.E);
    out.write(".curve.json", period_data_json(pd, fx));
    return finish_report(rep, out);
  }

  const KPVectors vecs = kp_vectors(pd);
  m.assert_consumed();
  std::string txt;
  txt += "command: " + command + "\n";
  txt += "genus: " + std::to_string(pd.genus()) + "\n";
  for (int i = 0; i < pd.B.g(); ++i) {
    txt += "b_row" + std::to_string(i + 1) + ": " +
           vector_text(pd.B.B().row(i).transpose()) + "\n";
  }
  if (command == "curve.vectors") {
    txt += "u: " + vector_text(vecs.U) + "\n";
    txt += "v: " + vector_text(vecs.V) + "\n";
    txt += "w: " + vector_text(vecs.W) + "\n";
    txt += "gauge: " + format_complex(vecs.gauge) + "\n";
  }
  out.write(".txt", txt);
  out.write(".json", period_data_json(pd, vecs));
  std::fputs(txt.c_str(), stdout);
  return 0;
}

// ---------------------------------------------------------------------------
// cm group

int run_cm_simulate(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "cm.simulate");
  CMState s = load_cm_state(m, "cm");
  const double y_end = to_double(m.take("cm", "y_end"), "y_end");
  CMOptions opts;
  if (m.has("cm", "step_tol")) opts.tol = to_double(m.take("cm", "step_tol"), "step_tol");
  if (m.has("cm", "min_sep")) opts.min_sep = to_double(m.take("cm", "min_sep"), "min_sep");
  const int csv_samples =
      static_cast<int>(to_int(m.take_or("cm", "csv_samples", "200"), "csv_samples"));
  const double tol = pick_tol(m, ctx, 1e-9);
  m.assert_consumed();

  const Trajectory traj = cm_integrate(s, y_end, opts);
  const cdouble h0 = cm_hamiltonian(s);
  double drift = 0.0;
  for (const auto& node : traj.nodes()) {
    CMState at;
    at.kind = s.kind;
    at.period1 = s.period1;
    at.period2 = s.period2;
    at.y = node.y;
    at.x = node.x;
    at.p = node.p;
    drift = std::max(drift, std::abs(cm_hamiltonian(at) - h0));
  }
  ResidualReport rep;
  rep.criterion = "energy_drift";
  rep.tol_used = tol;
  rep.normalization = std::max(1.0, std::abs(h0));
  rep.record(drift / rep.normalization);
  rep.samples = static_cast<int>(traj.nodes().size());  // drift already maxed over nodes
  rep.details["h0"] = format_complex(h0);
  rep.details["nodes"] = std::to_string(traj.nodes().size());
  out.write(".csv", traj.to_csv(csv_samples));
  return finish_report(rep, out);
}

int run_cm_track(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "cm.track");
  const JacobianInput in = load_jacobian(m);
  need_uvw(in, true, true, false);
  const std::vector<double> window = to_double_list(m.take("track", "window"), "window");
  if (window.size() != 4) {
    throw UsageError("window must be 're_lo re_hi im_lo im_hi'");
  }
  const double y0 = to_double(m.take_or("track", "y0", "0"), "y0");
  const double y1 = to_double(m.take("track", "y1"), "y1");
  const int samples =
      static_cast<int>(to_int(m.take_or("track", "samples", "20"), "samples"));
  const int grid = static_cast<int>(to_int(m.take_or("track", "grid", "40"), "grid"));
  if (samples < 2 || grid < 4) throw UsageError("track needs samples >= 2, grid >= 4");
  const double tol = pick_tol(m, ctx, 1e-6);
  m.assert_consumed();

  const TauFn tau = theta_tau(in.B, in.vecs);

  // coarse |tau| scan over the window at y0, then Newton polish and dedupe;
  // the sorted result is the deterministic seed list
  std::vector<cdouble> seeds;
  {
    double norm = 0.0;
    std::vector<std::pair<double, cdouble>> probes;
    for (int i = 0; i <= grid; ++i) {
      for (int j = 0; j <= grid; ++j) {
        const cdouble x(window[0] + (window[1] - window[0]) * i / grid,
                        window[2] + (window[3] - window[2]) * j / grid);
        const double a = std::abs(tau(x, y0).f);
        norm = std::max(norm, a);
        probes.emplace_back(a, x);
      }
    }
    std::stable_sort(probes.begin(), probes.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    const double diam = std::hypot(window[1] - window[0], window[3] - window[2]);
    for (const auto& [a, x0] : probes) {
      if (a > 0.05 * norm) break;
      cdouble x = x0;
      bool ok = false;
      for (int it = 0; it < 50; ++it) {
        const TauJet j = tau(x, y0);
        if (std::abs(j.f) <= 1e-12 * norm) {
          ok = true;
          break;
        }
        if (std::abs(j.fx) < 1e-14 * norm) break;
        x -= j.f / j.fx;
        if (std::abs(x - x0) > 0.5 * diam) break;
      }
      if (!ok) continue;
      bool fresh = true;
      for (const cdouble& s : seeds) {
        if (std::abs(x - s) < 1e-7 * (1.0 + diam)) fresh = false;
      }
      if (fresh) seeds.push_back(x);
    }
    std::stable_sort(seeds.begin(), seeds.end(), [](cdouble a, cdouble b) {
      if (a.real() != b.real()) return a.real() < b.real();
      return a.imag() < b.imag();
    });
  }
  if (seeds.empty()) {
    throw SamplingError("no zeros of tau in the window at y0; widen the window");
  }

  TrackOptions topt;
  topt.samples = samples;
  const std::vector<ZeroPath> paths = track_zeros(tau, seeds, y0, y1, topt);

  ResidualReport rep;
  rep.criterion = "residue_condition";
  rep.tol_used = tol;
  // every pole of u carries strength 2, so the raw residues are already
  // measured against an order-one quantity
  rep.normalization = 1.0;
  rep.details["zeros"] = std::to_string(paths.size());
  for (std::size_t k = 0; k < paths[0].y.size(); ++k) {
    std::vector<cdouble> zeros;
    for (const ZeroPath& path : paths) zeros.push_back(path.x[k]);
    const std::vector<cdouble> res = residue_condition(tau, paths[0].y[k], zeros);
    double worst = 0.0;
    for (const cdouble& r : res) worst = std::max(worst, std::abs(r));
    rep.record(worst);
  }

  std::string csv = "y";
  for (std::size_t i = 0; i < paths.size(); ++i) {
    csv += ",zero" + std::to_string(i + 1) + "_re,zero" + std::to_string(i + 1) + "_im";
  }
  csv += "\n";
  for (std::size_t k = 0; k < paths[0].y.size(); ++k) {
    csv += format_double(paths[0].y[k]);
    for (const ZeroPath& path : paths) {
      csv += "," + format_double(path.x[k].real()) + "," + format_double(path.x[k].imag());
    }
    csv += "\n";
  }
  out.write(".csv", csv);
  return finish_report(rep, out);
}

int run_cm_residue(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "cm.residue");
  const CMState s0 = load_cm_state(m, "cm");
  const double eval_y = to_double(m.take_or("cm", "eval_y", "0.25"), "eval_y");
  int perturb_index = -1;
  cdouble perturb_p{0.0, 0.0};
  double perturb_y = 0.0;
  if (m.has("cm", "perturb_index")) {
    perturb_index = static_cast<int>(to_int(m.take("cm", "perturb_index"), "perturb_index"));
    perturb_p = to_complex(m.take("cm", "perturb_p"), "perturb_p");
    perturb_y = to_double(m.take_or("cm", "perturb_y", "0"), "perturb_y");
    if (perturb_index < 0 || perturb_index >= static_cast<int>(s0.x.size())) {
      throw UsageError("perturb_index out of range");
    }
  }
  const double tol = pick_tol(m, ctx, 1e-8);
  m.assert_consumed();

  const double pad = eval_y >= s0.y ? 0.05 : -0.05;
  const Trajectory traj = cm_integrate(s0, eval_y + pad);
  // Pole paths from the integrated flow; an optional velocity defect drifts
  // one path linearly while the reported accelerations stay those of the
  // true flow, the flow-inconsistent pattern the condition must flag.
  PolePaths paths = [&traj, &s0, perturb_index, perturb_p, perturb_y](
                        double y, std::vector<cdouble>& x, std::vector<cdouble>& v,
                        std::vector<cdouble>& a) {
    CMState st = traj.at(y);
    st.kind = s0.kind;
    st.period1 = s0.period1;
    st.period2 = s0.period2;
    x = st.x;
    v = st.p;
    a = cm_rhs(st);
    if (perturb_index >= 0) {
      x[static_cast<std::size_t>(perturb_index)] += perturb_p * (y - perturb_y);
      v[static_cast<std::size_t>(perturb_index)] += perturb_p;
    }
  };
  const TauFn tau = product_tau(paths);
  std::vector<cdouble> zeros;
  {
    std::vector<cdouble> x, v, a;
    paths(eval_y, x, v, a);
    zeros = x;
  }
  const std::vector<cdouble> res = residue_condition(tau, eval_y, zeros);

  ResidualReport rep;
  rep.criterion = "residue_condition";
  rep.tol_used = tol;
  rep.normalization = 1.0;
  for (const cdouble& r : res) rep.record(std::abs(r));
  rep.details["eval_y"] = format_double(eval_y);
  if (perturb_index >= 0) {
    rep.details["perturb_index"] = std::to_string(perturb_index);
    rep.details["perturb_p"] = format_complex(perturb_p);
  }
  return finish_report(rep, out);
}

// ---------------------------------------------------------------------------
// waves group

int run_waves_recurse(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "waves.recurse");
  const std::vector<cdouble> x = to_complex_list(m.take("waves", "x"), "x");
  const std::vector<cdouble> p = to_complex_list(m.take("waves", "p"), "p");
  if (x.size() != p.size()) throw UsageError("[waves] x and p must have equal length");
  const int steps = static_cast<int>(to_int(m.take_or("waves", "steps", "6"), "steps"));
  if (steps < 1 || steps > 8) throw UsageError("steps must be between 1 and 8");
  const double tol = pick_tol(m, ctx, 1e-12);
  m.assert_consumed();

  ResidualReport rep;
  rep.criterion = "wave_obstruction";
  rep.tol_used = tol;
  rep.normalization = 1.0;
  const FramePtr frame = make_cm_frame(x, p, steps + 2);
  try {
    const WaveSeries ws = wave_recursion(frame, steps, tol);
    // completion is the certificate: every antiderivative residue stayed
    // under tol, otherwise the recursion would have thrown
    rep.samples = steps;
    rep.details["steps"] = std::to_string(steps);
    rep.details["residues_below"] = format_double(tol);
    return finish_report(rep, out, wave_dump(ws));
  } catch (const ObstructionError& e) {
    for (const cdouble& r : e.residues) rep.record(std::abs(r));
    for (double s : e.strengths) rep.record(s);
    rep.details["failed_step"] = std::to_string(e.step);
    const int status = finish_report(rep, out);
    std::fprintf(stderr, "obstruction: %s\n", e.what());
    return status == 0 ? 1 : status;
  }
}

int run_waves_psido_check(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "waves.psido-check");
  const std::uint64_t seed = required_seed(m, ctx);
  const std::vector<cdouble> x = to_complex_list(m.take("waves", "x"), "x");
  const std::vector<cdouble> p = to_complex_list(m.take("waves", "p"), "p");
  if (x.size() != p.size()) throw UsageError("[waves] x and p must have equal length");
  const int pairs = static_cast<int>(to_int(m.take_or("waves", "pairs", "20"), "pairs"));
  const int m_max = static_cast<int>(to_int(m.take_or("waves", "m_max", "2"), "m_max"));
  if (pairs < 1 || pairs > 500) throw UsageError("pairs must be between 1 and 500");
  if (m_max < 1 || m_max > 2) throw UsageError("m_max must be 1 or 2");
  const double tol = pick_tol(m, ctx, 1e-11);
  m.assert_consumed();

  std::mt19937_64 rng(seed);
  const auto u01 = [&rng]() { return (rng() >> 11) * 0x1.0p-53; };
  const auto rand_jet = [&](int len) {
    std::vector<cdouble> c(static_cast<std::size_t>(len));
    for (cdouble& v : c) v = cdouble(2.0 * u01() - 1.0, 2.0 * u01() - 1.0);
    return TaylorJet::from_coeffs(std::move(c));
  };
  const FramePtr stat = make_static_frame(x, 6);
  const auto rand_rational = [&]() {
    RationalFunction f{stat};
    for (int i = 0; i < stat->size(); ++i) {
      f.add_pole_term(i, 1, rand_jet(6));
      f.add_pole_term(i, 2, rand_jet(6));
    }
    f.add_poly_term(0, rand_jet(6));
    f.add_poly_term(1, rand_jet(6));
    return f;
  };

  ResidualReport rep;
  rep.criterion = "psido_identities";
  rep.tol_used = tol;
  rep.normalization = 1.0;
  double dickey_max = 0.0;
  for (int n = 0; n < pairs; ++n) {
    PsiDO P = PsiDO::zero(stat);
    PsiDO Q = PsiDO::zero(stat);
    const int tp = static_cast<int>(rng() % 3);
    const int tq = static_cast<int>(rng() % 3);
    for (int o = tp; o >= tp - 4; --o) P.set_coeff(o, rand_rational());
    for (int o = tq; o >= tq - 4; --o) Q.set_coeff(o, rand_rational());
    const double d = dickey_defect(P, Q);
    dickey_max = std::max(dickey_max, d);
    rep.record(d);
  }
  const FramePtr frame = make_cm_frame(x, p, 10);
  const WaveSeries ws = wave_recursion(frame, 6);
  double lax_max = 0.0;
  for (int mm = 1; mm <= m_max; ++mm) {
    const double d = lax_defect(ws, mm);
    lax_max = std::max(lax_max, d);
    rep.record(d);
  }
  rep.seed = seed;
  rep.details["dickey_max"] = format_double(dickey_max);
  rep.details["lax_max"] = format_double(lax_max);
  rep.details["pairs"] = std::to_string(pairs);
  return finish_report(rep, out);
}

// ---------------------------------------------------------------------------
// schottky group

int run_schottky_kp(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "schottky.kp");
  const JacobianInput in = load_jacobian(m);
  need_uvw(in, true, true, true);
  GridSpec grid;
  grid.xs = to_double_list(m.take("grid", "xs"), "xs");
  grid.ys = to_double_list(m.take("grid", "ys"), "ys");
  grid.ts = to_double_list(m.take("grid", "ts"), "ts");
  const double tol = pick_tol(m, ctx, 1e-6);
  m.assert_consumed();
  return finish_report(kp_residual(in.B, in.vecs, grid, tol), out);
}

int run_schottky_dubrovin(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "schottky.dubrovin");
  const JacobianInput in = load_jacobian(m);
  need_uvw(in, true, true, true);
  const double tol = pick_tol(m, ctx, 1e-6);
  m.assert_consumed();
  DubrovinResult res = dubrovin_residual(in.B, in.vecs, tol);
  res.report.details["c"] = format_complex(res.c);
  return finish_report(res.report, out);
}

int run_schottky_divisor_eq(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "schottky.divisor-eq");
  const std::uint64_t seed = required_seed(m, ctx);
  const JacobianInput in = load_jacobian(m);
  need_uvw(in, true, true, false);
  const int points =
      static_cast<int>(to_int(m.take_or("divisor", "points", "40"), "points"));
  const double tol = pick_tol(m, ctx, 1e-6);
  m.assert_consumed();
  const DivisorSample sample = sample_divisor(in.B, in.vecs.U, points, seed);
  ResidualReport rep = divisor_eq_residual(in.B, in.vecs.U, in.vecs.V, sample, tol);
  rep.details["lines_failed"] = std::to_string(sample.lines_failed);
  return finish_report(rep, out);
}

int run_schottky_flex(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "schottky.flex");
  const JacobianInput in = load_jacobian(m);
  if (!in.pd) {
    throw UsageError("schottky.flex derives its spectral data from a curve; "
                     "give [jacobian] a curve_file or branch_points");
  }
  const cdouble x_p = to_complex(m.take("flex", "x_p"), "x_p");
  std::vector<cdouble> waypoints;
  if (m.has("flex", "waypoints")) {
    waypoints = to_complex_list(m.take("flex", "waypoints"), "waypoints");
  }
  const double tol = pick_tol(m, ctx, 1e-5);
  m.assert_consumed();
  const KPVectors fx = flex_data(*in.pd, x_p, waypoints);
  ResidualReport rep = flex_residual(in.B, fx.U, fx.V, fx.A, fx.p, fx.E, tol);
  rep.details["A"] = vector_text(fx.A);
  rep.details["p"] = format_complex(fx.p);
  rep.details["E"] = format_complex(fx.E);
  return finish_report(rep, out);
}

int run_schottky_search(Manifest& m, const RunContext& ctx) {
  const Outputs out = make_outputs(m, ctx, "schottky.search");
  SearchOptions opts;
  opts.seed = required_seed(m, ctx);
  const JacobianInput in = load_jacobian(m);
  opts.multistarts = static_cast<int>(
      to_int(m.take_or("search", "multistarts", std::to_string(opts.multistarts)),
             "multistarts"));
  opts.simplex_iters = static_cast<int>(
      to_int(m.take_or("search", "simplex_iters", std::to_string(opts.simplex_iters)),
             "simplex_iters"));
  opts.sample_points = static_cast<int>(
      to_int(m.take_or("search", "sample_points", std::to_string(opts.sample_points)),
             "sample_points"));
  opts.target = pick_tol(m, ctx, opts.target);
  m.assert_consumed();

  SearchResult res = search_uv(in.B, opts);
  res.report.details["converged"] = res.converged ? "1" : "0";
  res.report.details["U"] = vector_text(res.U);
  res.report.details["V"] = vector_text(res.V);
  return finish_report(res.report, out);
}

}  // namespace

const std::vector<std::string>& command_ids() {
  static const std::vector<std::string> ids = {
      "theta.eval",        "theta.deriv",       "theta.char",
      "curve.periods",     "curve.vectors",     "curve.flex",
      "cm.simulate",       "cm.track",          "cm.residue",
      "waves.recurse",     "waves.psido-check", "schottky.kp",
      "schottky.dubrovin", "schottky.divisor-eq", "schottky.flex",
      "schottky.search"};
  return ids;
}

int run_command(const std::string& command, Manifest& m, const RunContext& ctx) {
  if (m.has("run", "command")) {
    const std::string declared = m.take("run", "command");
    if (declared != command) {
      throw UsageError("manifest declares command '" + declared + "' but '" + command +
                       "' was requested");
    }
  }
  // a stray seed on a deterministic command would be silently ignored
  // otherwise; consume it only for the stochastic ones
  const bool stochastic = command == "schottky.divisor-eq" ||
                          command == "schottky.search" ||
                          command == "waves.psido-check";
  if (!stochastic && (m.has("run", "seed") || ctx.has_seed)) {
    throw UsageError("command '" + command + "' is deterministic; remove the seed");
  }

  if (command == "theta.eval" || command == "theta.deriv" || command == "theta.char") {
    return run_theta(command, m, ctx);
  }
  if (command == "curve.periods" || command == "curve.vectors" || command == "curve.flex") {
    return run_curve(command, m, ctx);
  }
  if (command == "cm.simulate") return run_cm_simulate(m, ctx);
  if (command == "cm.track") return run_cm_track(m, ctx);
  if (command == "cm.residue") return run_cm_residue(m, ctx);
  if (command == "waves.recurse") return run_waves_recurse(m, ctx);
  if (command == "waves.psido-check") return run_waves_psido_check(m, ctx);
  if (command == "schottky.kp") return run_schottky_kp(m, ctx);
  if (command == "schottky.dubrovin") return run_schottky_dubrovin(m, ctx);
  if (command == "schottky.divisor-eq") return run_schottky_divisor_eq(m, ctx);
  if (command == "schottky.flex") return run_schottky_flex(m, ctx);
  if (command == "schottky.search") return run_schottky_search(m, ctx);
  throw UsageError("unknown command '" + command + "'");
}

}  // namespace schottkylab
