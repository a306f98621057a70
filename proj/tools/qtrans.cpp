// qtrans: command-line front end.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "qtrans/qtrans.hpp"
#include "report.hpp"

#ifndef QTRANS_VERSION
#define QTRANS_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace qtrans;
using report::checked;
using report::num;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  std::string out;
  std::string config;
  int threads = 1;
  std::string format = "json";
};

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Output sink: stdout when --out is empty, otherwise a file or a directory.
class Sink {
 public:
  Sink(const std::string& out, std::string default_name) : out_(out), default_(std::move(default_name)) {
    if (out_.empty()) return;
    fs::path p(out_);
    if (p.has_extension()) {
      file_ = p;
      dir_ = p.has_parent_path() ? p.parent_path() : fs::path(".");
    } else {
      dir_ = p;
      file_ = p / default_;
    }
    fs::create_directories(dir_);
  }

  bool to_stdout() const { return out_.empty(); }
  const fs::path& dir() const { return dir_; }

  void primary(const std::string& text) const { write(file_, text); }

  void extra(const std::string& name, const std::string& text) const {
    if (!to_stdout()) write(dir_ / name, text);
  }

  static void write(const fs::path& p, const std::string& text) {
    if (p.empty()) {
      std::cout << text;
      return;
    }
    std::ofstream f(p, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write '" + p.string() + "'");
    f << text;
  }

 private:
  std::string out_, default_;
  fs::path dir_, file_;
};

std::string dump(const json& j) { return j.dump(2) + "\n"; }

std::map<std::string, std::string> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      return s.substr(a, s.find_last_not_of(" \t\r") - a + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

// Config entries become flags placed right after the subcommand name, so that
// explicit flags (parsed later, last one wins) override them.
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string cfg;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) cfg = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) cfg = args[i].substr(9);
  }
  if (cfg.empty()) return args;
  std::vector<std::string> extra;
  for (const auto& [k, v] : read_config(cfg)) {
    if (k == "config") throw UsageError("config: nested config files are not supported");
    extra.push_back("--" + k);
    extra.push_back(v);
  }
  std::size_t pos = 0;
  while (pos < args.size() && args[pos].rfind("-", 0) == 0) pos += (args[pos].find('=') == std::string::npos) ? 2 : 1;
  if (pos >= args.size()) throw UsageError("config given without a subcommand");
  args.insert(args.begin() + static_cast<std::ptrdiff_t>(pos) + 1, extra.begin(), extra.end());
  return args;
}

json resolved_options(const CLI::App* app) {
  json j = json::object();
  for (const CLI::Option* opt : app->get_options()) {
    std::string name = opt->get_name();
    if (name.empty() || name == "--help" || name == "--version") continue;
    while (!name.empty() && name[0] == '-') name.erase(0, 1);
    if (opt->get_expected_min() == 0) {
      j[name] = opt->count() > 0;
      continue;
    }
    if (opt->count() > 0) {
      const auto& r = opt->results();
      j[name] = r.size() == 1 ? json(r[0]) : json(r);
    } else {
      j[name] = opt->get_default_str();
    }
  }
  return j;
}

void write_manifest(const Sink& sink, const CLI::App& app, const CLI::App* sub) {
  if (sink.to_stdout()) return;
  json m;
  m["program"] = "qtrans";
  m["version"] = QTRANS_VERSION;
  m["subcommand"] = sub->get_name();
  m["global"] = resolved_options(&app);
  m["config"] = resolved_options(sub);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  m["timestamp"] = buf;
  Sink::write(sink.dir() / "manifest.json", dump(m));
}

BVDatum load_datum(const std::string& spec) {
  if (spec == "double_step") return BVDatum::double_step();
  return BVDatum::load(spec);
}

// Evaluates fn(i) for i in [0, n) on `threads` workers.
template <class Fn>
void parallel_for(int n, int threads, Fn fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) fn(i);
    });
  for (auto& th : pool) th.join();
}

std::string table(const Globals& g, const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
  std::ostringstream o;
  if (g.format == "csv") {
    CsvWriter w(o, header);
    for (const auto& r : rows) w.row(r);
    return o.str();
  }
  json arr = json::array();
  for (const auto& r : rows) {
    json rec;
    for (std::size_t i = 0; i < header.size(); ++i) rec[header[i]] = num(r[i]);
    arr.push_back(rec);
  }
  return dump(arr);
}

std::string ext(const Globals& g) { return g.format == "csv" ? ".csv" : ".json"; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quantitative transversality and shock counting toolkit"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.fallthrough();
  app.require_subcommand(1);
  Globals G;
  app.add_option("--seed", G.seed, "random seed")->capture_default_str();
  app.add_option("--out", G.out, "output file or directory (default: stdout)");
  app.add_option("--config", G.config, "flat key = value file with defaults for the subcommand's flags");
  app.add_option("--threads", G.threads, "worker threads for solution queries")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--format", G.format, "table format")->capture_default_str()->check(CLI::IsMember({"csv", "json"}));
  app.set_version_flag("--version", QTRANS_VERSION);

  // decompose
  int dec_dim = 2;
  auto* dec = app.add_subcommand("decompose", "simplices of the cone decomposition of [0,1]^d");
  dec->add_option("--dim", dec_dim, "cube dimension")->required();

  // modulus
  std::string mod_g = "sin:1";
  int mod_n = 100001;
  std::vector<double> mod_delta, mod_s;
  double mod_holder_norm = 0.0, mod_alpha = 0.0;
  auto* mod = app.add_subcommand("modulus", "modulus of continuity and its inverse");
  mod->add_option("--g", mod_g, "function spec")->capture_default_str();
  mod->add_option("--n", mod_n, "samples per axis")->capture_default_str();
  mod->add_option("--delta", mod_delta, "points where omega is evaluated")->delimiter(',');
  mod->add_option("--s", mod_s, "levels where Psi is evaluated")->delimiter(',');
  mod->add_option("--holder-norm", mod_holder_norm, "Hoelder seminorm for the Psi lower bound");
  mod->add_option("--alpha", mod_alpha, "Hoelder exponent");

  // entropy
  std::string ent_cells;
  double ent_radius = 0.1;
  auto* ent = app.add_subcommand("entropy", "covering number, entropy and Lambda of a cell union");
  ent->add_option("--cells", ent_cells, "file: 'd K' then one linear cell index per line")->required();
  ent->add_option("--radius", ent_radius, "ball radius")->required();

  // perturb
  std::string per_g = "sin:2", per_w = "zero";
  double per_eps = 0.05;
  int per_n = 4097, per_samples = 2001;
  std::int64_t per_probe = 1000000;
  bool per_pin = false;
  auto* per = app.add_subcommand("perturb", "transversal perturbation with zero-set measure bound");
  per->add_option("--g", per_g, "function spec")->capture_default_str();
  per->add_option("--W", per_w, "manifold spec")->capture_default_str();
  per->add_option("--eps", per_eps, "sup-norm budget")->required();
  per->add_option("--n", per_n, "samples per axis of g")->capture_default_str();
  per->add_option("--samples", per_samples, "samples per axis in perturbed.csv")->capture_default_str();
  per->add_option("--probe", per_probe, "dense-probe points")->capture_default_str();
  per->add_flag("--pin-boundary", per_pin, "never nudge boundary vertices");

  // sharp
  double sh_eps = 0.015625;
  int sh_depth = 3;
  std::int64_t sh_scan = 1 << 20;
  auto* sh = app.add_subcommand("sharp", "forced zero counts of the sharpness example");
  sh->add_option("--eps", sh_eps, "perturbation size")->required();
  sh->add_option("--depth", sh_depth, "number of blocks")->capture_default_str();
  sh->add_option("--scan", sh_scan, "oracle resolution")->capture_default_str();

  // mollify
  std::string mo_datum = "double_step";
  double mo_delta = 0.05;
  int mo_n = 2001;
  auto* mo = app.add_subcommand("mollify", "mollified datum and derivative bounds");
  mo->add_option("--datum", mo_datum, "datum file or 'double_step'")->capture_default_str();
  mo->add_option("--delta", mo_delta, "mollifier radius")->capture_default_str();
  mo->add_option("--n", mo_n, "samples in the table")->capture_default_str();

  // pipeline / solve / shocks share the datum, flux and eps
  std::string pl_datum = "double_step", pl_flux = "burgers";
  double pl_eps = 0.4;
  int pl_n = 2001;
  auto* pl = app.add_subcommand("pipeline", "C2 datum with controlled inflections");
  pl->add_option("--datum", pl_datum, "datum file or 'double_step'")->capture_default_str();
  pl->add_option("--flux", pl_flux, "burgers | cubic | exp | poly:c2,c3,c4")->capture_default_str();
  pl->add_option("--eps", pl_eps, "L1 budget")->capture_default_str();
  pl->add_option("--n", pl_n, "samples in vbar.csv and F.csv")->capture_default_str();

  std::string so_datum = "double_step", so_flux = "burgers";
  double so_t = 1.0, so_xmin = -3.0, so_xmax = 3.0, so_eps = 0.0;
  int so_n = 1001;
  auto* so = app.add_subcommand("solve", "entropy solution by the Lax-Oleinik formula");
  so->add_option("--datum", so_datum, "datum file or 'double_step'")->capture_default_str();
  so->add_option("--flux", so_flux, "flux spec")->capture_default_str();
  so->add_option("--t", so_t, "time")->capture_default_str();
  so->add_option("--xmin", so_xmin)->capture_default_str();
  so->add_option("--xmax", so_xmax)->capture_default_str();
  so->add_option("--n", so_n, "number of points")->capture_default_str();
  so->add_option("--eps", so_eps, "if > 0, solve from the reconstructed datum at this budget")->capture_default_str();

  std::string sk_datum = "double_step", sk_flux = "burgers", sk_tgrid = "0.05:4:64";
  double sk_eps = 0.4;
  int sk_n = 1000;
  auto* sk = app.add_subcommand("shocks", "shock curves of the solution from the reconstructed datum");
  sk->add_option("--datum", sk_datum, "datum file or 'double_step'")->capture_default_str();
  sk->add_option("--flux", sk_flux, "flux spec")->capture_default_str();
  sk->add_option("--eps", sk_eps, "L1 budget")->capture_default_str();
  sk->add_option("--tgrid", sk_tgrid, "tmin:tmax:count (geometric) or t1,t2,...")->capture_default_str();
  sk->add_option("--n", sk_n, "spatial samples per time")->capture_default_str();

  // bounds
  std::string bd_flux = "burgers";
  double bd_V = 4.0, bd_R = 1.0, bd_eps = 0.0;
  std::int64_t bd_N = 0;
  auto* bd = app.add_subcommand("bounds", "closed-form bounds of the shock-count estimate");
  bd->add_option("--flux", bd_flux, "flux spec")->capture_default_str();
  bd->add_option("--V", bd_V, "total variation")->capture_default_str();
  bd->add_option("--R", bd_R, "support radius")->capture_default_str();
  bd->add_option("--eps", bd_eps, "budget for Phi and the shock bound");
  bd->add_option("--N", bd_N, "shock budget for the corollary");

  std::vector<std::string> args;
  try {
    args = expand_config(argc, argv);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << dump(json{{"error", {{"type", "usage"}, {"message", e.what()}}}});
    return 2;
  } catch (const UsageError& e) {
    std::cerr << dump(json{{"error", {{"type", "usage"}, {"message", e.what()}}}});
    return 2;
  }

  const CLI::App* sub = app.get_subcommands().front();
  const std::string name = sub->get_name();
  std::string stage = name;
  try {
    if (name == "decompose") {
      Sink sink(G.out, "simplices" + ext(G));
      const auto D = decompose_cube(dec_dim);
      std::vector<std::string> header{"simplex", "vertex"};
      for (int a = 0; a < dec_dim; ++a) header.push_back("x" + std::to_string(a + 1));
      std::vector<std::vector<double>> rows;
      for (std::size_t s = 0; s < D.size(); ++s)
        for (std::size_t v = 0; v < D[s].vertices.size(); ++v) {
          std::vector<double> r{static_cast<double>(s), static_cast<double>(v)};
          for (double c : D[s].vertices[v]) r.push_back(c);
          rows.push_back(r);
        }
      sink.primary(table(G, header, rows));
      write_manifest(sink, app, sub);
    } else if (name == "modulus") {
      Sink sink(G.out, "modulus.json");
      const auto g = make_function(mod_g, mod_n);
      ModulusEstimator est(g, G.seed);
      json j;
      j["g"] = mod_g;
      j["diameter"] = num(est.diameter());
      j["max_oscillation"] = num(est.max_oscillation());
      json om = json::array(), ps = json::array();
      for (double d : mod_delta) om.push_back({{"delta", num(d)}, {"omega", num(est.omega(d))}});
      for (double s : mod_s) {
        json e{{"s", num(s)}, {"psi", num(est.psi(s))}};
        if (mod_alpha > 0.0 && mod_holder_norm > 0.0)
          e["holder_lower_bound"] = checked(holder_psi_lower_bound(mod_holder_norm, mod_alpha, s), est.psi(s));
        ps.push_back(e);
      }
      j["omega"] = om;
      j["psi"] = ps;
      sink.primary(dump(j));
      write_manifest(sink, app, sub);
    } else if (name == "entropy") {
      Sink sink(G.out, "entropy.json");
      std::ifstream in(ent_cells);
      if (!in) throw UsageError("cannot open cells file '" + ent_cells + "'");
      int d = 0;
      std::int64_t K = 0;
      if (!(in >> d >> K)) throw UsageError("cells file: expected 'd K' header");
      std::vector<std::int64_t> idx;
      for (std::int64_t i; in >> i;) idx.push_back(i);
      const auto cells = CellSet::from_indices(d, K, idx);
      const auto N = covering_number(cells, ent_radius);
      json j{{"d", d},
             {"K", K},
             {"cells", cells.size()},
             {"radius", num(ent_radius)},
             {"N", N},
             {"H", num(epsilon_entropy(cells, ent_radius))},
             {"Lambda", num(lambda_epsilon(cells, ent_radius))}};
      sink.primary(dump(j));
      write_manifest(sink, app, sub);
    } else if (name == "perturb") {
      Sink sink(G.out, "result.json");
      const auto g = make_function(per_g, per_n);
      const auto W = make_manifold(per_w, g.out_dim());
      PerturbOptions po;
      po.seed = G.seed;
      po.probe = per_probe;
      po.pin_boundary = per_pin;
      stage = "perturb";
      const auto r = perturb(g, W, per_eps, po);
      sink.primary(dump(report::perturb_json(r, per_g, per_w)));
      if (!sink.to_stdout()) {
        std::ostringstream sl;
        std::vector<std::string> hdr{"slice", "cell", "simplex", "dim", "measure", "point"};
        for (int a = 0; a < g.dim(); ++a) hdr.push_back("x" + std::to_string(a + 1));
        CsvWriter w(sl, hdr);
        const Box& b = g.domain();
        for (std::size_t s = 0; s < r.slices.size(); ++s) {
          const auto& z = r.slices[s];
          for (std::size_t k = 0; k < z.points.size(); ++k) {
            std::vector<double> row{static_cast<double>(s), static_cast<double>(z.cell), static_cast<double>(z.simplex),
                                    static_cast<double>(z.dim), z.measure, static_cast<double>(k)};
            for (int a = 0; a < g.dim(); ++a) row.push_back(b.lo[a] + b.side(a) * z.points[k][a]);
            w.row(row);
          }
        }
        sink.extra("slices.csv", sl.str());
        std::ostringstream ps;
        std::vector<std::string> ph;
        for (int a = 0; a < g.dim(); ++a) ph.push_back("x" + std::to_string(a + 1));
        for (int i = 0; i < g.out_dim(); ++i) ph.push_back("g" + std::to_string(i + 1));
        for (int i = 0; i < g.out_dim(); ++i) ph.push_back("g_delta" + std::to_string(i + 1));
        CsvWriter pw(ps, ph);
        std::int64_t total = 1;
        for (int a = 0; a < g.dim(); ++a) total *= per_samples;
        std::vector<double> x(g.dim()), u(g.dim()), gv(g.out_dim()), hv(g.out_dim());
        PlotSeries s0{"g", {}, {}}, s1{"g_delta", {}, {}};
        for (std::int64_t k = 0; k < total; ++k) {
          std::int64_t rem = k;
          for (int a = g.dim() - 1; a >= 0; --a) {
            u[a] = static_cast<double>(rem % per_samples) / (per_samples - 1);
            x[a] = b.lo[a] + b.side(a) * u[a];
            rem /= per_samples;
          }
          g.evaluate(x, gv);
          r.evaluate_unit(u.data(), hv.data());
          std::vector<double> row(x);
          row.insert(row.end(), gv.begin(), gv.end());
          row.insert(row.end(), hv.begin(), hv.end());
          pw.row(row);
          if (g.dim() == 1 && g.out_dim() == 1) {
            s0.x.push_back(x[0]);
            s0.y.push_back(gv[0]);
            s1.x.push_back(x[0]);
            s1.y.push_back(hv[0]);
          }
        }
        sink.extra("perturbed.csv", ps.str());
        if (g.dim() == 1 && g.out_dim() == 1)
          sink.extra("perturbed.svg", emit_plot({s0, s1}, {"g and g_delta", "x", "value"}));
      }
      write_manifest(sink, app, sub);
    } else if (name == "sharp") {
      Sink sink(G.out, "sharp.json");
      const int n = sharp_window(sh_eps);
      json j;
      j["eps"] = num(sh_eps);
      j["depth"] = sh_depth;
      j["n_window"] = n;
      j["lower_bound"] = num(forced_zero_lower_bound(sh_eps));
      const SharpExample ex(sh_depth);
      auto g = SampledFunction::scalar(0.0, 1.0, (1 << 16) + 1, [ex](double x) { return ex(std::clamp(x, 0.0, 1.0)); });
      PerturbOptions po;
      po.seed = G.seed;
      stage = "perturb";
      const auto r = perturb(g, GraphManifold::zero(1), sh_eps, po);
      const auto h = r.perturbed((1 << 16) + 1);
      stage = "sharp";
      j["oracle_count"] = count_zeros_oracle(h, sh_scan);
      j["perturb_slices"] = static_cast<std::int64_t>(r.slices.size());
      j["unperturbed_count"] = count_zeros_oracle(g, sh_scan);
      sink.primary(dump(j));
      write_manifest(sink, app, sub);
    } else if (name == "mollify") {
      Sink sink(G.out, "mollified" + ext(G));
      const auto datum = load_datum(mo_datum);
      const auto u = mollify(datum, mo_delta);
      std::vector<std::vector<double>> rows;
      const double a = u.support_lo() - mo_delta, b = u.support_hi() + mo_delta;
      for (int i = 0; i < mo_n; ++i) {
        const double x = a + (b - a) * i / (mo_n - 1);
        rows.push_back({x, datum.u(x), u(x, 0), u(x, 1), u(x, 2), u(x, 3)});
      }
      sink.primary(table(G, {"x", "u", "u_delta", "u_delta_1", "u_delta_2", "u_delta_3"}, rows));
      const auto bnd = mollifier::derivative_bounds(datum.V, mo_delta);
      const auto got = u.sampled_derivative_norms();
      json j{{"delta", num(mo_delta)},
             {"l1_error", checked(u.l1_error(), datum.V * mo_delta)},
             {"d1", checked(got[0], bnd[0])},
             {"d2", checked(got[1], bnd[1])},
             {"d3", checked(got[2], bnd[2])}};
      if (sink.to_stdout())
        std::cerr << dump(j);
      else
        sink.extra("bounds.json", dump(j));
      write_manifest(sink, app, sub);
    } else if (name == "pipeline") {
      Sink sink(G.out, "result.json");
      const auto datum = load_datum(pl_datum);
      const auto flux = FluxFunction::parse(pl_flux);
      PipelineOptions po;
      po.seed = G.seed;
      const auto p = pipeline(datum, flux, pl_eps, po);
      stage = "emit";
      sink.primary(dump(report::pipeline_json(p, pl_datum, pl_eps)));
      if (!sink.to_stdout()) {
        const auto& rd = p.datum;
        const double a = -datum.R - 3.0 * rd.delta, b = datum.R + 3.0 * rd.delta;
        const auto u = mollify(datum, rd.delta);
        std::ostringstream vs, fs_;
        CsvWriter vw(vs, {"x", "u", "vbar"});
        CsvWriter fw(fs_, {"x", "F", "F1", "F2", "fprime_u_delta"});
        PlotSeries sF{"F", {}, {}}, sU{"f'(u_delta)", {}, {}};
        for (int i = 0; i < pl_n; ++i) {
          const double x = a + (b - a) * i / (pl_n - 1);
          vw.row({x, datum.u(x), rd.vbar(x)});
          const double fx = rd.F(x), fu = flux.d1(u(x, 0));
          fw.row({x, fx, rd.F(x, 1), rd.F(x, 2), fu});
          sF.x.push_back(x);
          sF.y.push_back(fx);
          sU.x.push_back(x);
          sU.y.push_back(fu);
        }
        sink.extra("vbar.csv", vs.str());
        sink.extra("F.csv", fs_.str());
        sink.extra("F.svg", emit_plot({sF, sU}, {"F and f'(u_delta)", "x", "speed"}));
      }
      write_manifest(sink, app, sub);
    } else if (name == "solve") {
      Sink sink(G.out, "solution" + ext(G));
      const auto datum = load_datum(so_datum);
      const auto flux = FluxFunction::parse(so_flux);
      std::optional<EntropySolution> sol;
      if (so_eps > 0.0) {
        PipelineOptions po;
        po.seed = G.seed;
        const auto p = pipeline(datum, flux, so_eps, po);
        stage = "solve_entropy";
        sol.emplace(EntropySolution::from_reconstruction(p.datum));
      } else {
        stage = "solve_entropy";
        sol.emplace(EntropySolution::from_piecewise(flux, datum.u));
      }
      if (so_n < 2) throw UsageError("--n must be >= 2");
      std::vector<std::vector<double>> rows(so_n);
      parallel_for(so_n, G.threads, [&](int i) {
        const double x = so_xmin + (so_xmax - so_xmin) * i / (so_n - 1);
        rows[i] = {x, (*sol)(so_t, x)};
      });
      sink.primary(table(G, {"x", "u"}, rows));
      write_manifest(sink, app, sub);
    } else if (name == "shocks") {
      Sink sink(G.out, "shocks.json");
      const auto datum = load_datum(sk_datum);
      const auto flux = FluxFunction::parse(sk_flux);
      std::vector<double> times;
      if (sk_tgrid.find(':') != std::string::npos) {
        double a = 0, b = 0, c = 0;
        char s1 = 0, s2 = 0;
        std::istringstream ss(sk_tgrid);
        if (!(ss >> a >> s1 >> b >> s2 >> c) || s1 != ':' || s2 != ':') throw UsageError("--tgrid: expected tmin:tmax:count");
        times = geometric_times(a, b, static_cast<int>(c));
      } else {
        std::stringstream ss(sk_tgrid);
        for (std::string item; std::getline(ss, item, ',');) times.push_back(std::stod(item));
        std::sort(times.begin(), times.end());
      }
      PipelineOptions po;
      po.seed = G.seed;
      const auto p = pipeline(datum, flux, sk_eps, po);
      stage = "solve_entropy";
      const auto sol = EntropySolution::from_reconstruction(p.datum);
      stage = "count_shocks";
      const auto scan = shock_generation_scan(sol, times, sk_n);
      json j = report::shock_scan_json(scan, p.inflections, p.theorem_bound);
      j["eps"] = num(sk_eps);
      j["inflections"] = p.inflections;
      j["theorem_bound"] = num(p.theorem_bound);
      sink.primary(dump(j));
      if (!sink.to_stdout()) {
        std::vector<PlotSeries> series;
        for (const auto& c : scan.curves) {
          PlotSeries s{"curve " + std::to_string(c.id), c.x, c.t, true};
          series.push_back(s);
        }
        if (!series.empty()) sink.extra("shocks.svg", emit_plot(series, {"shock curves", "x", "t"}));
      }
      write_manifest(sink, app, sub);
    } else if (name == "bounds") {
      Sink sink(G.out, "bounds.json");
      const auto flux = FluxFunction::parse(bd_flux);
      const auto n = flux_norms(flux, bd_V);
      json j{{"flux", flux.name()},
             {"V", num(bd_V)},
             {"R", num(bd_R)},
             {"c3", num(n.c3)},
             {"c4", num(n.c4)},
             {"lambda", num(n.lambda)}};
      if (bd_eps > 0.0) {
        const auto p = phi_bound(flux, bd_V, bd_R, bd_eps);
        j["eps"] = num(bd_eps);
        j["phi"] = {{"phi", num(p.phi)},       {"branch_c3", num(p.branch_c3)}, {"branch_psi", num(p.branch_psi)},
                    {"beta", num(p.beta)},     {"c4_constant", num(p.c4_constant)}};
        j["shock_bound"] = num(shock_bound(p, bd_V, bd_R, bd_eps));
      }
      if (bd_N > 0) {
        j["N"] = bd_N;
        j["corollary_eps"] = num(corollary_budget(flux, bd_V, bd_R, bd_N));
        j["eps_max"] = num(bd_R * bd_V / 4.0);
      }
      sink.primary(dump(j));
      write_manifest(sink, app, sub);
    }
  } catch (const UsageError& e) {
    std::cerr << dump(json{{"error", {{"type", "usage"}, {"message", e.what()}}}});
    return 2;
  } catch (const UnsupportedDimensionError& e) {
    std::cerr << dump(json{{"error", {{"type", "usage"}, {"stage", stage}, {"message", e.what()}}}});
    return 2;
  } catch (const StageError& e) {
    std::cerr << dump(json{{"error", {{"type", "numerical"}, {"stage", e.stage()}, {"message", e.what()}}}});
    return 1;
  } catch (const DomainError& e) {
    std::cerr << dump(json{{"error", {{"type", "domain"}, {"stage", stage}, {"message", e.what()}}}});
    return 2;
  } catch (const std::exception& e) {
    std::cerr << dump(json{{"error", {{"type", "numerical"}, {"stage", stage}, {"message", e.what()}}}});
    return 1;
  }
  return 0;
}
