#include "cli.hpp"

#include "polyvem/polyvem.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace polyvem::cli {

namespace {

using nlohmann::json;

double parse_number(const std::string& text, const std::string& what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) throw InvalidParameter("cannot parse " + what + " '" + text + "'");
  return v;
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(text);
  while (std::getline(in, cur, sep)) parts.push_back(cur);
  return parts;
}

void write_text(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream f(path);
  if (!f) throw ParseError("cannot open '" + path + "' for writing");
  f << text;
}

json quality_json(const PolyMesh& mesh, const MeshQualityReport& q) {
  return {{"cells", mesh.num_cells()},
          {"vertices", mesh.num_vertices()},
          {"edges", mesh.num_edges()},
          {"min_edge_to_diameter", q.min_edge_to_diameter},
          {"min_area_to_diameter_sq", q.min_area_to_diameter_sq},
          {"non_convex_cells", q.non_convex_cells},
          {"orientation_violations", q.orientation_violations},
          {"euler_characteristic", q.euler_characteristic},
          {"total_area", q.total_area},
          {"max_diameter", q.max_diameter}};
}

json error_json(const Error& e) { return {{"error", e.kind()}, {"message", e.what()}}; }

}  // namespace

double parse_length(const std::string& text) {
  const auto slash = text.find('/');
  double v = 0.0;
  if (slash == std::string::npos) {
    v = parse_number(text, "length");
  } else {
    const double num = parse_number(text.substr(0, slash), "length numerator");
    const double den = parse_number(text.substr(slash + 1), "length denominator");
    if (den == 0.0) throw InvalidParameter("zero denominator in length '" + text + "'");
    v = num / den;
  }
  if (!(v > 0.0) || !std::isfinite(v)) throw InvalidParameter("length must be positive, got '" + text + "'");
  return v;
}

MeshRef parse_mesh_ref(const std::string& text) {
  MeshRef ref;
  const auto parts = split(text, ':');
  bool is_family = false;
  if (parts.size() >= 2) {
    try {
      ref.family = parse_mesh_family(parts[0]);
      is_family = true;
    } catch (const InvalidParameter&) {
    }
  }
  if (!is_family) {
    ref.path = text;
    return ref;
  }
  if (parts.size() > 3) throw InvalidParameter("mesh spec '" + text + "' has too many fields (family:h[:seed=S])");
  ref.h = parse_length(parts[1]);
  if (parts.size() == 3) {
    std::string s = parts[2];
    if (s.rfind("seed=", 0) == 0) s = s.substr(5);
    const double v = parse_number(s, "mesh seed");
    if (v < 0 || v != std::floor(v)) throw InvalidParameter("mesh seed must be a non-negative integer, got '" + s + "'");
    ref.seed = static_cast<std::uint64_t>(v);
  }
  return ref;
}

PolyMesh resolve_mesh(const MeshRef& ref) {
  if (ref.path) return load_mesh(*ref.path);
  return generate_mesh(ref.family, ref.h, ref.seed);
}

std::string convergence_svg(const std::string& csv) {
  // series key -> points (h, err) for each of the four error columns
  const char* columns[] = {"err_u_H1", "err_u_Hdiv", "err_u_L2", "err_p_L2"};
  std::map<std::string, std::vector<std::pair<double, double>>> series;
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    if (f.size() < 11) continue;
    for (int c = 0; c < 4; ++c) {
      if (f[7 + c].empty() || f[7 + c] == "nan") continue;
      const double h = std::stod(f[4]);
      const double e = std::stod(f[7 + c]);
      if (!(e > 0.0)) continue;
      series[f[0] + " mu=" + f[3] + " " + columns[c]].emplace_back(h, e);
      xmin = std::min(xmin, h);
      xmax = std::max(xmax, h);
      ymin = std::min(ymin, e);
      ymax = std::max(ymax, e);
    }
  }
  const double W = 640, H = 480, L = 70, R = 240, T = 20, B = 50;
  if (series.empty()) {
    xmin = ymin = 0.1;
    xmax = ymax = 1.0;
  }
  const double lx0 = std::floor(std::log10(xmin)), lx1 = std::ceil(std::log10(xmax)) + (xmin == xmax ? 1 : 0);
  const double ly0 = std::floor(std::log10(ymin)), ly1 = std::ceil(std::log10(ymax)) + (ymin == ymax ? 1 : 0);
  auto px = [&](double x) { return L + (std::log10(x) - lx0) / (lx1 - lx0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (std::log10(y) - ly0) / (ly1 - ly0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"};
  std::ostringstream s;
  char buf[256];
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  std::snprintf(buf, sizeof buf, "<rect x=\"%g\" y=\"%g\" width=\"%g\" height=\"%g\" fill=\"none\" stroke=\"black\"/>\n", L, T,
                W - L - R, H - T - B);
  s << buf;
  for (double d = lx0; d <= lx1; d += 1.0) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"middle\">1e%g</text>\n",
                  px(std::pow(10.0, d)), H - B + 16, d);
    s << buf;
  }
  for (double d = ly0; d <= ly1; d += 1.0) {
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"11\" text-anchor=\"end\">1e%g</text>\n", L - 4,
                  py(std::pow(10.0, d)) + 4, d);
    s << buf;
  }
  std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"12\" text-anchor=\"middle\">h</text>\n",
                L + 0.5 * (W - L - R), H - 12);
  s << buf;
  int idx = 0;
  for (const auto& [name, pts] : series) {
    const char* col = colors[idx % 8];
    s << "<polyline fill=\"none\" stroke=\"" << col << "\" points=\"";
    for (const auto& [h, e] : pts) {
      std::snprintf(buf, sizeof buf, "%.2f,%.2f ", px(h), py(e));
      s << buf;
    }
    s << "\"/>\n";
    std::snprintf(buf, sizeof buf, "<text x=\"%g\" y=\"%g\" font-size=\"10\" fill=\"%s\">%s</text>\n", W - R + 8,
                  T + 12.0 + 13.0 * idx, col, name.c_str());
    s << buf;
    ++idx;
  }
  s << "</svg>\n";
  return s.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Divergence-free virtual elements for Darcy and Brinkman flow on polygonal meshes", "polyvem"};
  app.set_help_flag("--help", "Print this help message and exit");
  app.set_config("--config", "", "Read options from a key=value file; flags on the command line win");
  app.require_subcommand(1);
  app.fallthrough();
  int threads = 1;
  bool print_config = false;
  app.add_option("--threads", threads, "Worker threads for local computations")
      ->envname("POLYVEM_THREADS")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--print-config", print_config, "Print the effective configuration and exit")->configurable(false);

  // mesh
  auto* mesh_cmd = app.add_subcommand("mesh", "Generate or validate a mesh of the unit square");
  std::string m_family = "voronoi", m_h = "1/8", m_out, m_validate;
  std::uint64_t m_seed = 1;
  mesh_cmd->add_option("--family", m_family, "voronoi | triangle | square | web")->capture_default_str();
  mesh_cmd->add_option("--h", m_h, "Target mesh size, e.g. 1/16")->capture_default_str();
  mesh_cmd->add_option("--seed", m_seed, "Random seed")->capture_default_str();
  mesh_cmd->add_option("--out", m_out, "Output mesh JSON (stdout if omitted)");
  mesh_cmd->add_option("--validate", m_validate, "Validate a mesh file and print its quality report");

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "Solve a Darcy or Brinkman problem");
  std::string s_equation, s_case, s_mesh = "square:1/8", s_scheme = "div-free", s_out, s_dump;
  int s_k = 2;
  double s_mu = 1.0;
  std::uint64_t s_seed = 1;
  solve_cmd->add_option("equation", s_equation, "darcy | brinkman")->required();
  solve_cmd->add_option("--case", s_case, "Manufactured case (default test1 for darcy, test2 for brinkman)");
  solve_cmd->add_option("--mesh", s_mesh, "family:h[:seed=S] or a mesh JSON path")->capture_default_str();
  solve_cmd->add_option("--scheme", s_scheme, "div-free | reduced | non-div-free")->capture_default_str();
  solve_cmd->add_option("--k", s_k, "Polynomial degree")->capture_default_str();
  solve_cmd->add_option("--mu", s_mu, "Viscosity (brinkman)")->capture_default_str();
  solve_cmd->add_option("--seed", s_seed, "Seed of the polynomial patch cases")->capture_default_str();
  solve_cmd->add_option("--out", s_out, "Solution JSON (stdout if omitted)");
  solve_cmd->add_option("--dump-system", s_dump, "Write the saddle-point matrix in MatrixMarket format");

  // convergence
  auto* conv_cmd = app.add_subcommand("convergence", "Run a convergence study and write CSV");
  std::string c_case = "test1", c_family = "square", c_out, c_plot;
  std::vector<std::string> c_schemes{"div-free"}, c_hs{"1/4", "1/8", "1/16"}, c_mus{"1"};
  int c_k = 2;
  std::uint64_t c_seed = 1;
  bool c_timing = false;
  conv_cmd->add_option("--case", c_case, "Manufactured case")->capture_default_str();
  conv_cmd->add_option("--family", c_family, "Mesh family")->capture_default_str();
  conv_cmd->add_option("--k", c_k, "Polynomial degree")->capture_default_str();
  conv_cmd->add_option("--scheme", c_schemes, "Comma-separated schemes")->delimiter(',')->default_str("div-free");
  conv_cmd->add_option("--h", c_hs, "Comma-separated mesh sizes")->delimiter(',')->default_str("1/4,1/8,1/16");
  conv_cmd->add_option("--mu", c_mus, "Comma-separated viscosities (brinkman)")->delimiter(',')->default_str("1");
  conv_cmd->add_option("--seed", c_seed, "Mesh and case seed")->capture_default_str();
  conv_cmd->add_option("--out", c_out, "CSV output (stdout if omitted)");
  conv_cmd->add_option("--plot", c_plot, "Also write a log-log SVG of the error columns");
  conv_cmd->add_flag("--timing", c_timing, "Record wall-clock seconds (otherwise 0 for reproducible output)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (print_config) {
    out << "threads=" << threads << "\n";
    for (const auto* sub : {mesh_cmd, solve_cmd, conv_cmd})
      if (sub->parsed()) out << "[" << sub->get_name() << "]\n" << sub->config_to_str(true, false);
    return kExitOk;
  }

  try {
    if (mesh_cmd->parsed()) {
      if (!m_validate.empty()) {
        const PolyMesh mesh = load_mesh(m_validate);
        out << quality_json(mesh, validate_mesh(mesh)).dump(1) << "\n";
        return kExitOk;
      }
      const PolyMesh mesh = generate_mesh(parse_mesh_family(m_family), parse_length(m_h), m_seed);
      write_text(mesh_to_json(mesh), m_out, out);
      if (!m_out.empty()) out << quality_json(mesh, validate_mesh(mesh)).dump(1) << "\n";
      return kExitOk;
    }

    if (solve_cmd->parsed()) {
      const Equation eq = parse_equation(s_equation);
      if (s_case.empty()) s_case = eq == Equation::darcy ? "test1" : "test2";
      const ManufacturedCase mc = case_by_name(s_case, s_k, s_seed);
      if (mc.equation != eq)
        throw InvalidParameter("case '" + s_case + "' is a " + to_string(mc.equation) + " case, not " + s_equation);
      auto mesh = std::make_shared<const PolyMesh>(resolve_mesh(parse_mesh_ref(s_mesh)));
      ProblemSpec spec = make_problem(mc, parse_scheme(s_scheme), s_k, s_mu);
      spec.threads = threads;
      const DiscreteSolution sol = solve_problem(mesh, spec);
      if (!s_dump.empty()) dump_system(assemble_problem(*mesh, spec, sol.ops, sol.map), s_dump);
      json j = json::parse(solution_to_json(sol));
      const ErrorReport e = compute_errors(sol, mc);
      j["case"] = s_case;
      j["errors"] = {{"err_u_H1", e.err_u_H1},   {"err_u_Hdiv", e.err_u_Hdiv},     {"err_u_L2", e.err_u_L2},
                     {"err_p_L2", e.err_p_L2},   {"err_div", e.err_div},           {"err_div_best", e.err_div_best},
                     {"ndof_u", e.ndof_u},       {"ndof_p", e.ndof_p}};
      write_text(j.dump(1) + "\n", s_out, out);
      return kExitOk;
    }

    if (conv_cmd->parsed()) {
      ConvergenceConfig cfg;
      cfg.case_name = c_case;
      cfg.family = parse_mesh_family(c_family);
      cfg.k = c_k;
      cfg.seed = c_seed;
      cfg.threads = threads;
      cfg.schemes.clear();
      for (const auto& s : c_schemes) cfg.schemes.push_back(parse_scheme(s));
      for (const auto& h : c_hs) cfg.hs.push_back(parse_length(h));
      cfg.mus.clear();
      for (const auto& m : c_mus) cfg.mus.push_back(parse_number(m, "mu"));
      const std::string csv = convergence_csv(run_convergence(cfg), c_timing);
      write_text(csv, c_out, out);
      if (!c_plot.empty()) write_text(convergence_svg(csv), c_plot, out);
      return kExitOk;
    }
  } catch (const Error& e) {
    if (e.numerical()) {
      err << error_json(e).dump() << "\n";
      return kExitNumerical;
    }
    err << "polyvem: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace polyvem::cli
