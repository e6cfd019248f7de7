#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "polysp/divinv/extension.hpp"
#include "polysp/divinv/pou.hpp"
#include "polysp/geometry/generate.hpp"
#include "polysp/geometry/mesh_io.hpp"
#include "polysp/harness/inputs.hpp"
#include "polysp/harness/sp.hpp"
#include "polysp/traceck/trace.hpp"

using namespace polysp;
using nlohmann::json;

namespace {

constexpr int kFail = 1;
constexpr int kUsage = 2;

/// A generated mesh "kind:arg", e.g. quads:4, triangles:4, lshape:2, fan:6, agglomerated:7, split:3.
GeneratorSpec parse_generator(const std::string& text, const std::string& dirichlet) {
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  int arg = 0;
  if (colon != std::string::npos) {
    std::istringstream is(text.substr(colon + 1));
    POLYSP_REQUIRE(is >> arg && is.eof(), DomainError, "bad generator argument in '" + text + "'");
  }
  auto need = [&](int fallback) { return colon == std::string::npos ? fallback : arg; };
  DomainShape d = kind == "lshape" ? DomainShape::lshape() : DomainShape{};
  LabelRule labels = all_dirichlet();
  if (!dirichlet.empty() && dirichlet != "all") {
    std::set<std::string> sides;
    std::istringstream is(dirichlet);
    for (std::string s; std::getline(is, s, ',');) {
      POLYSP_REQUIRE(s == "left" || s == "right" || s == "bottom" || s == "top", DomainError, "unknown side '" + s + "'");
      sides.insert(s);
    }
    labels = dirichlet_on_sides(d, sides);
  }
  if (kind == "quads") return structured_quads(need(4), d, labels);
  if (kind == "triangles" || kind == "lshape") return structured_triangles(need(kind == "lshape" ? 2 : 4), d, labels);
  if (kind == "fan") return fan_polygon(need(6), labels);
  if (kind == "agglomerated") return agglomerated(static_cast<std::uint64_t>(need(7)), 4, d, labels);
  if (kind == "split") return split_facet(need(3), 1, d, labels);
  throw DomainError("unknown mesh generator '" + kind + "' (quads, triangles, lshape, fan, agglomerated, split)");
}

struct MeshSource {
  std::string path;
  std::string generate;
  std::string dirichlet = "all";

  void add(CLI::App* app) {
    app->add_option("--mesh", path, "mesh JSON file");
    app->add_option("--generate", generate, "generated mesh, kind:arg (quads:4, triangles:4, lshape:2, fan:6, agglomerated:7, split:3)");
    app->add_option("--dirichlet", dirichlet, "Dirichlet sides of a generated mesh (all or a list of left,right,bottom,top)");
  }
  void configure(const json& c) {
    if (c.contains("mesh")) path = c["mesh"].get<std::string>();
    if (c.contains("generate")) generate = c["generate"].get<std::string>();
    if (c.contains("dirichlet")) dirichlet = c["dirichlet"].get<std::string>();
  }
  std::shared_ptr<const Mesh> load() const {
    POLYSP_REQUIRE(path.empty() != generate.empty(), DomainError, "give exactly one of --mesh and --generate");
    if (!path.empty()) return std::make_shared<const Mesh>(load_mesh(path));
    return std::make_shared<const Mesh>(generate_mesh(parse_generator(generate, dirichlet)));
  }
};

/// Values of a JSON config file replace the corresponding flags.
struct Config {
  std::string path;
  json values = json::object();

  void add(CLI::App* app) { app->add_option("--config", path, "JSON file whose keys override the flags"); }
  void load() {
    if (path.empty()) return;
    std::ifstream in(path);
    POLYSP_REQUIRE(in.good(), DomainError, "cannot open config file " + path);
    try {
      in >> values;
    } catch (const json::exception& e) {
      throw DomainError("config file " + path + ": " + e.what());
    }
    POLYSP_REQUIRE(values.is_object(), DomainError, "config file must hold a JSON object");
  }
  template <class T>
  void take(const char* key, T& v) const {
    if (!values.contains(key)) return;
    try {
      v = values[key].get<T>();
    } catch (const json::exception& e) {
      throw DomainError(std::string("config key '") + key + "': " + e.what());
    }
  }
  std::optional<ConstantTable> constants() const {
    if (!values.contains("constants")) return std::nullopt;
    return ConstantTable::from_json(values["constants"]);
  }
};

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  POLYSP_REQUIRE(out.good(), DomainError, "cannot write " + path);
  out << text;
}

void emit_json(const json& j, const std::string& out) {
  if (out.empty())
    std::cout << j.dump(2) << "\n";
  else
    write_file(out, j.dump(2) + "\n");
}

PressureSpace parse_pressure(const std::string& s) {
  if (s == "p1") return PressureSpace::ContinuousP1;
  if (s == "p0") return PressureSpace::PiecewiseConstant;
  throw DomainError("unknown pressure space '" + s + "' (p1, p0)");
}

VelocityBC parse_bc(const std::string& s) {
  if (s == "full-dirichlet") return VelocityBC::FullDirichlet;
  if (s == "zero-on-neumann") return VelocityBC::ZeroOnNeumann;
  throw DomainError("unknown velocity condition '" + s + "' (full-dirichlet, zero-on-neumann)");
}

// ---- check-mesh

struct CheckMesh {
  MeshSource mesh;
  Config config;
  std::string out;

  int run() {
    config.load();
    mesh.configure(config.values);
    config.take("out", out);
    const auto m = mesh.load();
    const DomainGeometry g = domain_geometry(*m);
    std::size_t counts[3] = {0, 0, 0};
    for (const auto& F : m->facets()) ++counts[static_cast<int>(F.label)];
    json j = {{"hash", mesh_hash(*m)},
              {"elements", m->num_elements()},
              {"gamma", shape_regularity(*m)},
              {"h_Omega", g.diameter},
              {"area", g.area},
              {"convex", g.convex},
              {"facets", {{"interior", counts[0]}, {"dirichlet", counts[1]}, {"neumann", counts[2]}}}};
    json hk = json::array();
    for (const auto& e : m->elements()) hk.push_back(e.diameter);
    j["h_K"] = hk;
    std::cout << "elements " << m->num_elements() << "\n"
              << "gamma " << j["gamma"].get<double>() << "\n"
              << "h_Omega " << g.diameter << "\n"
              << "facets interior " << counts[0] << " dirichlet " << counts[1] << " neumann " << counts[2] << "\n";
    for (std::size_t k = 0; k < m->num_elements(); ++k) std::cout << "h_K " << k << " " << m->element(k).diameter << "\n";
    if (!out.empty()) write_file(out, j.dump(2) + "\n");
    return 0;
  }
};

// ---- constants

struct Constants {
  MeshSource mesh;
  Config config;
  std::string theorem = "T1.6", htilde = "facet", out;
  double p = 1.5, cg0 = 1.0;
  bool no_estimate = false;

  int run() {
    config.load();
    mesh.configure(config.values);
    config.take("theorem", theorem);
    config.take("p", p);
    config.take("htilde", htilde);
    config.take("cg0", cg0);
    config.take("no-estimate", no_estimate);
    config.take("out", out);
    const auto m = mesh.load();
    const Inequality which = parse_theorem(theorem);
    const ExponentSet e = derive_exponents(p, 2);
    InputOptions opt;
    opt.c_g0 = cg0;
    opt.estimate = !no_estimate;
    const ConstantTable inputs = complete_inputs(*m, which, e, config.constants().value_or(ConstantTable{}), opt);
    const LengthScaleMode mode = parse_length_scale(htilde);
    const auto st = mesh_statistics(*m, domain_geometry(*m).diameter, p, mode);
    ConstantTable all = assemble_theorem_constants(which, e, st, inputs);
    all.merge(inputs);
    emit_json({{"theorem", to_string(which)},
               {"p", p},
               {"exponents", {{"p_conj", e.p_conj}, {"p_star", e.p_star}, {"p_sharp", e.p_sharp}, {"one_star", e.one_star}, {"p_ostar", e.p_ostar}}},
               {"htilde", to_string(mode)},
               {"mesh", {{"hash", mesh_hash(*m)}, {"gamma", st.gamma}, {"h_Omega", st.h_omega}, {"max_h", st.max_h}}},
               {"constants", all.to_json()}},
              out);
    return 0;
  }
};

// ---- verify trace

struct VerifyTrace {
  MeshSource mesh;
  Config config;
  double q = 2.0, s = -1.0;
  std::string variant = "general", sampler = "iid", out = "trace";
  std::size_t samples = 500;
  std::uint64_t seed = 1;
  int max_degree = 4;

  int run() {
    config.load();
    mesh.configure(config.values);
    config.take("q", q);
    config.take("s", s);
    config.take("variant", variant);
    config.take("sampler", sampler);
    config.take("samples", samples);
    config.take("seed", seed);
    config.take("max-degree", max_degree);
    config.take("out", out);
    if (s < 0.0) s = q;
    POLYSP_REQUIRE(max_degree >= 0 && max_degree <= 6, DomainError, "--max-degree must lie in [0, 6]");
    TraceCampaignConfig c;
    if (variant == "general")
      c.variants = {TraceVariant::general(q, s)};
    else if (variant == "standard")
      c.variants = {TraceVariant::standard(q)};
    else if (variant == "embedding")
      c.variants = {TraceVariant::embedding(q)};
    else
      throw DomainError("unknown trace variant '" + variant + "' (general, standard, embedding)");
    c.degrees.clear();
    for (int k = 0; k <= max_degree; ++k) c.degrees.push_back(k);
    c.samples_per_degree = (samples + c.degrees.size() - 1) / c.degrees.size();
    c.seed = seed;
    c.sampler = parse_sampler(sampler);
    const auto m = mesh.load();
    const auto r = trace_campaign(m, c);
    std::ofstream csv(out + ".csv");
    POLYSP_REQUIRE(csv.good(), DomainError, "cannot write " + out + ".csv");
    write_trace_csv(csv, r.records);
    json j = {{"mesh", mesh_hash(*m)}, {"variant", c.variants.front().name()}, {"q", q}, {"s", c.variants.front().s},
              {"samples_per_degree", c.samples_per_degree}, {"seed", seed}, {"summary", to_json(r.summary)},
              {"counterexamples", r.counterexamples}};
    write_file(out + ".json", j.dump(2) + "\n");
    std::cout << "records " << r.summary.count << " max_ratio " << r.summary.max_ratio << " violations " << r.summary.violations
              << "\n";
    return r.summary.violations == 0 ? 0 : kFail;
  }
};

// ---- shared SP flags

struct SPFlags {
  std::string theorem = "T1.7", sampler = "iid", htilde = "facet";
  double p = 2.0, epsilon = 0.1, cg0 = 1.0;
  int degree = 2;
  std::size_t samples = 100;
  std::uint64_t seed = 1;
  bool random_epsilon = false, cutoff = false;
  unsigned threads = 0;

  void add(CLI::App* app) {
    app->add_option("--theorem", theorem, "T1.6, T1.7, C1.9, C1.10 or an inequality name");
    app->add_option("--p", p, "integrability index");
    app->add_option("--sampler", sampler, "iid, conforming, cr-like");
    app->add_option("--degree", degree, "polynomial degree of the samples");
    app->add_option("--samples", samples, "number of samples");
    app->add_option("--seed", seed, "base seed");
    app->add_option("--htilde", htilde, "facet or element-min");
    app->add_option("--epsilon", epsilon, "jump magnitude of the conforming sampler");
    app->add_flag("--random-epsilon", random_epsilon, "draw the jump magnitude from [0, epsilon] per sample");
    app->add_flag("--cutoff", cutoff, "conforming sampler vanishes on the Dirichlet lines");
    app->add_option("--threads", threads, "worker threads (0: all cores)");
    app->add_option("--cg0", cg0, "constant of the right-inverse bound");
  }
  void configure(const Config& c) {
    c.take("theorem", theorem);
    c.take("p", p);
    c.take("sampler", sampler);
    c.take("degree", degree);
    c.take("samples", samples);
    c.take("seed", seed);
    c.take("htilde", htilde);
    c.take("epsilon", epsilon);
    c.take("random-epsilon", random_epsilon);
    c.take("cutoff", cutoff);
    c.take("threads", threads);
    c.take("cg0", cg0);
  }
  SPConfig make(const Mesh& mesh, const std::optional<ConstantTable>& given) const {
    SPConfig c;
    c.inequality = parse_theorem(theorem);
    c.p = p;
    c.sampler = parse_sampler(sampler);
    c.degree = degree;
    c.samples = samples;
    c.seed = seed;
    c.htilde = parse_length_scale(htilde);
    c.sampler_options.epsilon = epsilon;
    c.sampler_options.random_epsilon = random_epsilon;
    c.sampler_options.dirichlet_cutoff = cutoff;
    c.threads = threads;
    if (given && c.p > 1.0) {
      InputOptions opt;
      opt.c_g0 = cg0;
      try {
        c.inputs = complete_inputs(mesh, c.inequality, derive_exponents(p, 2), *given, opt);
      } catch (const DomainError& e) {
        std::cerr << "assembled bound skipped: " << e.what() << "\n";
      }
    }
    return c;
  }
  json describe(const SPConfig& c) const {
    return {{"theorem", to_string(c.inequality)}, {"p", c.p}, {"sampler", to_string(c.sampler)},
            {"degree", c.degree}, {"samples", c.samples}, {"seed", c.seed}, {"htilde", to_string(c.htilde)},
            {"epsilon", epsilon}, {"random_epsilon", random_epsilon}, {"cutoff", cutoff}};
  }
};

bool sp_failed(const SPSummary& s) { return s.empirical.unbounded || (s.fraction_holding && *s.fraction_holding < 1.0); }

// ---- verify sp

struct VerifySP {
  MeshSource mesh;
  Config config;
  SPFlags flags;
  std::string out = "sp";

  int run() {
    config.load();
    mesh.configure(config.values);
    flags.configure(config);
    config.take("out", out);
    const auto m = mesh.load();
    const SPConfig c = flags.make(*m, config.constants());
    const auto r = verify_sp(m, c);
    std::ofstream csv(out + ".csv");
    POLYSP_REQUIRE(csv.good(), DomainError, "cannot write " + out + ".csv");
    write_sp_csv(csv, r.records);
    json j = {{"mesh", mesh_hash(*m)}, {"config", flags.describe(c)}, {"summary", to_json(r.summary)}};
    write_file(out + ".json", j.dump(2) + "\n");
    const auto& E = r.summary.empirical;
    std::cout << "samples " << r.summary.count << " worst_case " << E.worst_case << " c_grad " << E.c_grad << " c_jump "
              << E.c_jump << (E.unbounded ? " unbounded" : "") << "\n";
    if (r.summary.fraction_holding) std::cout << "fraction within the assembled bound " << *r.summary.fraction_holding << "\n";
    return sp_failed(r.summary) ? kFail : 0;
  }
};

// ---- infsup

struct InfSup {
  MeshSource mesh;
  Config config;
  std::string pressure = "p1", bc = "full-dirichlet", out;
  int refine = 0;
  double mass_scale = 1.0;

  int run() {
    config.load();
    mesh.configure(config.values);
    config.take("pressure", pressure);
    config.take("bc", bc);
    config.take("refine", refine);
    config.take("mass-scale", mass_scale);
    config.take("out", out);
    const auto m = mesh.load();
    const StokesDiscretization d(m, StokesOptions{parse_pressure(pressure), refine, mass_scale});
    const auto r = identity_check(d, parse_bc(bc));
    json j = {{"mesh", mesh_hash(*m)}, {"pressure", pressure},   {"bc", bc},         {"refine", refine},
              {"beta", r.beta},        {"c_ba", r.c_ba},         {"gap", r.gap},     {"iterations", r.iterations}};
    emit_json(j, out);
    return r.gap <= 1e-8 ? 0 : kFail;
  }
};

// ---- divinv

struct DivInv {
  MeshSource mesh;
  Config config;
  std::string method = "mirror", extension, out;
  std::uint64_t seed = 1;
  int degree = 1;

  BrokenFunction datum(const std::shared_ptr<const Mesh>& m, bool zero_mean) const {
    BrokenFunction f = sample(m, SamplerKind::IidCoefficients, degree, seed);
    if (zero_mean) {
      double integral = 0.0;
      for (std::size_t k = 0; k < m->num_elements(); ++k) integral += element_integral(f, k);
      const double mean = integral / m->area();
      for (std::size_t k = 0; k < m->num_elements(); ++k) f.set_local(k, f.local(k) + Poly2::constant(-mean));
    }
    return f;
  }

  int run() {
    config.load();
    mesh.configure(config.values);
    config.take("extension", extension);
    config.take("seed", seed);
    config.take("degree", degree);
    config.take("out", out);
    const auto m = mesh.load();
    json j = {{"method", method}, {"mesh", mesh_hash(*m)}, {"seed", seed}, {"degree", degree}};
    double residual = 0.0, trace = 0.0;
    if (method == "pou") {
      const auto r = pou_right_inverse(m, datum(m, true));
      residual = r.field.residual;
      trace = r.field.boundary_trace;
      j["patches"] = r.patches.size();
      j["refined"] = r.refined;
      j["max_patch_ratio"] = r.max_patch_ratio;
      j["seminorm"] = r.field.seminorm;
      j["ratio"] = r.field.ratio;
    } else {
      ExtensionProblem P = [&] {
        if (method == "mirror") return mirror_extension(m, datum(m, false));
        POLYSP_REQUIRE(!extension.empty(), DomainError, "nonconvex needs --extension");
        return nonconvex_extension(m, std::make_shared<const Mesh>(load_mesh(extension)), datum(m, false));
      }();
      const auto s = solve_extension(P);
      residual = s.glued.residual;
      trace = s.neumann_trace;
      j["norm_sq_original"] = P.norm_sq_original;
      j["norm_sq_tilde"] = P.norm_sq_tilde;
      j["mean_tilde"] = P.mean_tilde;
      j["measure_factor"] = P.measure_factor;
      j["seminorm"] = s.restricted_seminorm;
      j["ratio"] = s.ratio;
    }
    j["residual"] = residual;
    j["trace"] = trace;
    emit_json(j, out);
    return residual <= 1e-8 && trace <= 1e-10 ? 0 : kFail;
  }
};

// ---- refine-study

struct RefineStudy {
  Config config;
  SPFlags flags;
  std::string family, dirichlet = "all", out = "study";
  std::vector<int> levels;
  std::vector<std::string> meshes;
  double max_spread = 0.0;

  int run() {
    config.load();
    flags.configure(config);
    config.take("family", family);
    config.take("dirichlet", dirichlet);
    config.take("levels", levels);
    config.take("meshes", meshes);
    config.take("max-spread", max_spread);
    config.take("out", out);
    POLYSP_REQUIRE(family.empty() != meshes.empty(), DomainError, "give exactly one of --family and --meshes");
    std::vector<std::pair<std::string, std::shared_ptr<const Mesh>>> fam;
    for (const auto& path : meshes) fam.emplace_back(path, std::make_shared<const Mesh>(load_mesh(path)));
    for (int n : levels) {
      const std::string label = family + ":" + std::to_string(n);
      fam.emplace_back(label, std::make_shared<const Mesh>(generate_mesh(parse_generator(label, dirichlet))));
    }
    POLYSP_REQUIRE(!fam.empty(), DomainError, "refinement_study: need ≥ 3 resolutions, got 0");
    const SPConfig c = flags.make(*fam.front().second, std::nullopt);
    const auto rep = refinement_study(fam, c);
    json j = {{"config", flags.describe(c)}, {"report", to_json(rep)}};
    write_file(out + ".json", j.dump(2) + "\n");
    std::ofstream csv(out + ".csv");
    POLYSP_REQUIRE(csv.good(), DomainError, "cannot write " + out + ".csv");
    csv << "label,elements,worst_case,c_grad,c_jump\n";
    csv.precision(17);
    for (const auto& L : rep.levels) {
      csv << L.label << ',' << L.elements << ',' << L.summary.empirical.worst_case << ',' << L.summary.empirical.c_grad << ','
          << L.summary.empirical.c_jump << "\n";
      std::cout << L.label << " elements " << L.elements << " worst_case " << L.summary.empirical.worst_case << "\n";
    }
    std::cout << "spread " << rep.spread << "\n";
    bool failed = false;
    for (const auto& L : rep.levels) failed |= sp_failed(L.summary);
    if (max_spread > 0.0 && !(rep.spread <= max_spread)) failed = true;
    return failed ? kFail : 0;
  }
};

// ---- generate

struct Generate {
  MeshSource mesh;
  std::string out;

  int run() {
    POLYSP_REQUIRE(!out.empty(), DomainError, "generate needs --out");
    save_mesh(*mesh.load(), out);
    return 0;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Broken Sobolev-Poincare inequality verification"};
  app.require_subcommand(1);

  CheckMesh check;
  auto* c_check = app.add_subcommand("check-mesh", "shape regularity, diameters and facet counts of a mesh");
  check.mesh.add(c_check);
  check.config.add(c_check);
  c_check->add_option("--out", check.out, "JSON report file");

  Constants constants;
  auto* c_const = app.add_subcommand("constants", "assembled constants of an inequality as a JSON table");
  constants.mesh.add(c_const);
  constants.config.add(c_const);
  c_const->add_option("--theorem", constants.theorem, "T1.6, T1.7, C1.9, C1.10 or an inequality name");
  c_const->add_option("--p", constants.p, "integrability index");
  c_const->add_option("--htilde", constants.htilde, "facet or element-min");
  c_const->add_option("--cg0", constants.cg0, "constant of the right-inverse bound");
  c_const->add_flag("--no-estimate", constants.no_estimate, "require configured C_PS / C_Sob values");
  c_const->add_option("--out", constants.out, "output file (default: stdout)");

  auto* c_verify = app.add_subcommand("verify", "sampling verification of an inequality");
  c_verify->require_subcommand(1);
  VerifyTrace trace;
  auto* c_trace = c_verify->add_subcommand("trace", "elementwise trace inequality");
  trace.mesh.add(c_trace);
  trace.config.add(c_trace);
  c_trace->add_option("--q", trace.q, "trace exponent");
  c_trace->add_option("--s", trace.s, "volume exponent (default q)");
  c_trace->add_option("--variant", trace.variant, "general, standard or embedding");
  c_trace->add_option("--sampler", trace.sampler, "iid, conforming, cr-like");
  c_trace->add_option("--samples", trace.samples, "samples in total, split evenly over the degrees");
  c_trace->add_option("--max-degree", trace.max_degree, "samples use degrees 0..max");
  c_trace->add_option("--seed", trace.seed, "base seed");
  c_trace->add_option("--out", trace.out, "output prefix for .csv and .json");
  VerifySP sp;
  auto* c_sp = c_verify->add_subcommand("sp", "broken Sobolev-Poincare inequality");
  sp.mesh.add(c_sp);
  sp.config.add(c_sp);
  sp.flags.add(c_sp);
  c_sp->add_option("--out", sp.out, "output prefix for .csv and .json");

  InfSup infsup;
  auto* c_inf = app.add_subcommand("infsup", "discrete inf-sup constant and right-inverse identity");
  infsup.mesh.add(c_inf);
  infsup.config.add(c_inf);
  c_inf->add_option("--pressure", infsup.pressure, "p1 or p0");
  c_inf->add_option("--bc", infsup.bc, "full-dirichlet or zero-on-neumann");
  c_inf->add_option("--refine", infsup.refine, "red refinements of the velocity triangulation");
  c_inf->add_option("--mass-scale", infsup.mass_scale, "pressure mass scaling");
  c_inf->add_option("--out", infsup.out, "output file (default: stdout)");

  DivInv divinv;
  auto* c_div = app.add_subcommand("divinv", "right inverse of the divergence for a random datum");
  c_div->add_option("method", divinv.method, "mirror, nonconvex or pou")->required()->check(CLI::IsMember({"mirror", "nonconvex", "pou"}));
  divinv.mesh.add(c_div);
  divinv.config.add(c_div);
  c_div->add_option("--extension", divinv.extension, "extension mesh for nonconvex");
  c_div->add_option("--seed", divinv.seed, "seed of the datum");
  c_div->add_option("--degree", divinv.degree, "degree of the datum");
  c_div->add_option("--out", divinv.out, "output file (default: stdout)");

  RefineStudy study;
  auto* c_study = app.add_subcommand("refine-study", "empirical constants across a mesh family");
  study.config.add(c_study);
  study.flags.add(c_study);
  c_study->add_option("--family", study.family, "generator kind (quads, triangles, lshape, split, ...)");
  c_study->add_option("--levels", study.levels, "generator arguments of the family")->delimiter(',');
  c_study->add_option("--meshes", study.meshes, "mesh files instead of a family")->delimiter(',');
  c_study->add_option("--dirichlet", study.dirichlet, "Dirichlet sides of the generated meshes");
  c_study->add_option("--max-spread", study.max_spread, "fail when max/min worst case exceeds this");
  c_study->add_option("--out", study.out, "output prefix for .csv and .json");

  Generate gen;
  auto* c_gen = app.add_subcommand("generate", "write a generated mesh");
  gen.mesh.add(c_gen);
  c_gen->add_option("--out", gen.out, "mesh JSON file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kUsage;
  }

  try {
    if (c_check->parsed()) return check.run();
    if (c_const->parsed()) return constants.run();
    if (c_trace->parsed()) return trace.run();
    if (c_sp->parsed()) return sp.run();
    if (c_inf->parsed()) return infsup.run();
    if (c_div->parsed()) return divinv.run();
    if (c_study->parsed()) return study.run();
    if (c_gen->parsed()) return gen.run();
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const MeshError& e) {
    std::cerr << "mesh error: " << e.what() << "\n";
    return kUsage;
  } catch (const SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kFail;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFail;
  }
  return kUsage;
}
