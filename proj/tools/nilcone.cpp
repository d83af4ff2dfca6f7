// nilcone command-line driver. Exit codes: 0 ok, 1 structural/config error,
// 2 an asserted trend or threshold did not hold.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nilcone/nilcone.hpp"

namespace fs = std::filesystem;
using namespace nilcone;

namespace {

constexpr int kOk = 0;
constexpr int kStructural = 1;
constexpr int kAssertion = 2;

struct AssertionFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<std::string> split(const std::string& s, char sep)
{
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    out.push_back(cur);
  return out;
}

std::vector<std::int64_t> parse_ints(const std::string& s)
{
  std::vector<std::int64_t> out;
  for (const auto& t : split(s, ',')) {
    std::size_t used = 0;
    long long v = 0;
    try {
      v = std::stoll(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (t.empty() || used != t.size())
      throw ConfigError("not an integer list: " + s);
    out.push_back(v);
  }
  return out;
}

std::vector<double> parse_doubles(const std::string& s)
{
  std::vector<double> out;
  for (const auto& t : split(s, ',')) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(t, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (t.empty() || used != t.size())
      throw ConfigError("not a number list: " + s);
    out.push_back(v);
  }
  return out;
}

GroupPoint<Rational> parse_rational_point(const NilpotentGroup& G, const std::string& s, Law law)
{
  std::vector<Rational> c;
  for (const auto& t : split(s, ','))
    try {
      c.push_back(parse_rational(t));
    } catch (const std::exception&) {
      throw ConfigError("not a rational: " + t);
    }
  if (c.size() != G.dim())
    throw ConfigError("point needs " + std::to_string(G.dim()) + " coordinates: " + s);
  return G.point(std::move(c), law);
}

/// "e1", "e1*e2", "1,1,0.5" or products of these, read in G_infinity.
GroupPoint<double> parse_cone_point(const NilpotentGroup& G, const std::string& s)
{
  auto p = G.identity<double>(Law::graded);
  for (const auto& factor : split(s, '*')) {
    GroupPoint<double> f = G.identity<double>(Law::graded);
    if (!factor.empty() && factor[0] == 'e') {
      const auto i = parse_ints(factor.substr(1));
      if (i.size() != 1 || i[0] < 1 || static_cast<std::size_t>(i[0]) > G.dim())
        throw ConfigError("bad basis element: " + factor);
      f.coords[static_cast<std::size_t>(i[0] - 1)] = 1.0;
    } else {
      auto c = parse_doubles(factor);
      if (c.size() != G.dim())
        throw ConfigError("point needs " + std::to_string(G.dim()) + " coordinates: " + factor);
      f.coords = std::move(c);
    }
    p = p * f;
  }
  return p;
}

Digits parse_digits(const Lattice& L, const std::string& s)
{
  auto d = parse_ints(s);
  if (d.size() != L.dim())
    throw ConfigError("lattice point needs " + std::to_string(L.dim()) + " digits: " + s);
  return d;
}

std::string point_text(const GroupPoint<Rational>& p)
{
  std::string out;
  for (std::size_t i = 0; i < p.coords.size(); ++i)
    out += (i ? "," : "") + to_string(p.coords[i]);
  return out;
}

std::string point_text(const std::vector<double>& v)
{
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i)
    out += (i ? "," : "") + report::num(v[i]);
  return out;
}

std::string default_out_dir()
{
  if (const char* env = std::getenv("NILCONE_OUTPUT_DIR"); env && *env)
    return env;
  return "nilcone-out";
}

struct Artifacts {
  fs::path dir;

  void write(const std::string& name, const std::string& content) const
  {
    fs::create_directories(dir);
    std::ofstream f(dir / name, std::ios::binary);
    if (!f)
      throw ConfigError("cannot write " + (dir / name).string());
    f << content;
    std::cout << "wrote " << (dir / name).string() << "\n";
  }
};

const NilpotentGroup& group_by_name(const std::string& name)
{
  for (const auto& n : catalog::algebra_names())
    if (n == name)
      return catalog::group(n);
  throw ConfigError("unknown group: " + name);
}

/// Every experiment parameter, resolvable from flags or a JSON file.
struct RunConfig {
  std::string coupling = "heisenberg-identity";
  std::optional<CouplingConfig> coupling_inline;
  std::string experiment;
  std::string cocycle = "alpha";
  std::string g = "e1";
  std::optional<std::string> target;
  std::string gamma = "1,1,0";
  std::string word = "0:n,2:n";
  std::vector<std::int64_t> n{8, 16, 32, 64};
  std::size_t samples = 4096;
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  double radius = 2.0;
  double grid_step = 1.0;
  std::size_t image_samples = kDefaultImageSamples;
  std::int64_t depth = kDefaultAveragingDepth;
  std::size_t x_samples = 200;
  double delta = 0.3;
  std::string box_lo = "0,0,0";
  std::string box_hi = "0.5,0.5,0.5";
  std::int64_t horizon = 256;
  double threshold = 0.9;
  std::string out = default_out_dir();
  std::size_t workers = default_workers();

  const Coupling& resolve_coupling() const
  {
    return coupling_inline ? nilcone::coupling(*coupling_inline) : builtin_coupling(coupling);
  }
  std::string coupling_label() const { return coupling_inline ? coupling_name(*coupling_inline) : coupling; }
  double eps_or(double dflt) const { return eps.value_or(dflt); }

  json to_json() const
  {
    json j{{"coupling", coupling_inline ? coupling_to_json(*coupling_inline) : json(coupling)},
           {"experiment", experiment},
           {"cocycle", cocycle},
           {"g", g},
           {"target", target ? json(*target) : json(nullptr)},
           {"gamma", gamma},
           {"word", word},
           {"n", n},
           {"samples", samples},
           {"seed", seed ? json(*seed) : json(nullptr)},
           {"eps", eps ? json(*eps) : json(nullptr)},
           {"radius", radius},
           {"grid_step", grid_step},
           {"image_samples", image_samples},
           {"depth", depth},
           {"x_samples", x_samples},
           {"delta", delta},
           {"box_lo", box_lo},
           {"box_hi", box_hi},
           {"horizon", horizon},
           {"threshold", threshold},
           {"out", out},
           {"workers", workers}};
    return j;
  }

  void merge_json(const json& j)
  {
    try {
      if (j.contains("coupling")) {
        if (j["coupling"].is_object())
          coupling_inline = coupling_from_json(j["coupling"]);
        else
          coupling = j["coupling"].get<std::string>();
      }
      auto get = [&](const char* key, auto& field) {
        if (j.contains(key) && !j[key].is_null())
          field = j[key].get<std::decay_t<decltype(field)>>();
      };
      get("experiment", experiment);
      get("cocycle", cocycle);
      get("g", g);
      get("gamma", gamma);
      get("word", word);
      get("n", n);
      get("samples", samples);
      get("radius", radius);
      get("grid_step", grid_step);
      get("image_samples", image_samples);
      get("depth", depth);
      get("x_samples", x_samples);
      get("delta", delta);
      get("box_lo", box_lo);
      get("box_hi", box_hi);
      get("horizon", horizon);
      get("threshold", threshold);
      get("out", out);
      get("workers", workers);
      if (j.contains("target") && !j["target"].is_null())
        target = j["target"].get<std::string>();
      if (j.contains("seed") && !j["seed"].is_null())
        seed = j["seed"].get<std::uint64_t>();
      if (j.contains("eps") && !j["eps"].is_null())
        eps = j["eps"].get<double>();
    } catch (const json::exception& e) {
      throw ConfigError(std::string("invalid run config: ") + e.what());
    }
  }

  void validate() const
  {
    if (!seed)
      throw ConfigError("a seed is required (--seed); no implicit entropy is used");
    check_n_list(n);
    if (samples < 1 || image_samples < 1 || x_samples < 1)
      throw ConfigError("sample counts must be >= 1");
    if (workers < 1)
      throw ConfigError("workers must be >= 1");
  }
};

void add_run_options(CLI::App* sub, RunConfig& cfg, std::string& n_text, std::string& coupling_json)
{
  sub->add_option("--coupling", cfg.coupling, "built-in coupling name");
  sub->add_option("--coupling-json", coupling_json, "coupling spec as inline JSON or a file path");
  sub->add_option("--cocycle", cfg.cocycle, "alpha (Phi) or beta (Psi)");
  sub->add_option("--g", cfg.g, "point of the cone: e1, e1*e2 or coordinates");
  sub->add_option("--target", cfg.target, "override the expected limit (control runs)");
  sub->add_option("--gamma", cfg.gamma, "lattice element as Mal'cev digits");
  sub->add_option("--word", cfg.word, "letters generator:schedule, schedule in n | <c>n | sqrtn");
  sub->add_option("--n", n_text, "ascending list of scales");
  sub->add_option("--samples", cfg.samples);
  sub->add_option("--seed", cfg.seed, "master seed (required)");
  sub->add_option("--eps", cfg.eps);
  sub->add_option("--radius", cfg.radius);
  sub->add_option("--grid-step", cfg.grid_step);
  sub->add_option("--image-samples", cfg.image_samples);
  sub->add_option("--depth", cfg.depth, "averaging depth for generator images");
  sub->add_option("--x-samples", cfg.x_samples);
  sub->add_option("--delta", cfg.delta);
  sub->add_option("--box-lo", cfg.box_lo);
  sub->add_option("--box-hi", cfg.box_hi);
  sub->add_option("--horizon", cfg.horizon);
  sub->add_option("--threshold", cfg.threshold);
}

void finish_run_config(RunConfig& cfg, const std::string& n_text, const std::string& coupling_json)
{
  if (!n_text.empty())
    cfg.n = parse_ints(n_text);
  if (!coupling_json.empty()) {
    std::string text = coupling_json;
    if (fs::exists(coupling_json)) {
      std::ifstream f(coupling_json);
      text.assign(std::istreambuf_iterator<char>(f), {});
    }
    try {
      cfg.coupling_inline = coupling_from_json(json::parse(text));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("invalid coupling JSON: ") + e.what());
    }
  }
}

PansuDerivative derivative_for(const RunConfig& cfg, const CocycleView& view)
{
  return build_derivative(view, cfg.image_samples, *cfg.seed, cfg.depth, cfg.workers);
}

CocycleView view_for(const RunConfig& cfg)
{
  if (cfg.cocycle != "alpha" && cfg.cocycle != "beta")
    throw ConfigError("cocycle must be alpha or beta");
  return CocycleView(cfg.resolve_coupling(), cfg.cocycle == "alpha" ? CocycleKind::alpha : CocycleKind::beta);
}

void emit_convergence(const RunConfig& cfg, const ConvergenceReport& rep, const std::string& stem)
{
  Artifacts art{cfg.out};
  std::ostringstream csv;
  report::write_convergence_csv(csv, rep);
  std::cout << csv.str();
  art.write(stem + ".csv", csv.str());
  json summary = convergence_summary(rep);
  summary["config"] = cfg.to_json();
  summary["config"].erase("out");
  summary["config"].erase("workers");
  art.write(stem + ".json", summary.dump(2) + "\n");
  art.write(stem + ".svg", report::convergence_svg(rep, stem));
}

int run_main_theorem(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto phi = derivative_for(cfg, view);
  const auto& G = view.source().group();
  const auto g = parse_cone_point(G, cfg.g);
  MainTheoremOptions opt;
  opt.eps = cfg.eps_or(0.2);
  opt.samples = cfg.samples;
  opt.seed = *cfg.seed;
  opt.workers = cfg.workers;
  if (cfg.target)
    opt.target = parse_cone_point(view.target().group(), *cfg.target);
  auto rep = main_theorem_experiment(view, phi, g, cfg.n, opt);
  rep.threshold = cfg.threshold;
  emit_convergence(cfg, rep, "main-theorem_" + cfg.coupling_label());
  std::cout << "Phi(g) = " << point_text(phi.apply(g).coords) << "\n";
  if (!rep.passes())
    throw AssertionFailure("acceptance fraction " + report::num(rep.final_fraction()) + " below threshold " +
                           report::num(rep.threshold) + (rep.trend_ok() ? "" : " or trend not monotone"));
  return kOk;
}

int run_iterates(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto gamma = parse_digits(view.source(), cfg.gamma);
  auto rep = iterate_diagnostics(view, gamma, cfg.n, cfg.samples, *cfg.seed, cfg.image_samples, cfg.workers);
  std::ostringstream csv;
  report::write_iterate_csv(csv, rep, *cfg.seed);
  std::cout << csv.str() << "abar = " << point_text(rep.abar.mean) << "\n";
  Artifacts{cfg.out}.write("iterates_" + cfg.coupling_label() + ".csv", csv.str());
  if (view.target().group().step() > 1 && !rep.com_strictly_decreasing())
    throw AssertionFailure("commutator medians not strictly decreasing");
  if (!rep.proxy_decreasing())
    throw AssertionFailure("proxy medians not decreasing");
  return kOk;
}

std::vector<WordLetter> parse_word(const Lattice& L, const std::string& text)
{
  std::vector<WordLetter> word;
  for (const auto& item : split(text, ',')) {
    auto parts = split(item, ':');
    if (parts.size() != 2)
      throw ConfigError("word letter must be generator:schedule, got " + item);
    auto idx = parse_ints(parts[0]);
    if (idx.size() != 1 || idx[0] < 0 || static_cast<std::size_t>(idx[0]) >= L.num_generators())
      throw ConfigError("generator index out of range in " + item);
    try {
      word.push_back({static_cast<std::size_t>(idx[0]), parse_schedule(parts[1])});
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  return word;
}

int run_arbitrary_word(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto word = parse_word(view.source(), cfg.word);
  const auto table = generator_images(view, cfg.image_samples, *cfg.seed, cfg.depth, cfg.workers);
  auto rep = arbitrary_element_experiment(view, table, word, cfg.n, cfg.samples, *cfg.seed, cfg.workers);
  std::ostringstream csv;
  report::write_arbitrary_csv(csv, rep, *cfg.seed);
  std::cout << csv.str();
  Artifacts{cfg.out}.write("arbitrary-word_" + cfg.coupling_label() + ".csv", csv.str());
  if (!rep.decreasing())
    throw AssertionFailure("normalized medians not decreasing");
  return kOk;
}

int run_kappa(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto phi = derivative_for(cfg, view);
  auto kg = kappa_grid(view, phi, cfg.x_samples, cfg.n, cfg.radius, cfg.grid_step, cfg.eps_or(0.3), *cfg.seed,
                       cfg.workers);
  auto rep = kg.report();
  rep.threshold = cfg.threshold;
  std::cout << "grid points: " << kg.grid.size() << "\n";
  emit_convergence(cfg, rep, "kappa_" + cfg.coupling_label());
  if (!rep.passes())
    throw AssertionFailure("kappa-grid fraction " + report::num(rep.final_fraction()) + " below threshold");
  return kOk;
}

int run_recurrence(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto g = parse_cone_point(view.source().group(), cfg.g);
  Box A{parse_doubles(cfg.box_lo), parse_doubles(cfg.box_hi)};
  RecurrenceReport rep;
  try {
    rep = recurrence_search(view, g, cfg.delta, A, cfg.horizon, cfg.samples, *cfg.seed, cfg.workers);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  std::ostringstream csv;
  csv << "horizon,samples,success_fraction,seed\n";
  for (std::int64_t h = 1; h <= cfg.horizon; h *= 2)
    csv << h << ',' << cfg.samples << ',' << report::num(rep.fraction(h)) << ',' << *cfg.seed << '\n';
  if ((cfg.horizon & (cfg.horizon - 1)) != 0)
    csv << cfg.horizon << ',' << cfg.samples << ',' << report::num(rep.fraction()) << ',' << *cfg.seed << '\n';
  std::cout << csv.str();
  Artifacts{cfg.out}.write("recurrence_" + cfg.coupling_label() + ".csv", csv.str());
  if (rep.fraction() < cfg.threshold)
    throw AssertionFailure("recurrence success fraction " + report::num(rep.fraction()) + " below threshold");
  return kOk;
}

int run_estimate(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto phi = derivative_for(cfg, view);
  std::ostringstream csv;
  report::write_image_csv(csv, phi.table());
  std::cout << csv.str();
  const auto M = phi.abelian_matrix();
  std::cout << "abelian matrix (column i = image of e_i):\n";
  for (const auto& row : M)
    std::cout << "  " << point_text(row) << "\n";
  Artifacts{cfg.out}.write("images_" + cfg.coupling_label() + "_" + cfg.cocycle + ".csv", csv.str());
  for (std::size_t s = 0; s < phi.table().generators.size(); ++s) {
    const auto inv = view.source().inverse_digits(phi.table().generators[s]);
    for (std::size_t t = 0; t < phi.table().generators.size(); ++t)
      if (phi.table().generators[t] == inv) {
        const auto& a = phi.table().images[s];
        const auto& b = phi.table().images[t];
        for (std::size_t k = 0; k < a.mean.size(); ++k)
          if (std::fabs(a.mean[k] + b.mean[k]) > 2 * (a.half_width[k] + b.half_width[k]) + 1e-12)
            throw AssertionFailure("generator images are not antisymmetric under inversion");
      }
  }
  return kOk;
}

int run_phi(const RunConfig& cfg)
{
  const auto view = view_for(cfg);
  const auto phi = derivative_for(cfg, view);
  const auto g = parse_cone_point(view.source().group(), cfg.g);
  const auto a = phi.apply(g, FactorOrder::forward);
  const auto b = phi.apply(g, FactorOrder::reverse);
  const double d = proxy_distance(a, b);
  std::cout << "g = " << point_text(with_law(g, Law::graded).coords) << "\n"
            << "Phi(g) forward = " << point_text(a.coords) << "\n"
            << "Phi(g) reverse = " << point_text(b.coords) << "\n"
            << "order defect = " << report::num(d) << "\n";
  if (d > cfg.eps_or(0.05))
    throw AssertionFailure("factorization orders disagree by " + report::num(d));
  return kOk;
}

int execute(const RunConfig& cfg)
{
  cfg.validate();
  if (cfg.experiment == "main-theorem")
    return run_main_theorem(cfg);
  if (cfg.experiment == "iterates")
    return run_iterates(cfg);
  if (cfg.experiment == "arbitrary-word")
    return run_arbitrary_word(cfg);
  if (cfg.experiment == "kappa")
    return run_kappa(cfg);
  if (cfg.experiment == "recurrence")
    return run_recurrence(cfg);
  if (cfg.experiment == "estimate")
    return run_estimate(cfg);
  if (cfg.experiment == "phi")
    return run_phi(cfg);
  throw ConfigError("unknown experiment: " + cfg.experiment);
}

int print_plan(const json& plan)
{
  std::cout << plan.dump(2) << "\n";
  return kOk;
}

// ---- algebra / group / metric / coupling --------------------------------

int cmd_algebra_check(const std::string& name, const std::string& json_path, bool dry)
{
  if (dry)
    return print_plan({{"command", "algebra check"}, {"name", name}, {"json", json_path}});
  NilpotentAlgebraSpec spec;
  if (!json_path.empty()) {
    std::ifstream f(json_path);
    if (!f)
      throw ConfigError("cannot read " + json_path);
    try {
      spec = algebra_from_json(json::parse(f));
    } catch (const json::parse_error& e) {
      throw ConfigError(std::string("invalid algebra JSON: ") + e.what());
    }
  } else {
    try {
      spec = catalog::algebra_spec(name);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  }
  const auto rep = validate_algebra(spec);
  json out{{"name", spec.name}, {"dim", spec.dim}, {"valid", rep.valid()}, {"summary", rep.summary()}};
  if (rep.valid()) {
    const auto gr = gradation(spec);
    out["step"] = gr.step;
    out["degrees"] = gr.degrees;
    out["abelian_dim"] = gr.abelian_dim;
    out["graded_brackets"] = algebra_to_json({spec.name + "_graded", spec.dim, gr.graded_constants})["brackets"];
  }
  std::cout << out.dump(2) << "\n";
  if (!rep.valid())
    throw AlgebraError(rep.summary());
  return kOk;
}

int cmd_group(const std::string& op, const std::string& gname, const std::string& a, const std::string& b,
              std::int64_t n, const std::string& law_text, bool dry)
{
  if (dry)
    return print_plan({{"command", "group " + op}, {"group", gname}, {"a", a}, {"b", b}, {"n", n}, {"law", law_text}});
  if (law_text != "original" && law_text != "graded")
    throw ConfigError("law must be original or graded");
  const Law law = law_text == "original" ? Law::original : Law::graded;
  const auto& G = group_by_name(gname);
  const auto pa = parse_rational_point(G, a, law);
  GroupPoint<Rational> r;
  if (op == "mul")
    r = pa * parse_rational_point(G, b, law);
  else if (op == "comm")
    r = commutator(pa, parse_rational_point(G, b, law));
  else
    r = power(pa, n);
  std::cout << point_text(r) << "\n";
  return kOk;
}

int cmd_metric_ball(const std::string& gname, int radius, std::size_t cap, const std::string& out, bool dry)
{
  if (dry)
    return print_plan({{"command", "metric ball"}, {"lattice", gname}, {"radius", radius}, {"cap", cap}, {"out", out}});
  group_by_name(gname);
  const auto& L = catalog::lattice(gname);
  CayleyBall ball(L, radius, cap);
  const auto rows = ball_profile(ball);
  std::ostringstream csv;
  report::write_ball_csv(csv, rows);
  std::cout << csv.str();
  Artifacts{out}.write("ball_" + gname + "_r" + std::to_string(radius) + ".csv", csv.str());
  if (radius >= 4) {
    std::vector<double> x, y;
    for (const auto& r : rows)
      if (r.n >= radius / 2) {
        x.push_back(r.n);
        y.push_back(static_cast<double>(r.ball_size));
      }
    std::cout << "growth exponent on [" << radius / 2 << "," << radius << "]: " << report::num(stats::loglog_slope(x, y))
              << "\n";
  }
  return kOk;
}

int cmd_metric_guivarch(const std::string& gname, int radius, std::size_t cap, const std::string& out, bool dry)
{
  if (dry)
    return print_plan(
        {{"command", "metric guivarch"}, {"lattice", gname}, {"radii", {radius, 2 * radius}}, {"cap", cap}, {"out", out}});
  group_by_name(gname);
  const auto& L = catalog::lattice(gname);
  CayleyBall ball(L, 4 * radius, cap);
  const auto a = guivarch_constants(ball, radius);
  const auto b = guivarch_constants(ball, 2 * radius);
  std::ostringstream csv;
  csv << "radius,c_low,c_high,com_ratio,com_missing\n";
  for (const auto& c : {a, b})
    csv << c.radius << ',' << report::num(c.c_low) << ',' << report::num(c.c_high) << ',' << report::num(c.com_ratio)
        << ',' << c.com_missing << '\n';
  std::cout << csv.str();
  Artifacts{out}.write("guivarch_" + gname + ".csv", csv.str());
  auto stable = [](double x, double y) { return std::fabs(x - y) <= 0.25 * std::max(x, y); };
  if (!stable(a.c_low, b.c_low) || !stable(a.c_high, b.c_high) || !stable(a.com_ratio, b.com_ratio))
    throw AssertionFailure("constants changed by more than 25% between radius " + std::to_string(radius) + " and " +
                           std::to_string(2 * radius));
  return kOk;
}

int cmd_coupling_verify(const RunConfig& cfg, bool dry)
{
  if (dry)
    return print_plan({{"command", "coupling verify"},
                       {"coupling", cfg.coupling_inline ? coupling_to_json(*cfg.coupling_inline) : json(cfg.coupling)},
                       {"samples", cfg.samples},
                       {"seed", cfg.seed ? json(*cfg.seed) : json(nullptr)}});
  cfg.validate();
  const auto& c = cfg.resolve_coupling();
  const auto& S = c.gamma_lattice().spec().generators;
  const std::uint64_t seed = *cfg.seed;
  const auto words = short_words(c.gamma_lattice(), 2);

  // cocycle identity and beta(alpha(gamma, x), x) = gamma
  struct Trial {
    bool cocycle = true, qualifies = false, inverse = true;
  };
  auto trials = parallel_map<Trial>(cfg.samples, cfg.workers, [&](std::size_t i) {
    SampleRng rng(seed, i);
    auto x = c.sample_domain(rng);
    const auto& g1 = words[rng() % words.size()];
    const auto& g2 = words[rng() % words.size()];
    Trial t;
    auto a2 = c.alpha(g2, x);
    auto a1 = c.alpha(g1, a2.next);
    t.cocycle = c.alpha(c.gamma_mul(g1, g2), x).value == c.lambda_mul(a1.value, a2.value);
    t.qualifies = c.in_y(x) && c.in_y(a2.next);
    if (t.qualifies)
      t.inverse = c.beta(a2.value, x).value == g2;
    return t;
  });
  std::size_t cocycle_fail = 0, qualifying = 0, inverse_fail = 0;
  for (const auto& t : trials) {
    cocycle_fail += !t.cocycle;
    qualifying += t.qualifies;
    inverse_fail += t.qualifies && !t.inverse;
  }

  // commuting actions, exact
  std::size_t commute_fail = 0;
  SampleRng crng(seed, cfg.samples);
  for (std::size_t s = 0; s < S.size(); ++s)
    for (std::size_t t = 0; t < S.size(); ++t) {
      auto w = c.group().identity<Rational>();
      for (auto& v : w.coords)
        v = Rational(static_cast<long>(crng() % 2001) - 1000, 97);
      if (c.act_gamma(S[s], c.act_lambda(S[t], w)) != c.act_lambda(S[t], c.act_gamma(S[s], w)))
        ++commute_fail;
    }

  // pushforward of the uniform measure under the first generator
  auto pushed = parallel_map<std::vector<double>>(cfg.samples, cfg.workers, [&](std::size_t i) {
    SampleRng rng(seed ^ 0x5bd1e995ULL, i);
    return c.induced_action(S.front(), c.sample_domain(rng)).coords;
  });
  double ks = 0;
  for (std::size_t k = 0; k < c.dim(); ++k) {
    std::vector<double> col;
    for (const auto& p : pushed)
      col.push_back(p[k]);
    ks = std::max(ks, stats::ks_uniform(col, 0.0, c.x_box()[k]));
  }

  const WordNormOracle norm(c.lambda_lattice());
  std::vector<IntegrabilityReport> integ;
  for (std::size_t s = 0; s < S.size(); ++s)
    integ.push_back(integrability_estimate(c, s, cfg.samples, seed, norm, cfg.workers));
  std::ostringstream csv;
  report::write_integrability_csv(csv, integ);
  std::cout << csv.str();
  json summary{{"coupling", c.name()},
               {"samples", cfg.samples},
               {"seed", seed},
               {"cocycle_identity_failures", cocycle_fail},
               {"commutation_failures", commute_fail},
               {"qualifying_fraction", report::num(static_cast<double>(qualifying) / static_cast<double>(cfg.samples))},
               {"inverse_relation_failures", inverse_fail},
               {"pushforward_ks", report::num(ks)}};
  std::cout << summary.dump(2) << "\n";
  Artifacts art{cfg.out};
  art.write("coupling_" + c.name() + ".csv", csv.str());
  art.write("coupling_" + c.name() + ".json", summary.dump(2) + "\n");
  if (cocycle_fail || commute_fail || inverse_fail)
    throw AssertionFailure("exact coupling identities failed");
  if (ks >= 0.02)
    throw AssertionFailure("pushforward KS statistic " + report::num(ks) + " >= 0.02");
  return kOk;
}

} // namespace

int main(int argc, char** argv)
{
  CLI::App app{"nilcone: nilpotent groups, Carnot cones and Pansu derivatives of cocycles"};
  app.require_subcommand(1);
  bool dry = false;
  std::string out_dir = default_out_dir();
  std::size_t workers = default_workers();
  app.add_flag("--dry-run", dry, "print the resolved plan and exit");
  app.add_option("--out", out_dir, "artifact directory (default $NILCONE_OUTPUT_DIR or nilcone-out)");
  app.add_option("--workers", workers, "worker threads");

  // algebra
  auto* algebra = app.add_subcommand("algebra", "Lie algebra checks");
  algebra->require_subcommand(1);
  std::string alg_name = "heisenberg3", alg_json;
  auto* alg_check = algebra->add_subcommand("check", "validate, compute the series and the graded algebra");
  alg_check->add_option("--name", alg_name);
  alg_check->add_option("--json", alg_json, "algebra JSON file");
  alg_check->add_flag("--dry-run", dry);

  // group
  auto* group = app.add_subcommand("group", "exact group arithmetic in log coordinates");
  group->require_subcommand(1);
  std::string gname = "heisenberg3", ga, gb, glaw = "original";
  std::int64_t gn = 2;
  for (const char* op : {"mul", "pow", "comm"}) {
    auto* s = group->add_subcommand(op);
    s->add_option("--group", gname);
    s->add_option("--a", ga)->required();
    if (std::string(op) != "pow")
      s->add_option("--b", gb)->required();
    else
      s->add_option("--n", gn);
    s->add_option("--law", glaw, "original or graded");
    s->add_flag("--dry-run", dry);
  }

  // metric
  auto* metric = app.add_subcommand("metric", "word metric of the built-in lattices");
  metric->require_subcommand(1);
  std::string mgroup = "heisenberg3";
  int mradius = 20;
  std::size_t mcap = kDefaultStateCap;
  auto* mball = metric->add_subcommand("ball", "ball profile by BFS");
  auto* mgui = metric->add_subcommand("guivarch", "Guivarc'h sandwich constants at R and 2R");
  for (auto* s : {mball, mgui}) {
    s->add_option("--group", mgroup);
    s->add_option("--radius", mradius);
    s->add_option("--cap", mcap, "BFS state cap");
    s->add_flag("--dry-run", dry);
  }

  RunConfig cfg;
  std::string n_text, coupling_json, config_path;

  auto* coupling = app.add_subcommand("coupling", "measure couplings");
  coupling->require_subcommand(1);
  auto* cverify = coupling->add_subcommand("verify", "exact identities, pushforward and integrability");
  add_run_options(cverify, cfg, n_text, coupling_json);
  cverify->add_flag("--dry-run", dry);

  auto* derivative = app.add_subcommand("derivative", "Pansu derivative of a cocycle");
  derivative->require_subcommand(1);
  std::vector<std::pair<CLI::App*, std::string>> runners;
  for (auto [name, exp] : {std::pair{"estimate", "estimate"}, {"phi", "phi"}, {"kappa", "kappa"},
                           {"recurrence", "recurrence"}}) {
    auto* s = derivative->add_subcommand(name);
    add_run_options(s, cfg, n_text, coupling_json);
    s->add_flag("--dry-run", dry);
    runners.emplace_back(s, exp);
  }
  auto* experiment = app.add_subcommand("experiment", "convergence experiments");
  experiment->require_subcommand(1);
  for (auto name : {"main-theorem", "iterates", "arbitrary-word"}) {
    auto* s = experiment->add_subcommand(name);
    add_run_options(s, cfg, n_text, coupling_json);
    s->add_flag("--dry-run", dry);
    runners.emplace_back(s, name);
  }
  auto* run = app.add_subcommand("run", "run an experiment from flags or a JSON config");
  add_run_options(run, cfg, n_text, coupling_json);
  run->add_option("--experiment", cfg.experiment);
  run->add_option("--config", config_path, "RunConfig JSON file");
  run->add_flag("--dry-run", dry);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kStructural;
  }

  try {
    cfg.out = out_dir;
    cfg.workers = workers;
    if (alg_check->parsed())
      return cmd_algebra_check(alg_name, alg_json, dry);
    for (auto* s : group->get_subcommands())
      if (s->parsed())
        return cmd_group(s->get_name(), gname, ga, gb, gn, glaw, dry);
    if (mball->parsed())
      return cmd_metric_ball(mgroup, mradius, mcap, out_dir, dry);
    if (mgui->parsed())
      return cmd_metric_guivarch(mgroup, mradius, mcap, out_dir, dry);
    if (cverify->parsed()) {
      if (cfg.samples == 4096 && cverify->count("--samples") == 0)
        cfg.samples = 10000;
      finish_run_config(cfg, n_text, coupling_json);
      return cmd_coupling_verify(cfg, dry);
    }
    if (run->parsed()) {
      if (!config_path.empty()) {
        std::ifstream f(config_path);
        if (!f)
          throw ConfigError("cannot read " + config_path);
        RunConfig from_file;
        from_file.out = out_dir;
        from_file.workers = workers;
        try {
          from_file.merge_json(json::parse(f));
        } catch (const json::parse_error& e) {
          throw ConfigError(std::string("invalid run config: ") + e.what());
        }
        // explicit flags win over the file
        for (const auto* opt : run->get_options())
          if (opt->count() > 0 && opt->get_name() != "--config")
            from_file.merge_json(json{{opt->get_name().substr(2), nullptr}}), (void)0;
        std::string tmp_n = n_text, tmp_c = coupling_json;
        cfg = [&] {
          RunConfig merged = from_file;
          if (run->count("--seed"))
            merged.seed = cfg.seed;
          if (run->count("--experiment"))
            merged.experiment = cfg.experiment;
          if (run->count("--samples"))
            merged.samples = cfg.samples;
          if (run->count("--coupling"))
            merged.coupling = cfg.coupling;
          if (run->count("--g"))
            merged.g = cfg.g;
          if (run->count("--target"))
            merged.target = cfg.target;
          if (run->count("--eps"))
            merged.eps = cfg.eps;
          return merged;
        }();
        finish_run_config(cfg, tmp_n, tmp_c);
      } else {
        finish_run_config(cfg, n_text, coupling_json);
      }
      if (dry)
        return print_plan(cfg.to_json());
      return execute(cfg);
    }
    for (auto& [sub, exp] : runners)
      if (sub->parsed()) {
        cfg.experiment = exp;
        finish_run_config(cfg, n_text, coupling_json);
        if (dry)
          return print_plan(cfg.to_json());
        return execute(cfg);
      }
  } catch (const AssertionFailure& e) {
    std::cerr << "assertion failed: " << e.what() << "\n";
    return kAssertion;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStructural;
  }
  return kStructural;
}
