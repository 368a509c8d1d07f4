// airyfem command-line driver: verify, dims, solve, convergence.

#include "airyfem/c1_element.hpp"
#include "airyfem/global_space.hpp"
#include "airyfem/random.hpp"
#include "airyfem/solver.hpp"
#include "airyfem/stress_element.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace airyfem;
using json = nlohmann::json;

namespace {

const std::vector<std::string> kAllChecks{"psi", "potential", "unisolvence", "exactness", "commuting", "c1"};

Mesh read_mesh(const std::string& path)
{
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mesh file '" + path + "'");
  return load_mesh(in);
}

json base_report(const std::string& check, const std::string& mesh, int k)
{
  return {{"check", check}, {"mesh", mesh}, {"k", k}, {"status", "pass"}};
}

void fail(json& r, json witness)
{
  if (r["status"] == "pass") {
    r["status"] = "fail";
    r["witness"] = std::move(witness);
  }
}

json check_psi(const DiscreteComplex& c, json r)
{
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const MacroTriangle& m = c.element(t).macro;
    for (int i = 0; i < 3; ++i) {
      const PiecewiseSymTensor psi = build_psi(m, c.k(), i);
      if (!divergence(psi, m).is_zero()) fail(r, {{"triangle", t}, {"i", i}, {"property", "div psi = 0"}});
      if (!has_continuous_normal_trace(psi, m))
        fail(r, {{"triangle", t}, {"i", i}, {"property", "normal trace continuity"}});
    }
  }
  return r;
}

json check_potential(const DiscreteComplex& c, json r)
{
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const MacroTriangle& m = c.element(t).macro;
    for (int i = 0; i < 3; ++i) {
      const PiecewiseScalar v = build_v(m, c.k(), i);
      if (!is_c1(v, m)) fail(r, {{"triangle", t}, {"i", i}, {"property", "v_i is C1"}});
      if (!(airy(v, m) == build_psi(m, c.k(), i))) fail(r, {{"triangle", t}, {"i", i}, {"property", "J(v_i) = psi_i"}});
    }
  }
  return r;
}

json check_unisolvence(const DiscreteComplex& c, json r)
{
  const int k = c.k();
  r["dims"] = {{"U_local", c1_dimension(k)}};
  if (k >= 1) r["dims"]["Sigma_local"] = stress_dimension(k);
  for (std::size_t t = 0; t < c.num_elements(); ++t) {
    const MacroTriangle& m = c.element(t).macro;
    const auto u = verify_unisolvence_c1(m, k);
    if (!u.invertible || !u.block_pattern_ok || !u.diagonal_blocks_invertible)
      fail(r, {{"triangle", t}, {"element", "U"}, {"rank", rank(u.matrix)}, {"detail", u.failure}});
    if (k >= 1) {
      const auto s = verify_unisolvence_stress(m, k);
      if (!s.invertible) {
        json kernel = json::array();
        for (const auto& q : s.kernel) kernel.push_back(q.get_str());
        fail(r, {{"triangle", t}, {"element", "Sigma"}, {"rank", rank(s.matrix)}, {"size", s.matrix.rows()},
                 {"kernel", kernel}});
      }
    }
  }
  return r;
}

json check_exactness(const DiscreteComplex& c, json r)
{
  const auto e = verify_exactness(c);
  if (e.refused) {
    r["status"] = "refused";
    r["message"] = e.message;
    return r;
  }
  r["dims"] = {{"U", e.dim_U}, {"Sigma", e.dim_Sigma}, {"V", e.dim_V}, {"alternating_sum", e.alternating_sum}};
  r["ranks"] = {{"J", e.rank_J}, {"div", e.rank_div}};
  if (!e.passed) fail(r, {{"message", e.message}});
  return r;
}

json check_commuting(const DiscreteComplex& c, json r, std::uint64_t seed, int trials)
{
  if (c.k() < 2) {
    r["status"] = "refused";
    r["message"] = "commuting identities require k >= 2";
    return r;
  }
  RationalRng rng(seed);
  const auto cr = verify_commuting(c, rng, trials);
  r["trials"] = cr.trials;
  r["seed"] = seed;
  if (!cr.passed())
    fail(r, {{"message", cr.witness},
             {"div_failures", cr.div_identity_failures},
             {"J_failures", cr.J_identity_failures}});
  return r;
}

json check_c1(const DiscreteComplex& c, json r)
{
  const auto g = global_c1_check(c);
  r["interior_edges"] = g.interior_edges;
  r["pairs_checked"] = g.pairs_checked;
  r["dims"] = {{"U", c.U().dimension()}};
  if (!g.passed) fail(r, {{"edge", *g.witness_edge}, {"dof", *g.witness_dof}, {"kind", g.witness_kind}});
  return r;
}

int run_verify(const std::string& path, int k, std::vector<std::string> checks, std::uint64_t seed, int trials)
{
  const Mesh mesh = read_mesh(path);
  if (checks.empty()) {
    checks = {"unisolvence", "c1"};
    if (k >= 1) checks.insert(checks.begin(), {"psi", "potential"});
    if (k >= 2) checks.insert(checks.end(), {"exactness", "commuting"});
  }
  for (const auto& name : checks)
    if (std::find(kAllChecks.begin(), kAllChecks.end(), name) == kAllChecks.end())
      throw std::invalid_argument("unknown check '" + name + "'");
  const bool needs_k1 = std::any_of(checks.begin(), checks.end(), [](auto& n) { return n == "psi" || n == "potential"; });
  if (needs_k1 && k < 1) throw std::invalid_argument("checks psi and potential require k >= 1");

  const DiscreteComplex c(mesh, k);
  json reports = json::array();
  bool all = true;
  for (const auto& name : checks) {
    json r = base_report(name, path, k);
    if (name == "psi") r = check_psi(c, r);
    else if (name == "potential") r = check_potential(c, r);
    else if (name == "unisolvence") r = check_unisolvence(c, r);
    else if (name == "exactness") r = check_exactness(c, r);
    else if (name == "commuting") r = check_commuting(c, r, seed, trials);
    else r = check_c1(c, r);
    all = all && r["status"] == "pass";
    reports.push_back(r);
  }
  std::cout << json{{"mesh", path}, {"k", k}, {"status", all ? "pass" : "fail"}, {"reports", reports}}.dump(2) << "\n";
  return all ? 0 : 1;
}

int run_dims(const std::string& path, int k)
{
  const Mesh mesh = read_mesh(path);
  std::printf("mesh %s: %zu vertices, %zu edges, %zu triangles, V - E + F = %ld\n", path.c_str(), mesh.num_vertices(),
              mesh.num_edges(), mesh.num_triangles(), static_cast<long>(mesh.euler_characteristic()));
  std::printf("%-8s %8s %8s %10s %10s\n", "space", "vertex", "edge", "triangle", "dimension");
  for (SpaceFamily f : {SpaceFamily::U, SpaceFamily::Sigma, SpaceFamily::V}) {
    if (f != SpaceFamily::U && k < 2) continue;
    const EntityCounts e = entity_counts(f, k);
    std::printf("%-8s %8zu %8zu %10zu %10zu\n", family_name(f), e.vertex, e.edge, e.triangle,
                space_dimension(mesh, f, k));
  }
  if (k >= 2) {
    const long alt = static_cast<long>(space_dimension(mesh, SpaceFamily::U, k)) - 3 -
                     static_cast<long>(space_dimension(mesh, SpaceFamily::Sigma, k)) +
                     static_cast<long>(space_dimension(mesh, SpaceFamily::V, k));
    std::printf("dim U - 3 - dim Sigma + dim V = %ld\n", alt);
  }
  return 0;
}

int run_solve(const std::string& path, int k, const MaterialLaw& mat, const std::string& which, std::uint64_t seed)
{
  const Mesh mesh = read_mesh(path);
  const DiscreteComplex c(mesh, k, false);
  const MixedDiscretization d(c);
  const auto zero_sym = [](double, double) { return SymValue{0, 0, 0}; };
  const auto zero_vec = [](double, double) { return VecValue{0, 0}; };

  double sigma_norm = 0, u_norm = 0, err_sigma = 0, err_u = 0, residual = 0, defect = 0;
  if (which == "patch") {
    const auto r = discrete_patch_test(d, mat, seed);
    err_sigma = r.sigma_relative_error;
    err_u = r.u_relative_error;
    residual = r.residual;
    defect = r.equilibrium_defect;
  } else {
    MixedProblem p;
    p.material = mat;
    ManufacturedSolution exact{zero_sym, zero_vec, zero_vec};
    if (which == "smooth") exact = smooth_manufactured_solution(mat);
    else if (which != "zero") throw std::invalid_argument("unknown case '" + which + "' (zero, smooth, patch)");
    p.body_force = exact.f;
    p.traction_stress = exact.sigma;
    const auto s = solve_mixed(d, p);
    sigma_norm = d.sigma_l2_error(s.sigma, zero_sym);
    u_norm = d.u_l2_error(s.u, zero_vec);
    err_sigma = d.sigma_l2_error(s.sigma, exact.sigma);
    err_u = d.u_l2_error(s.u, exact.u);
    residual = s.residual;
    defect = equilibrium_defect(d, s);
  }
  std::printf("case,k,triangles,dim_sigma,dim_u,sigma_L2,u_L2,err_sigma,err_u,residual,equilibrium_defect\n");
  std::printf("%s,%d,%zu,%zu,%zu,%s,%s,%s,%s,%s,%s\n", which.c_str(), k, mesh.num_triangles(),
              static_cast<std::size_t>(d.sigma_dim()), static_cast<std::size_t>(d.v_dim()),
              which == "patch" ? "" : format_double(sigma_norm).c_str(),
              which == "patch" ? "" : format_double(u_norm).c_str(), format_double(err_sigma).c_str(),
              format_double(err_u).c_str(), format_double(residual).c_str(), format_double(defect).c_str());
  return 0;
}

int run_convergence(const std::string& path, int k, int levels, const MaterialLaw& mat)
{
  const Mesh mesh = read_mesh(path);
  const auto rows = convergence_study(mesh, levels, k, mat, smooth_manufactured_solution(mat));
  std::cout << convergence_csv(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Exact verification and mixed elasticity solves for the HCT-based discrete elasticity complex"};
  app.require_subcommand(1);

  std::string mesh;
  int k = 2, levels = 3, trials = 5;
  double lambda = 1, mu = 1;
  std::uint64_t seed = 1;
  std::vector<std::string> checks;
  std::string which = "smooth";

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--mesh", mesh, "mesh file")->required();
    sub->add_option("--k", k, "stress degree k")->required()->check(CLI::Range(0, 12));
    sub->add_option("--seed", seed, "seed for random rational trials");
  };
  auto* verify = app.add_subcommand("verify", "exact checks, JSON report; exit 0 iff all pass");
  add_common(verify);
  verify->add_option("--checks", checks, "comma-separated subset of psi,potential,unisolvence,exactness,commuting,c1")
      ->delimiter(',');
  verify->add_option("--trials", trials, "random trials for the commuting check")->check(CLI::PositiveNumber);

  auto* dims = app.add_subcommand("dims", "dimension table");
  add_common(dims);

  auto* solve = app.add_subcommand("solve", "mixed solve; solution norms as CSV");
  add_common(solve);
  solve->add_option("--lambda", lambda, "first Lame parameter");
  solve->add_option("--mu", mu, "shear modulus");
  solve->add_option("--case", which, "zero, smooth or patch")->check(CLI::IsMember({"zero", "smooth", "patch"}));

  auto* conv = app.add_subcommand("convergence", "errors and observed orders under uniform refinement (CSV)");
  add_common(conv);
  conv->add_option("--levels", levels, "number of refinement levels")->check(CLI::PositiveNumber);
  conv->add_option("--lambda", lambda, "first Lame parameter");
  conv->add_option("--mu", mu, "shear modulus");

  CLI11_PARSE(app, argc, argv);

  try {
    const MaterialLaw mat{lambda, mu};
    if (*verify) return run_verify(mesh, k, checks, seed, trials);
    if (*dims) return run_dims(mesh, k);
    if (*solve) return run_solve(mesh, k, mat, which, seed);
    return run_convergence(mesh, k, levels, mat);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
