// Acceptance suite: every quantitative conclusion the library claims is
// exercised here at desk scale, one PASS/FAIL line per criterion.
#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <limits>

#include "fraclap/fraclap.hpp"

using namespace fraclap;

namespace {

const auto kIso = DifferentialStructure::isotropic();

std::vector<double> zero_mean_random(const MetricMeasureSpace& z, const Rng& rng) {
  std::vector<double> f(z.n);
  double mean = 0, mass = 0;
  for (int i = 0; i < z.n; ++i) {
    f[i] = rng.symmetric(i);
    mean += f[i] * z.nu[i];
    mass += z.nu[i];
  }
  for (double& v : f) v -= mean / mass;
  return f;
}

double rel_l2(const MetricMeasureSpace& z, const std::vector<double>& got,
              const std::vector<double>& want) {
  double num = 0, den = 0;
  for (int i = 0; i < z.n; ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]) * z.nu[i];
    den += want[i] * want[i] * z.nu[i];
  }
  return std::sqrt(num / den);
}

void report(const char* name, bool pass, const std::string& detail) {
  std::printf("[acceptance] %s: %s (%s)\n", name, pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
}

}  // namespace

TEST_CASE("C1 spectral cross-check", "[acceptance]") {
  // 64-node unit-weight cycle, p=2: frac_apply against the spectral power
  // lambda^theta; <= 10% relative L2, strictly better when layers and
  // height double.
  auto z = cycle_space(64);
  bool pass = true;
  std::string detail;
  for (double theta : {0.25, 0.5, 0.75}) {
    double errs[2];
    for (int lev = 0; lev < 2; ++lev) {
      const int M = 24 << lev;
      const double ymax = 32.0 * (1 << lev);
      const double ymin = 0.0625 / (1 << lev);
      auto d = build_product_extension(z, FractionalParams::make(2.0, theta), M, ymin, 1.5, ymax,
                                       Connectivity::FixedRadius, 0, 0);
      double worst = 0;
      for (int trial = 0; trial < 3; ++trial) {
        auto u = zero_mean_random(z, Rng{4242, static_cast<std::uint64_t>(trial)});
        auto f = frac_apply(d, kIso, u);
        auto sp = spectral_oracle_p2(d, u, theta);
        worst = std::max(worst, rel_l2(z, f.f, sp));
      }
      errs[lev] = worst;
    }
    char buf[96];
    std::snprintf(buf, sizeof(buf), "theta %.2f: %.4f -> %.4f; ", theta, errs[0], errs[1]);
    detail += buf;
    pass = pass && errs[0] <= 0.10 && errs[1] < errs[0];
    CHECK(errs[0] <= 0.10);
    CHECK(errs[1] < errs[0]);
  }
  report("C1 spectral-cross-check", pass, detail);
  REQUIRE(pass);
}

TEST_CASE("C2 energy comparability", "[acceptance]") {
  // ratio of the Besov form to E_T over 100 random nonconstant functions;
  // the implied constant moves by at most x2 under one refinement.
  auto z = cycle_space(64);
  bool pass = true;
  std::string detail;
  for (double p : {1.5, 2.0, 3.0}) {
    double C[2];
    for (int lev = 0; lev < 2; ++lev) {
      auto d = build_product_extension(z, FractionalParams::make(p, 0.5), 10 << lev,
                                       0.25 / (1 << lev), 1.5, 32.0, Connectivity::FixedRadius, 0,
                                       0);
      auto iv = check_energy_equivalence(d, kIso, 100, Rng{99, static_cast<std::uint64_t>(10 * p)});
      REQUIRE(iv.count == 100);
      CHECK(iv.lo > 0);
      CHECK(std::isfinite(iv.hi));
      C[lev] = iv.implied_C;
    }
    const double change = std::max(C[1] / C[0], C[0] / C[1]);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "p %.1f: C %.3f -> %.3f (x%.2f); ", p, C[0], C[1], change);
    detail += buf;
    pass = pass && std::isfinite(C[0]) && change <= 2.0;
    CHECK(change <= 2.0);
  }
  report("C2 energy-comparability", pass, detail);
  REQUIRE(pass);
}

TEST_CASE("C3 stability exponents", "[acceptance]") {
  // fitted data-to-gradient exponent >= 1/(p-1) - 0.1 for p in {2,3,4};
  // kappa-normalized slope >= 0.9 for p = 1.5; r^2 >= 0.95.
  bool pass = true;
  std::string detail;
  struct Case {
    double p, theta, floor;
  };
  for (const Case c : {Case{2.0, 0.5, 1.0 - 0.1}, Case{3.0, 0.5, 0.5 - 0.1},
                       Case{4.0, 0.4, 1.0 / 3.0 - 0.1}, Case{1.5, 0.5, 0.9}}) {
    auto d = build_product_extension(cycle_space(32), FractionalParams::make(c.p, c.theta), 10,
                                     0.25, 1.6, 16.0, Connectivity::FixedRadius, 0, 0);
    Rng rng{11, static_cast<std::uint64_t>(100 * c.p)};
    auto f = zero_mean_random(d.z, rng.fork(0));
    auto h = zero_mean_random(d.z, rng.fork(1));
    auto bd = make_boundary_data(d.z, f, 0, d.params);
    std::vector<double> ts;
    for (int j = 0; j < 8; ++j) ts.push_back(std::pow(2.0, -j));
    auto rep = measure_stability_exponent(d, kIso, c.p, bd, h, ts);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "p %.1f: slope %.3f (>= %.3f), r2 %.4f; ", c.p, rep.fit.slope,
                  c.floor, rep.fit.r_squared);
    detail += buf;
    pass = pass && rep.fit.slope >= c.floor && rep.fit.r_squared >= 0.95;
    CHECK(rep.fit.slope >= c.floor);
    CHECK(rep.fit.r_squared >= 0.95);
  }
  report("C3 stability-exponents", pass, detail);
  REQUIRE(pass);
}

TEST_CASE("C4 uniqueness modulo constants", "[acceptance]") {
  // independent random initializations agree to 1e-6 after normalization
  // and to 1e-8 in the gradient field.
  bool pass = true;
  std::string detail;
  for (double p : {1.5, 2.0, 3.0}) {
    auto d = build_product_extension(cycle_space(16), FractionalParams::make(p, 0.5), 6, 0.25, 1.5,
                                     8.0, Connectivity::FixedRadius, 0, 0);
    Rng rng{31415, static_cast<std::uint64_t>(10 * p)};
    auto f = zero_mean_random(d.z, rng);
    auto bd = make_boundary_data(d.z, f, 0, d.params);
    SolverOptions o1, o2;
    o1.tol = o2.tol = 1e-12;
    o1.random_init = o2.random_init = true;
    o1.rng = Rng{1001, 1};
    o2.rng = Rng{2002, 2};
    auto s1 = solve_neumann(d, kIso, p, bd, o1);
    auto s2 = solve_neumann(d, kIso, p, bd, o2);
    double du = 0;
    for (int v = 0; v < d.node_count(); ++v) du = std::max(du, std::fabs(s1.u[v] - s2.u[v]));
    auto g1 = gradient(d, kIso, s1.u), g2 = gradient(d, kIso, s2.u);
    double dg = 0;
    for (std::size_t e = 0; e < g1.edge_quotient.size(); ++e)
      dg = std::max(dg, std::fabs(g1.edge_quotient[e] - g2.edge_quotient[e]));
    char buf[96];
    std::snprintf(buf, sizeof(buf), "p %.1f: |du| %.2e, |dgrad| %.2e; ", p, du, dg);
    detail += buf;
    pass = pass && du <= 1e-6 && dg <= 1e-8;
    CHECK(du <= 1e-6);
    CHECK(dg <= 1e-8);
  }
  report("C4 uniqueness-mod-constants", pass, detail);
  REQUIRE(pass);
}

TEST_CASE("C5 exhaustion convergence", "[acceptance]") {
  // decaying data on a 256-point boundary: data tails and gradient
  // increments fall strictly, final increment <= 1e-3 of the first.
  auto z = path_space(256);
  auto d = build_product_extension(z, FractionalParams::make(2.0, 0.5), 10, 0.5, 1.5, 128.0,
                                   Connectivity::FixedRadius, 0, 0);
  Rng rng{31337, 0};
  std::vector<double> f(z.n, 0.0);
  double mean = 0;
  for (int i = 1; i < z.n; ++i) {
    f[i] = (0.5 + 0.5 * rng.uniform(i)) * std::exp(-z.d(0, i) / 8.0) * (i % 2 ? 1.0 : -1.0);
    mean += f[i] * z.nu[i];
  }
  f[0] = -mean / z.nu[0];
  auto bd = make_boundary_data(z, f, 0, d.params);
  auto rep = solve_neumann_exhaustion(d, kIso, 2.0, bd, 5);

  bool pass = rep.cauchy;
  for (int k = 0; k + 1 < 4; ++k) {
    CHECK(rep.f_tail_norms[k + 1] < rep.f_tail_norms[k]);
    pass = pass && rep.f_tail_norms[k + 1] < rep.f_tail_norms[k];
  }
  for (std::size_t k = 0; k + 1 < rep.increments.size(); ++k) {
    CHECK(rep.increments[k + 1] < rep.increments[k]);
    pass = pass && rep.increments[k + 1] < rep.increments[k];
  }
  const double ratio = rep.increments.back() / rep.increments.front();
  CHECK(ratio <= 1e-3);
  pass = pass && ratio <= 1e-3;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "increments %.2e .. %.2e, final/first %.1e", rep.increments.front(),
                rep.increments.back(), ratio);
  report("C5 exhaustion-convergence", pass, buf);
  REQUIRE(pass);
}

TEST_CASE("C6 harnack stability", "[acceptance]") {
  // with data vanishing on a window, the worst sup/inf ratio over
  // admissible balls stays within x2 across two refinement levels.
  bool pass = true;
  double ratios[3];
  int lev = 0;
  for (int n : {64, 128, 256}) {
    auto d = build_product_extension(cycle_space(n), FractionalParams::make(2.0, 0.5), 12, 0.25,
                                     1.6, n / 2.0, Connectivity::FixedRadius, 0, 0);
    std::vector<double> f(n, 0.0);
    double mean = 0;
    int cnt = 0;
    for (int i = 3 * n / 8; i < 5 * n / 8; ++i) {
      f[i] = (i % 2) ? 1.0 : -0.5;
      mean += f[i];
      ++cnt;
    }
    for (int i = 3 * n / 8; i < 5 * n / 8; ++i) f[i] -= mean / cnt;
    auto bd = make_boundary_data(d.z, f, 0, d.params);
    auto sol = solve_neumann(d, kIso, 2.0, bd);
    std::vector<int> W;
    for (int i = 0; i < n; ++i)
      if (d.z.d(0, i) < n / 8.0) W.push_back(i);
    auto rep = check_harnack(d, sol.u, W, {1.0, 2.0, 4.0});
    REQUIRE(std::isfinite(rep.max_ratio));
    ratios[lev++] = rep.max_ratio;
  }
  const double spread = *std::max_element(ratios, ratios + 3) / *std::min_element(ratios, ratios + 3);
  pass = spread <= 2.0;
  CHECK(spread <= 2.0);
  char buf[128];
  std::snprintf(buf, sizeof(buf), "ratios %.4f / %.4f / %.4f, spread x%.3f", ratios[0], ratios[1],
                ratios[2], spread);
  report("C6 harnack-stability", pass, buf);
  REQUIRE(pass);
}

TEST_CASE("C7 holder threshold behavior", "[acceptance]") {
  // bounded data: fitted boundary oscillation exponent clears the
  // predicted branch minus 0.1; concentrated data fail the growth check
  // that bounded data pass.
  const int n = 128;
  auto d = build_product_extension(cycle_space(n), FractionalParams::make(2.0, 0.5), 16, 0.125,
                                   1.5, n / 2.0, Connectivity::FixedRadius, 0, 0);
  auto prof = estimate_mass_exponents(d.z, 8);
  std::vector<BoundaryData> ensemble;
  for (int s = 0; s < 12; ++s)
    ensemble.push_back(
        make_boundary_data(d.z, zero_mean_random(d.z, Rng{22, static_cast<std::uint64_t>(s)}), 0,
                           d.params));
  auto rep = estimate_holder(d, kIso, 2.0, ensemble, prof.Q_mu,
                             std::numeric_limits<double>::infinity(), 0, n / 4.0, {1, 2, 4, 8});
  bool pass = rep.verdict == HolderReport::Verdict::Pass;
  CHECK(rep.fit.slope >= rep.predicted - 0.1);

  // growth-condition separation at alpha = 1/2
  std::vector<double> bounded(n, 0.7), atom(n, 0.0);
  atom[0] = 3.0;
  auto mb = makalainen_check(d, bounded, 2.0, 0.5, 0, 48.0, 6);
  auto ma = makalainen_check(d, atom, 2.0, 0.5, 0, 48.0, 6);
  CHECK(mb.pass);
  CHECK_FALSE(ma.pass);
  pass = pass && mb.pass && !ma.pass;
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "slope %.3f vs predicted %.2f - 0.1; growth check bounded:%s atom:%s",
                rep.fit.slope, rep.predicted, mb.pass ? "PASS" : "FAIL",
                ma.pass ? "PASS" : "FAIL");
  report("C7 holder-threshold", pass, buf);
  REQUIRE(pass);
}

TEST_CASE("C8 calculus invariants", "[acceptance]") {
  bool pass = true;
  std::string detail;

  // divergence-free pairing with constants, 1e-12 relative
  {
    double worst = 0;
    for (double p : {1.5, 2.0, 3.0}) {
      auto d = build_product_extension(cycle_space(10), FractionalParams::make(p, 0.45), 4, 0.5,
                                       1.5, 6.0);
      auto u = random_vector(Rng{8, static_cast<std::uint64_t>(p * 7)}, d.node_count());
      std::vector<double> ones(d.node_count(), 1.0);
      worst = std::max(worst,
                       std::fabs(el_form(d, kIso, u, ones, p)) / (1.0 + p_energy(d, kIso, u, p)));
    }
    pass = pass && worst <= 1e-12;
    CHECK(worst <= 1e-12);
    detail += "el_form(u,1) " + std::to_string(worst) + "; ";
  }

  // energy gradient against central differences, 1e-6 relative
  {
    double worst = 0;
    for (double p : {1.5, 2.0, 3.0, 4.0}) {
      auto d = build_product_extension(cycle_space(5), FractionalParams::make(p, 0.45), 3, 0.7,
                                       1.4, 4.0);
      auto u = random_vector(Rng{31, static_cast<std::uint64_t>(p * 100)}, d.node_count());
      std::vector<double> grad(d.node_count(), 0.0);
      for (const Edge& e : d.edges) {
        const double t = p * e.w * signed_power(u[e.i] - u[e.j], p);
        grad[e.i] += t;
        grad[e.j] -= t;
      }
      const double h = 1e-6;
      for (int v = 0; v < d.node_count(); ++v) {
        auto up = u, um = u;
        up[v] += h;
        um[v] -= h;
        const double fd = (p_energy(d, kIso, up, p) - p_energy(d, kIso, um, p)) / (2 * h);
        worst = std::max(worst, std::fabs(grad[v] - fd) / (1.0 + std::fabs(fd)));
      }
    }
    pass = pass && worst <= 1e-6;
    CHECK(worst <= 1e-6);
  }

  // monotonicity gap nonnegative over 10^4 random pairs
  {
    Rng rng{2718, 0};
    bool ok = true;
    for (int t = 0; t < 10000; ++t) {
      std::vector<double> zv(3), wv(3);
      for (int k = 0; k < 3; ++k) {
        zv[k] = rng.fork(t).symmetric(k);
        wv[k] = rng.fork(t).symmetric(3 + k);
      }
      ok = ok && monotonicity_gap(zv, wv, 3.0) >= 0.0 && monotonicity_gap(zv, wv, 1.5) >= 0.0;
    }
    pass = pass && ok;
    CHECK(ok);
  }

  // dampening preserves the energy to 1e-12 relative
  {
    auto d = build_product_extension(cycle_space(20), FractionalParams::make(2.0, 0.4), 8, 0.5,
                                     1.5, 64.0);
    auto dd = dampen(d, 3.0, 2.0);
    auto u = random_vector(Rng{11, 5}, d.node_count());
    const double e0 = p_energy(d, kIso, u, 2.0), e1 = p_energy(dd, kIso, u, 2.0);
    pass = pass && std::fabs(e1 - e0) <= 1e-12 * e0;
    CHECK(std::fabs(e1 - e0) <= 1e-12 * e0);
  }

  // trace of the extension is the identity, bitwise
  {
    auto d = build_product_extension(cycle_space(24), FractionalParams::make(2.0, 0.5), 6, 0.5,
                                     1.5, 12.0);
    auto v = random_vector(Rng{3, 3}, d.n_boundary);
    auto back = trace(d, extend(d, v));
    bool exact = true;
    for (int i = 0; i < d.n_boundary; ++i) exact = exact && back[i] == v[i];
    pass = pass && exact;
    CHECK(exact);
  }

  // frac_apply zero-mean at 1e-8 relative; round trips at 1e-5
  {
    double worst_mean = 0, worst_rt = 0;
    for (double p : {2.0, 3.0}) {
      auto d = build_product_extension(cycle_space(64), FractionalParams::make(p, 0.5), 16, 0.125,
                                       1.5, 32.0, Connectivity::FixedRadius, 0, 0);
      auto u = zero_mean_random(d.z, Rng{70, static_cast<std::uint64_t>(p)});
      auto fu = frac_apply(d, kIso, u);
      double abs_mass = 0;
      for (int i = 0; i < d.n_boundary; ++i) abs_mass += std::fabs(fu.f[i]) * d.z.nu[i];
      worst_mean = std::max(worst_mean, std::fabs(fu.mean) / abs_mass);

      // u-side round trip, compared after centering both gauges
      auto u2 = frac_solve(d, kIso, fu).values;
      double m1 = 0, m2 = 0, mass = 0;
      for (int i = 0; i < d.n_boundary; ++i) {
        m1 += u[i] * d.z.nu[i];
        m2 += u2[i] * d.z.nu[i];
        mass += d.z.nu[i];
      }
      double num = 0, den = 0;
      for (int i = 0; i < d.n_boundary; ++i) {
        const double a = u[i] - m1 / mass, b = u2[i] - m2 / mass;
        num += (a - b) * (a - b) * d.z.nu[i];
        den += a * a * d.z.nu[i];
      }
      worst_rt = std::max(worst_rt, std::sqrt(num / den));
    }
    pass = pass && worst_mean <= 1e-8 && worst_rt <= 1e-5;
    CHECK(worst_mean <= 1e-8);
    CHECK(worst_rt <= 1e-5);
    detail += "frac mean " + std::to_string(worst_mean) + ", round trip " +
              std::to_string(worst_rt);
  }

  report("C8 calculus-invariants", pass, detail);
  REQUIRE(pass);
}

TEST_CASE("C9 a priori bound", "[acceptance]") {
  // ensemble max of energy / ||f||_{nu_J}^{p'} finite and stable within
  // x2 under refinement.
  double worst[2];
  for (int lev = 0; lev < 2; ++lev) {
    auto d = build_product_extension(cycle_space(64), FractionalParams::make(2.0, 0.5), 12 << lev,
                                     0.25 / (1 << lev), 1.5, 32.0, Connectivity::FixedRadius, 0,
                                     0);
    double w = 0;
    for (int t = 0; t < 50; ++t) {
      auto f = zero_mean_random(d.z, Rng{777, static_cast<std::uint64_t>(t)});
      auto bd = make_boundary_data(d.z, f, 0, d.params);
      auto sol = solve_neumann(d, kIso, 2.0, bd);
      auto rep = a_priori_check(sol, bd, d.params.p_conj);
      REQUIRE(std::isfinite(rep.ratio));
      w = std::max(w, rep.ratio);
    }
    worst[lev] = w;
  }
  const double change = std::max(worst[1] / worst[0], worst[0] / worst[1]);
  const bool pass = std::isfinite(worst[0]) && change <= 2.0;
  CHECK(change <= 2.0);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "max ratio %.3e -> %.3e (x%.2f)", worst[0], worst[1], change);
  report("C9 a-priori-bound", pass, buf);
  REQUIRE(pass);
}
