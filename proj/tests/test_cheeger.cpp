#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "fraclap/fraclap.hpp"

using namespace fraclap;
using Catch::Approx;

namespace {

/// single column of `len` unit edges over one boundary point; node
/// measures are tuned so node gradient magnitudes reproduce difference
/// quotients exactly
ExtensionDomain chain_domain(int len, double p) {
  ExtensionDomain d;
  d.z = path_space(1);
  d.params = FractionalParams::make(p, 0.5);
  d.n_boundary = 1;
  d.layers = len;
  d.heights.resize(len);
  for (int m = 1; m <= len; ++m) d.heights[m - 1] = m;
  const int nodes = len + 1;
  d.mu.assign(nodes, 0.0);
  d.layer_of.resize(nodes);
  d.col_of.assign(nodes, 0);
  d.y_of.resize(nodes);
  d.boundary_mask.assign(nodes, 0);
  d.boundary_mask[0] = 1;
  d.boundary_ids = {0};
  for (int m = 0; m <= len; ++m) {
    d.layer_of[m] = m;
    d.y_of[m] = m;
  }
  for (int m = 0; m < len; ++m) d.edges.push_back({m, m + 1, 1.0, 1.0});
  for (int m = 1; m <= len; ++m) {
    double shares = 0;
    if (m - 1 >= 1) shares += 0.5;
    if (m - 1 == 0) shares += 1.0;
    if (m + 1 <= len) shares += 0.5;
    d.mu[m] = shares;  // = sum of edge shares * w * len^p for unit edges
  }
  d.base_point = 0;
  d.r0 = 1.0;
  d.horizontal_radius = 1.0;
  return d;
}

ExtensionDomain small_test_domain(double p, int n = 10, int layers = 3) {
  auto z = cycle_space(n);
  return build_product_extension(z, FractionalParams::make(p, 0.4), layers, 0.5, 1.5, 8.0);
}

}  // namespace

TEST_CASE("gradient of a constant vanishes", "[cheeger]") {
  auto d = small_test_domain(2.0);
  std::vector<double> u(d.node_count(), 3.7);
  auto g = gradient(d, DifferentialStructure::isotropic(), u);
  for (double q : g.edge_quotient) REQUIRE(q == 0.0);
  for (double m : g.node_mag) REQUIRE(m == 0.0);
}

TEST_CASE("linear function on a unit chain has |grad| = |s| everywhere", "[cheeger]") {
  const double s = -2.25;
  for (double p : {1.5, 2.0, 3.0}) {
    auto d = chain_domain(6, p);
    std::vector<double> u(d.node_count());
    for (int v = 0; v < d.node_count(); ++v) u[v] = s * d.y_of[v];
    auto g = gradient(d, DifferentialStructure::isotropic(), u);
    for (int v = 0; v < d.node_count(); ++v) REQUIRE(g.node_mag[v] == Approx(std::fabs(s)).epsilon(1e-12));
  }
}

TEST_CASE("anisotropic structure doubles the x-derivative on the left half-plane", "[cheeger]") {
  // 1D boundary with coordinates -3..3, so domain nodes carry (x, y)
  auto z = path_space(7);
  for (int i = 0; i < z.n; ++i) z.coords[i] = {static_cast<double>(i - 3)};
  auto d = build_product_extension(z, FractionalParams::make(2.0, 0.5), 3, 1.0, 2.0, 4.0);
  std::vector<std::vector<double>> A(d.node_count());
  for (int v = 0; v < d.node_count(); ++v) {
    const double x = z.coords[d.col_of[v]][0];
    A[v] = (x <= 0.0) ? std::vector<double>{2, 0, 0, 1} : std::vector<double>{1, 0, 0, 1};
  }
  auto st = DifferentialStructure::anisotropic(std::move(A), 2);
  std::vector<double> u(d.node_count());
  for (int v = 0; v < d.node_count(); ++v) u[v] = z.coords[d.col_of[v]][0];
  auto g = gradient(d, st, u);
  for (int v = 0; v < d.node_count(); ++v) {
    if (d.layer_of[v] == 0) continue;  // massless boundary nodes see no x-variation
    const double x = z.coords[d.col_of[v]][0];
    if (x < -1e-9) REQUIRE(g.node_mag[v] == Approx(2.0).epsilon(1e-12));
    if (x > 1e-9) REQUIRE(g.node_mag[v] == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("anisotropic structures require coordinates", "[cheeger]") {
  auto z = cycle_space(6);
  z.coords.clear();
  auto d = build_product_extension(z, FractionalParams::make(2.0, 0.5), 2, 1.0, 1.5, 4.0);
  std::vector<std::vector<double>> A(d.node_count(), {1, 0, 0, 1});
  auto st = DifferentialStructure::anisotropic(std::move(A), 2);
  std::vector<double> u(d.node_count(), 0.0);
  try {
    gradient(d, st, u);
    FAIL("expected MissingCoords");
  } catch (const Error& e) {
    REQUIRE(e.code() == errc::missing_coords);
  }
}

TEST_CASE("single unit edge with u=(0,1) has p-energy 1 at p=3", "[cheeger]") {
  auto d = chain_domain(1, 3.0);
  std::vector<double> u{0.0, 1.0};
  REQUIRE(p_energy(d, DifferentialStructure::isotropic(), u, 3.0) == Approx(1.0));
}

TEST_CASE("p-energy is p-homogeneous", "[cheeger][property]") {
  auto d = small_test_domain(2.5);
  auto st = DifferentialStructure::isotropic();
  Rng rng{5, 1};
  auto u = random_vector(rng, d.node_count());
  const double base = p_energy(d, st, u, 2.5);
  for (double c : {-2.0, 0.5, 3.0}) {
    auto cu = u;
    for (double& x : cu) x *= c;
    REQUIRE(p_energy(d, st, cu, 2.5) == Approx(std::pow(std::fabs(c), 2.5) * base).epsilon(1e-12));
  }
}

TEST_CASE("el_form(u,u) equals the p-energy and el_form(u,const) vanishes", "[cheeger][property]") {
  auto st = DifferentialStructure::isotropic();
  for (double p : {1.5, 2.0, 3.0}) {
    auto d = small_test_domain(p);
    Rng rng{17, static_cast<std::uint64_t>(p * 10)};
    auto u = random_vector(rng, d.node_count());
    REQUIRE(el_form(d, st, u, u, p) == Approx(p_energy(d, st, u, p)).epsilon(1e-12));
    std::vector<double> ones(d.node_count(), 1.0);
    const double scale = p_energy(d, st, u, p);
    REQUIRE(std::fabs(el_form(d, st, u, ones, p)) <= 1e-12 * (1.0 + scale));
  }
}

TEST_CASE("el_form on the 4-node path example", "[cheeger]") {
  auto d = chain_domain(3, 2.0);
  std::vector<double> u{0, 1, 2, 3}, v{0, 0, 1, 1};
  REQUIRE(el_form(d, DifferentialStructure::isotropic(), u, v, 2.0) == Approx(1.0));
  // p = 2 symmetry
  REQUIRE(el_form(d, DifferentialStructure::isotropic(), v, u, 2.0) == Approx(1.0));
}

TEST_CASE("p-energy is convex", "[cheeger][property]") {
  auto d = small_test_domain(3.0);
  auto st = DifferentialStructure::isotropic();
  Rng rng{23, 9};
  for (int trial = 0; trial < 20; ++trial) {
    auto u = random_vector(rng.fork(2 * trial), d.node_count());
    auto v = random_vector(rng.fork(2 * trial + 1), d.node_count());
    const double t = rng.uniform(trial);
    std::vector<double> mix(d.node_count());
    for (int k = 0; k < d.node_count(); ++k) mix[k] = t * u[k] + (1 - t) * v[k];
    REQUIRE(p_energy(d, st, mix, 3.0) <=
            t * p_energy(d, st, u, 3.0) + (1 - t) * p_energy(d, st, v, 3.0) + 1e-10);
  }
}

TEST_CASE("energy gradient matches finite differences", "[cheeger][property]") {
  auto st = DifferentialStructure::isotropic();
  for (double p : {1.5, 2.0, 3.0, 4.0}) {
    auto d = build_product_extension(cycle_space(5), FractionalParams::make(p, 0.45), 3, 0.7, 1.4,
                                     4.0);
    REQUIRE(d.node_count() == 20);
    Rng rng{31, static_cast<std::uint64_t>(p * 100)};
    auto u = random_vector(rng, d.node_count());
    // analytic gradient of E at u: p * sum_e sigma w phi_p(du)
    std::vector<double> grad(d.node_count(), 0.0);
    for (const Edge& e : d.edges) {
      const double t = e.w * signed_power(u[e.i] - u[e.j], p);
      grad[e.i] += p * t;
      grad[e.j] -= p * t;
    }
    const double h = 1e-6;
    for (int v = 0; v < d.node_count(); ++v) {
      auto up = u, um = u;
      up[v] += h;
      um[v] -= h;
      const double fd = (p_energy(d, st, up, p) - p_energy(d, st, um, p)) / (2 * h);
      REQUIRE(grad[v] == Approx(fd).epsilon(1e-6).margin(1e-9));
    }
  }
}

TEST_CASE("anisotropic identity matches the coordinate-grid energy", "[cheeger]") {
  auto z = path_space(9);
  auto d = build_product_extension(z, FractionalParams::make(2.0, 0.5), 4, 1.0, 1.5, 6.0);
  std::vector<std::vector<double>> A(d.node_count(), {1, 0, 0, 1});
  auto st = DifferentialStructure::anisotropic(std::move(A), 2);
  Rng rng{44, 2};
  auto u = random_vector(rng, d.node_count());
  const double p = 2.0;

  // independent node-based oracle: central/one-sided axis quotients
  auto coord = [&](int v, int k) { return k == 0 ? z.coords[d.col_of[v]][0] : d.y_of[v]; };
  double expected = 0;
  for (int v = 0; v < d.node_count(); ++v) {
    if (d.mu[v] <= 0) continue;
    double g[2] = {0, 0};
    int cnt[2] = {0, 0};
    for (const Edge& e : d.edges) {
      int other = -1;
      if (e.i == v) other = e.j;
      if (e.j == v) other = e.i;
      if (other < 0) continue;
      for (int k = 0; k < 2; ++k) {
        const double dx = coord(v, k) - coord(other, k);
        const double dother = coord(v, 1 - k) - coord(other, 1 - k);
        if (std::fabs(dx) > 1e-9 && std::fabs(dother) < 1e-9) {
          g[k] += (u[v] - u[other]) / dx;
          ++cnt[k];
        }
      }
    }
    for (int k = 0; k < 2; ++k)
      if (cnt[k]) g[k] /= cnt[k];
    expected += d.mu[v] * std::pow(g[0] * g[0] + g[1] * g[1], p / 2.0);
  }
  REQUIRE(p_energy(d, st, u, p) == Approx(expected).epsilon(1e-12));
}

TEST_CASE("monotonicity gap basics", "[cheeger]") {
  std::vector<double> z{1.0, -2.0, 0.5}, w{1.0, -2.0, 0.5};
  REQUIRE(monotonicity_gap(z, w, 3.0) == 0.0);
  std::vector<double> w2{0.0, 1.0, 2.0};
  double d2 = 0;
  for (int k = 0; k < 3; ++k) d2 += (z[k] - w2[k]) * (z[k] - w2[k]);
  REQUIRE(monotonicity_gap(z, w2, 2.0) == Approx(d2).epsilon(1e-14));
}

TEST_CASE("monotonicity gap stays positive over random pairs", "[cheeger][property]") {
  Rng rng{2718, 0};
  double min_c = std::numeric_limits<double>::infinity();
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> z(3), w(3);
    for (int k = 0; k < 3; ++k) {
      z[k] = rng.fork(trial).symmetric(k);
      w[k] = rng.fork(trial).symmetric(3 + k);
    }
    const double gap = monotonicity_gap(z, w, 3.0);
    REQUIRE(gap >= 0.0);
    double dw = 0;
    for (int k = 0; k < 3; ++k) dw += (z[k] - w[k]) * (z[k] - w[k]);
    dw = std::pow(std::sqrt(dw), 3.0);
    if (dw > 1e-12) min_c = std::min(min_c, gap / dw);
  }
  REQUIRE(min_c > 0.0);
}
