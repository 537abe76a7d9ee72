#include <catch2/catch_amalgamated.hpp>

#include "dimflow/modes.hpp"
#include "dimflow/spectral.hpp"
#include "dimflow/verify.hpp"
#include "support/reference.hpp"

using namespace dimflow;

TEST_CASE("diamond pole set matches the closed form") {
  ValidatedGraph g = validate(make_diamond());
  auto poles = find_poles(g, 0.0);
  REQUIRE(poles.size() == 4);
  const double r17 = std::sqrt(17.0);
  const std::vector<double> expected = {(1 - r17) / 2, -1.0, 0.0, (1 + r17) / 2};
  for (int k = 0; k < 4; ++k) {
    CHECK(std::abs(poles[k].lambda - expected[k]) < 1e-10);
    CHECK(poles[k].multiplicity == 1);
    // s_p = -i lambda - Gamma/2
    CHECK(std::abs(poles[k].location - cplx(0.0, -expected[k])) < 1e-10);
  }
}

TEST_CASE("poles shift by -Gamma/2 under decoherence") {
  ValidatedGraph g = validate(make_diamond(1, 1, 1, 1, 1, 0.3));
  auto poles = find_poles(g, 0.3);
  for (const Pole& p : poles) CHECK(p.location.real() == Catch::Approx(-0.15));
}

TEST_CASE("symmetric trimer has a doubly degenerate pole") {
  ValidatedGraph g = validate(make_trimer(0.0, 1.0, 1.0));
  auto poles = find_poles(g, 0.0);
  REQUIRE(poles.size() == 2);
  CHECK(std::abs(poles[0].lambda + 1.0) < 1e-12);
  CHECK(poles[0].multiplicity == 2);
  CHECK(std::abs(poles[1].lambda - 2.0) < 1e-12);
  CHECK(poles[1].multiplicity == 1);
}

TEST_CASE("trimer pole sum vanishes for any couplings") {
  Rng rng(61);
  for (int trial = 0; trial < 10; ++trial) {
    GraphSpec spec = make_trimer(0, 0, 1);
    for (int e = 0; e < 3; ++e) spec.edges[e].coupling = rng.uniform(0.1, 2.0);
    auto poles = find_poles(validate(spec), 0.0);
    double sum = 0.0;
    for (const Pole& p : poles) sum += p.lambda * p.multiplicity;
    CHECK(std::abs(sum) < 1e-12);
  }
}

TEST_CASE("leaf-only graph poles are resonance-coincident") {
  // path(2): flows vanish identically, det M = 1 everywhere; the amplitude
  // poles at lambda = +-J coincide with the local propagator singularity
  ValidatedGraph g = validate(make_path(2, 1.0));
  auto poles = find_poles(g, 0.0);
  REQUIRE(poles.size() == 2);
  for (const Pole& p : poles) {
    CHECK(p.resonance_coincident);
    CHECK(std::abs(std::abs(p.lambda) - 1.0) < 1e-12);
  }
}

TEST_CASE("pole-eigenvalue bijection on random graphs") {
  Rng rng(83);
  for (int trial = 0; trial < 10; ++trial) {
    const double gamma = (trial % 2) ? 0.25 : 0.0;
    ValidatedGraph g = validate(random_connected_graph(rng, gamma));
    Spectrum s = eigendecompose(g);
    auto poles = find_poles(g, gamma);
    int k = 0;
    for (const Pole& p : poles)
      for (int r = 0; r < p.multiplicity; ++r, ++k) {
        CHECK(std::abs(cplx(0, 1) * (p.location + gamma / 2) -
                       cplx(s.eigenvalues(k), 0)) < 1e-9);
        CHECK(std::abs(p.lambda - s.eigenvalues(k)) < 1e-9 * std::max(1.0, s.norm()));
      }
    CHECK(k == g.num_sites);
  }
}

TEST_CASE("dark diamond mode: all flow residues and coefficients vanish") {
  ValidatedGraph g = validate(make_diamond());
  auto poles = find_poles(g, 0.0);
  const Pole& dark = poles[1];  // lambda = -1
  Eigen::VectorXcd chi = flow_residues(g, g.initial, 0.0, dark);
  CHECK(chi.cwiseAbs().maxCoeff() < 1e-9);
  Eigen::VectorXcd coeff = modal_vectors(g, g.initial, 0.0, dark, chi);
  CHECK(coeff.cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("trimer flow residues equal the inverse-transform coefficients") {
  const double ja = 1.5, jb = 1.0, jc = 0.5;
  GraphSpec spec = make_trimer(0, 0, 1);
  spec.edges[0].coupling = ja;
  spec.edges[1].coupling = jb;
  spec.edges[2].coupling = jc;
  ValidatedGraph g = validate(spec);
  auto poles = find_poles(g, 0.0);
  REQUIRE(poles.size() == 3);
  for (const Pole& p : poles) {
    Eigen::VectorXcd chi = flow_residues(g, g.initial, 0.0, p);
    // independent residues of the closed-form flows at s_p
    const double lp = -p.lambda;  // e^{+i lambda t} root for this pole
    double l2 = 0, l3 = 0;
    std::vector<double> others;
    for (const Pole& q : poles)
      if (&q != &p) others.push_back(-q.lambda);
    l2 = others[0];
    l3 = others[1];
    const double denom = (lp - l2) * (lp - l3);
    const cplx phi1 = cplx(0, -0.5) * (ja * ja - jc * jc) * lp / denom;
    const cplx phi2 =
        cplx(0, -0.5) * (jb * jc * lp + ja * (lp * lp - 2 * jb * jb)) / denom;
    const cplx phi3 =
        cplx(0, +0.5) * (jb * ja * lp + jc * (lp * lp - 2 * jb * jb)) / denom;
    CHECK(std::abs(chi(0) - phi1) < 1e-10);
    CHECK(std::abs(chi(2) - phi2) < 1e-10);
    CHECK(std::abs(chi(4) - phi3) < 1e-10);
    CHECK(std::abs(chi(1) + phi2) < 1e-10);
    CHECK(std::abs(chi(3) + phi3) < 1e-10);
    CHECK(std::abs(chi(5) + phi1) < 1e-10);
  }
}

TEST_CASE("junction sums of flow residues vanish per site") {
  Rng rng(97);
  for (int trial = 0; trial < 6; ++trial) {
    ValidatedGraph g = validate(random_connected_graph(rng, 0.0));
    FlowLayout layout = FlowLayout::from(g);
    ModeSet set = build_mode_set(g, g.initial, 0.0);
    for (const Mode& mode : set.modes)
      for (int i = 0; i < g.num_sites; ++i) {
        cplx sum = 0;
        for (int q : layout.site_slots[i]) sum += mode.flow_residue(q);
        CHECK(std::abs(sum) < 1e-9);
      }
  }
}

TEST_CASE("modal vectors match the spectral table") {
  Rng rng(103);
  for (int trial = 0; trial < 6; ++trial) {
    const double gamma = (trial % 2) ? 0.3 : 0.0;
    ValidatedGraph g = validate(random_connected_graph(rng, gamma));
    Spectrum s = eigendecompose(g);
    ModalTable table = modal_coefficients(s, g.initial);
    auto poles = find_poles(g, gamma);
    for (const Pole& p : poles) {
      if (p.multiplicity > 1) continue;  // table columns are per eigenvalue
      Eigen::VectorXcd chi = flow_residues(g, g.initial, gamma, p);
      Eigen::VectorXcd coeff = modal_vectors(g, g.initial, gamma, p, chi);
      int k = -1;
      for (int j = 0; j < g.num_sites; ++j)
        if (std::abs(s.eigenvalues(j) - p.lambda) < 1e-9 * std::max(1.0, s.norm()))
          k = j;
      REQUIRE(k >= 0);
      CHECK((coeff - table.coefficients.col(k)).cwiseAbs().maxCoeff() < 1e-8);
    }
  }
}

TEST_CASE("trimer modal coefficients follow the closed form") {
  const double ja = 1.5, jb = 1.0, jc = 0.5;
  GraphSpec spec = make_trimer(0, 0, 1);
  spec.edges[0].coupling = ja;
  spec.edges[1].coupling = jb;
  spec.edges[2].coupling = jc;
  ValidatedGraph g = validate(spec);
  ModeSet set = build_mode_set(g, g.initial, 0.0);
  REQUIRE(set.modes.size() == 3);
  for (const Mode& mode : set.modes) {
    const double l = mode.pole.lambda;
    std::vector<double> others;
    for (const Mode& m2 : set.modes)
      if (&m2 != &mode) others.push_back(m2.pole.lambda);
    const double denom = (l - others[0]) * (l - others[1]);
    CHECK(std::abs(mode.site_coefficient(0) - (l * l - jb * jb) / denom) < 1e-10);
    CHECK(std::abs(mode.site_coefficient(1) - (ja * l + jb * jc) / denom) < 1e-10);
    CHECK(std::abs(mode.site_coefficient(2) - (jc * l + ja * jb) / denom) < 1e-10);
  }
}

TEST_CASE("degenerate cluster carries the summed coefficient") {
  ValidatedGraph g = validate(make_trimer(0.0, 1.0, 1.0));  // K3, lambda = 2, -1, -1
  ModeSet set = build_mode_set(g, g.initial, 0.0);
  REQUIRE(set.modes.size() == 2);
  // projector coefficients: lambda=2 mode 1/3 per site; cluster = c0 - 1/3
  const Mode& cluster = set.modes[0];
  CHECK(cluster.pole.multiplicity == 2);
  CHECK(std::abs(cluster.site_coefficient(0) - cplx(2.0 / 3.0)) < 1e-10);
  CHECK(std::abs(cluster.site_coefficient(1) - cplx(-1.0 / 3.0)) < 1e-10);
  const Mode& single = set.modes[1];
  CHECK(std::abs(single.site_coefficient(0) - cplx(1.0 / 3.0)) < 1e-10);
}

TEST_CASE("reconstruction: t = 0 completeness and Rabi oscillation") {
  ValidatedGraph p2 = validate(make_path(2, 1.0));
  std::vector<double> times;
  for (int k = 0; k <= 50; ++k) times.push_back(0.2 * k);
  Eigen::MatrixXcd traj = reconstruct(p2, p2.initial, 0.0, times);
  CHECK(std::abs(traj(0, 0) - cplx(1, 0)) < 1e-10);
  for (std::size_t c = 0; c < times.size(); ++c)
    CHECK(std::abs(traj(1, c) - cplx(0, -1) * std::sin(times[c])) < 1e-9);
}

TEST_CASE("reconstruction matches the reference on random graphs") {
  Rng rng(113);
  std::vector<double> times;
  for (int k = 0; k <= 50; ++k) times.push_back(0.4 * k);
  for (int trial = 0; trial < 6; ++trial) {
    const double gamma = (trial % 2) ? rng.uniform(0.01, 0.5) : 0.0;
    ValidatedGraph g = validate(random_connected_graph(rng, gamma));
    Eigen::MatrixXcd rebuilt = reconstruct(g, g.initial, gamma, times);
    Eigen::MatrixXcd reference = propagate(g, g.initial, times);
    CHECK((rebuilt - reference).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("residue completeness at t = 0") {
  Rng rng(127);
  for (int trial = 0; trial < 6; ++trial) {
    ValidatedGraph g = validate(random_connected_graph(rng, 0.1));
    ModeSet set = build_mode_set(g, g.initial, 0.1);
    Eigen::VectorXcd sum = Eigen::VectorXcd::Zero(g.num_sites);
    for (const Mode& m : set.modes) sum += m.site_coefficient;
    CHECK((sum - g.initial).cwiseAbs().maxCoeff() < 1e-9);
  }
}

TEST_CASE("determinant probes") {
  ValidatedGraph g = validate(make_diamond());
  // midway between poles the determinant is far from zero
  CHECK(std::abs(determinant(g, 0.0, cplx(0.0, -0.5))) > 1e-3);
  // dip probe at each pole: |det| shrinks by 10x or more from 1e-2 to 1e-6
  for (const Pole& p : find_poles(g, 0.0)) {
    const double near = std::abs(determinant(g, 0.0, p.location + cplx(1e-6, 0)));
    const double far = std::abs(determinant(g, 0.0, p.location + cplx(1e-2, 0)));
    CHECK(near * 10.0 <= far);
  }
}

TEST_CASE("leaf-only graph has constant determinant") {
  ValidatedGraph g = validate(make_path(2, 1.0));
  for (double im = -2.0; im <= 2.0; im += 0.5)
    CHECK(std::abs(determinant(g, 0.0, cplx(0.1, im)) - cplx(1, 0)) < 1e-12);
}

TEST_CASE("near-degenerate poles attach a warning") {
  GraphSpec spec = make_trimer(0.0, 1.0, 1.0);
  spec.edges[0].coupling = 1.0 + 2e-6;  // split the K3 degeneracy slightly
  ValidatedGraph g = validate(spec);
  ModeSet set = build_mode_set(g, g.initial, 0.0);
  CHECK(set.modes.size() == 3);
  CHECK_FALSE(set.warnings.empty());
}

TEST_CASE("unknown pole is rejected") {
  ValidatedGraph g = validate(make_diamond());
  Pole bogus;
  bogus.lambda = 0.123456;
  bogus.location = cplx(0, -0.123456);
  CHECK_THROWS_AS(flow_residues(g, g.initial, 0.0, bogus), ValidationError);
}
