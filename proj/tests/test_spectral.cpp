#include <catch2/catch_amalgamated.hpp>

#include "dimflow/spectral.hpp"
#include "dimflow/efficiency.hpp"
#include "dimflow/verify.hpp"
#include "support/reference.hpp"

using namespace dimflow;

TEST_CASE("diamond spectrum matches the closed set") {
  ValidatedGraph g = validate(make_diamond());
  Spectrum s = eigendecompose(g);
  const double r17 = std::sqrt(17.0);
  std::vector<double> expected = {(1 - r17) / 2, -1.0, 0.0, (1 + r17) / 2};
  REQUIRE(s.eigenvalues.size() == 4);
  for (int k = 0; k < 4; ++k)
    CHECK(std::abs(s.eigenvalues(k) - expected[k]) < 1e-12);
}

TEST_CASE("spectrum invariants: residual and orthogonality") {
  Rng rng(11);
  for (int trial = 0; trial < 10; ++trial) {
    ValidatedGraph g = validate(random_connected_graph(rng, 0.0));
    Spectrum s = eigendecompose(g);
    const double scale = std::max(s.norm(), 1e-12);
    for (int k = 0; k < g.num_sites; ++k) {
      Eigen::VectorXd resid =
          g.hamiltonian * s.eigenvectors.col(k) - s.eigenvalues(k) * s.eigenvectors.col(k);
      CHECK(resid.cwiseAbs().maxCoeff() <= 1e-12 * scale);
    }
    Eigen::MatrixXd gram = s.eigenvectors.transpose() * s.eigenvectors;
    CHECK((gram - Eigen::MatrixXd::Identity(g.num_sites, g.num_sites))
              .cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("two-level splitting and broken-edge trimer spectrum") {
  ValidatedGraph p2 = validate(make_path(2, 0.7));
  Spectrum s = eigendecompose(p2);
  CHECK(std::abs(s.eigenvalues(0) + 0.7) < 1e-14);
  CHECK(std::abs(s.eigenvalues(1) - 0.7) < 1e-14);

  // J_a = 0: lambda in kappa {-sqrt3, 0, sqrt3}, kappa = sqrt((Jb^2+Jc^2)/3)
  GraphSpec spec = make_trimer(0, 0, 1);
  spec.edges[0].coupling = 0.0;
  spec.edges[1].coupling = 0.8;
  spec.edges[2].coupling = 1.3;
  Spectrum t = eigendecompose(validate(spec));
  const double kappa = std::sqrt((0.8 * 0.8 + 1.3 * 1.3) / 3.0);
  CHECK(std::abs(t.eigenvalues(0) + std::sqrt(3.0) * kappa) < 1e-12);
  CHECK(std::abs(t.eigenvalues(1)) < 1e-12);
  CHECK(std::abs(t.eigenvalues(2) - std::sqrt(3.0) * kappa) < 1e-12);
}

TEST_CASE("eigenvalues are invariant under site relabeling") {
  GraphSpec a;
  a.sites = {{1, 0.3}, {2, -0.1}, {3, 0.0}, {4, 0.7}};
  a.edges = {{1, 2, 1.1}, {2, 3, 0.4}, {3, 4, 0.9}, {1, 3, 0.6}};
  GraphSpec b;  // ids permuted (1->40, 2->10, 3->30, 4->20), same structure
  b.sites = {{40, 0.3}, {10, -0.1}, {30, 0.0}, {20, 0.7}};
  b.edges = {{40, 10, 1.1}, {10, 30, 0.4}, {30, 20, 0.9}, {40, 30, 0.6}};
  Spectrum sa = eigendecompose(validate(a));
  Spectrum sb = eigendecompose(validate(b));
  CHECK((sa.eigenvalues - sb.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("dark diamond mode has vanishing coefficients") {
  ValidatedGraph g = validate(make_diamond());
  Spectrum s = eigendecompose(g);
  ModalTable table = modal_coefficients(s, g.initial);
  // lambda = -1 is the second eigenvalue; initial on site 1
  for (int i = 0; i < 4; ++i) CHECK(std::abs(table.coefficients(i, 1)) < 1e-14);
}

TEST_CASE("modal completeness at t = 0") {
  Rng rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    ValidatedGraph g = validate(random_connected_graph(rng, 0.0));
    ModalTable table = modal_coefficients(g, g.initial);
    Eigen::VectorXcd sum = table.coefficients.rowwise().sum();
    CHECK((sum - g.initial).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("asymmetric trimer coefficients match the closed form") {
  // (Ja, Jb, Jc) = (1.5, 1.0, 0.5); independent evaluation of the modal
  // coefficient formula at the matching cubic roots
  GraphSpec spec = make_trimer(0, 0, 1);
  spec.edges[0].coupling = 1.5;
  spec.edges[1].coupling = 1.0;
  spec.edges[2].coupling = 0.5;
  ValidatedGraph g = validate(spec);
  Spectrum s = eigendecompose(g);
  ModalTable table = modal_coefficients(s, g.initial);
  for (int k = 0; k < 3; ++k) {
    const double l = s.eigenvalues(k);
    const double l2 = s.eigenvalues((k + 1) % 3), l3 = s.eigenvalues((k + 2) % 3);
    const double denom = (l - l2) * (l - l3);
    const double c2 = (1.5 * l + 1.0 * 0.5) / denom;
    CHECK(std::abs(table.coefficients(1, k) - c2) < 1e-12);
  }
}

TEST_CASE("propagate: Rabi oscillation, t = 0 identity, norm conservation") {
  ValidatedGraph p2 = validate(make_path(2, 0.9));
  std::vector<double> times;
  for (int k = 0; k <= 40; ++k) times.push_back(0.25 * k);
  Eigen::MatrixXcd traj = propagate(p2, p2.initial, times);
  for (std::size_t c = 0; c < times.size(); ++c) {
    CHECK(std::abs(traj(1, c) - cplx(0, -1) * std::sin(0.9 * times[c])) < 1e-12);
    CHECK(std::abs(traj.col(c).squaredNorm() - 1.0) < 1e-10);
  }
  CHECK(std::abs(traj(0, 0) - cplx(1.0, 0.0)) < 1e-14);

  CHECK_THROWS_AS(propagate(p2, p2.initial, {-1.0}), ValidationError);
}

TEST_CASE("diamond propagation agrees with a step-doubling integrator") {
  ValidatedGraph g = validate(make_diamond());
  Eigen::MatrixXcd traj = propagate(g, g.initial, {1.0});
  Eigen::VectorXcd ref = reference::integrate(g.hamiltonian, 0.0, g.initial, 1.0);
  CHECK((traj.col(0) - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("propagation with decoherence matches the integrator") {
  Rng rng(37);
  ValidatedGraph g = validate(random_connected_graph(rng, 0.2));
  Eigen::MatrixXcd traj = propagate(g, g.initial, {0.8});
  Eigen::VectorXcd ref = reference::integrate(g.hamiltonian, 0.2, g.initial, 0.8);
  CHECK((traj.col(0) - ref).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("oracle efficiency endpoints") {
  // two-level limit: eta_2 = 1/2 - G^2/(2(G^2+16J^2))
  ValidatedGraph max_direct = validate(make_trimer(1.0, 0.0, 1.0, 0.01));
  EfficiencyReport rep = oracle_efficiency(max_direct, max_direct.initial, 0.01);
  CHECK(std::abs(rep.eta(1) - reference::two_level_eta(1.0, 0.01)) < 1e-12);
  CHECK(std::abs(rep.eta(1) - 0.5) < 2e-4);

  // blocked site: eta_2 identically zero
  ValidatedGraph blocked = validate(make_trimer(-1.0, 0.0, 1.0, 0.3));
  EfficiencyReport rep2 = oracle_efficiency(blocked, blocked.initial, 0.3);
  CHECK(std::abs(rep2.eta(1)) < 1e-14);

  CHECK_THROWS_AS(oracle_efficiency(blocked, blocked.initial, 0.0), ValidationError);
}

TEST_CASE("efficiencies sum to one and ignore a global initial phase") {
  Rng rng(53);
  for (int trial = 0; trial < 8; ++trial) {
    const double gamma = rng.uniform(0.05, 0.8);
    ValidatedGraph g = validate(random_connected_graph(rng, gamma));
    EfficiencyReport rep = oracle_efficiency(g, g.initial, gamma);
    CHECK(std::abs(rep.eta.sum() - g.initial.squaredNorm()) < 1e-10);

    const cplx phase = std::polar(1.0, rng.uniform(0.0, 6.28));
    EfficiencyReport rot = oracle_efficiency(g, phase * g.initial, gamma);
    CHECK((rep.eta - rot.eta).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("interfering part vanishes quadratically as Gamma -> 0") {
  GraphSpec spec = make_trimer(0, 0, 1);
  spec.edges[0].coupling = 1.5;
  spec.edges[1].coupling = 1.0;
  spec.edges[2].coupling = 0.5;
  ValidatedGraph g = validate(spec);
  EfficiencyReport r4 = oracle_efficiency(g, g.initial, 1e-4);
  EfficiencyReport r5 = oracle_efficiency(g, g.initial, 1e-5);
  CHECK(std::abs(r4.interfering(1)) < 1e-8);
  // ratio ~ 100 between the two Gammas
  CHECK(std::abs(r4.interfering(1) / r5.interfering(1) - 100.0) < 1.0);
  // limit: eta -> sum |C|^2
  CHECK(std::abs(r5.eta(1) - r5.noninterfering(1)) < 1e-10);
}
