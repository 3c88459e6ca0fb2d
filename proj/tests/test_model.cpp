#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>

#include "test_support.hpp"

using namespace cqed;

namespace {

SystemParams params(double g, double kappa, double gamma, double eps, int n_max = 6) {
    SystemParams p;
    p.g = g;
    p.kappa = kappa;
    p.gamma = gamma;
    p.epsilon = eps;
    p.n_max = n_max;
    return p;
}

std::vector<cplx> eigenvalues(const Matrix& m) {
    Eigen::ComplexEigenSolver<Matrix> es(m);
    std::vector<cplx> v(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    return v;
}

} // namespace

TEST(EffectiveHamiltonian, DecoupledDissipators) {
    const auto p = params(0.0, 0.7, 1.3, 0.0, 4);
    const Matrix h = effective_hamiltonian(p).matrix();
    const SpaceDims d = p.dims();
    EXPECT_NEAR((h - h.diagonal().asDiagonal().toDenseMatrix()).norm(), 0.0, 1e-15);
    for (int s = 0; s < 2; ++s)
        for (int n = 0; n <= 4; ++n) {
            const cplx expect(0.0, -(p.kappa * n + p.gamma * s / 2.0));
            EXPECT_NEAR(std::abs(h(d.index(static_cast<Atom>(s), n), d.index(static_cast<Atom>(s), n)) - expect), 0.0, 1e-14);
        }
}

TEST(HermitianHamiltonian, JaynesCummingsLadder) {
    auto p = params(1.3, 1.0, 1.0, 0.0, 5);
    const Matrix h = hermitian_hamiltonian(p).matrix();
    std::vector<double> ev;
    for (double x : hermitian_eigenvalues(h)) ev.push_back(x);
    std::vector<double> expect{0.0};
    for (int n = 1; n <= 5; ++n) {
        expect.push_back(p.g * std::sqrt(n));
        expect.push_back(-p.g * std::sqrt(n));
    }
    expect.push_back(0.0);  // |e, n_max> is uncoupled in the truncated space
    std::sort(expect.begin(), expect.end());
    ASSERT_EQ(ev.size(), expect.size());
    for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(ev[i], expect[i], 1e-12);
}

TEST(EffectiveHamiltonian, ExcitedStateNormDecaysAtGamma) {
    auto p = params(0.0, 1.0, 0.8, 0.0, 3);
    const auto h = effective_hamiltonian(p);
    PureState psi = PureState::basis(p.dims(), Atom::excited, 0);
    const double dt = 1e-3;
    std::vector<double> ts, logs;
    for (int k = 1; k <= 2000; ++k) {
        psi = evolve_step(psi, h, dt);
        if (k % 200 == 0) {
            ts.push_back(k * dt);
            logs.push_back(std::log(psi.squared_norm()));
        }
    }
    // Least-squares slope of log |psi|^2.
    double mt = 0, ml = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) mt += ts[i] / ts.size(), ml += logs[i] / ts.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < ts.size(); ++i) num += (ts[i] - mt) * (logs[i] - ml), den += (ts[i] - mt) * (ts[i] - mt);
    EXPECT_NEAR(-num / den, p.gamma, 1e-9);
}

TEST(HermitianHamiltonian, HermitianPartOfEffective) {
    auto p = params(1.1, 0.6, 0.9, 0.7, 7);
    p.delta = 0.4;
    p.theta = -0.3;
    const Matrix h = hermitian_hamiltonian(p).matrix();
    const Matrix he = effective_hamiltonian(p).matrix();
    EXPECT_LT((h - 0.5 * (he + he.adjoint())).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(HermitianHamiltonian, ConservesExcitationsWithoutDrive) {
    auto p = params(1.0, 1.0, 1.0, 0.0, 6);
    p.delta = 0.5;
    p.theta = 0.2;
    const Matrix h = hermitian_hamiltonian(p).matrix();
    const Matrix n = excitation_number(p.dims()).matrix();
    EXPECT_LT((h * n - n * h).norm(), 1e-13);
    p.epsilon = 0.3;
    const Matrix hd = hermitian_hamiltonian(p).matrix();
    EXPECT_GT((hd * n - n * hd).norm(), 0.1);
}

TEST(HermitianHamiltonian, GroundVacuumEnergy) {
    auto p = params(1.0, 1.0, 2.0, 0.0);
    p.delta = 0.8;
    const Matrix h = hermitian_hamiltonian(p).matrix();
    EXPECT_NEAR(h(0, 0).real(), -detuning_terms(p).atom / 2.0, 1e-15);
}

TEST(CollapseOperators, AntiHermitianPartMatchesRates) {
    auto p = params(0.9, 0.7, 1.7, 0.4, 5);
    p.theta = 0.3;
    const Matrix he = effective_hamiltonian(p).matrix();
    const auto c = collapse_operators(p);
    const Matrix anti = 0.5 * (he - he.adjoint());
    const Matrix expect = -0.5 * I * (c[0].matrix().adjoint() * c[0].matrix() + c[1].matrix().adjoint() * c[1].matrix());
    EXPECT_LT((anti - expect).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(CollapseOperators, RatesAndActions) {
    const auto p = params(1.0, 0.6, 1.4, 0.0, 4);
    const auto c = collapse_operators(p);
    const SpaceDims d = p.dims();
    const Vector e0 = PureState::basis(d, Atom::excited, 0).amplitudes();
    EXPECT_NEAR((c[atom_channel].matrix() * e0).squaredNorm(), p.gamma, 1e-14);
    EXPECT_NEAR((c[cavity_channel].matrix() * e0).squaredNorm(), 0.0, 1e-14);
    const Vector out = c[cavity_channel].matrix() * PureState::basis(d, Atom::ground, 2).amplitudes();
    EXPECT_NEAR((out - std::sqrt(4.0 * p.kappa) * PureState::basis(d, Atom::ground, 1).amplitudes()).norm(), 0.0, 1e-14);
}

TEST(DetuningTerms, UnitBookkeeping) {
    SystemParams p;
    EXPECT_EQ(detuning_terms(p).atom, 0.0);
    EXPECT_EQ(detuning_terms(p).cavity, 0.0);
    p.gamma = 2.0;
    p.delta = 1.0;
    EXPECT_NEAR(detuning_terms(p).atom, 1.0, 1e-15);
    p.kappa = 1.0;
    p.theta = 0.5;
    // Drive-frame cavity term follows kappa~ = kappa (1 + i theta).
    EXPECT_NEAR(detuning_terms(p).cavity, 0.5, 1e-15);
}

TEST(DetuningTerms, CavityTermMatchesComplexRate) {
    // With g = 0 the empty-cavity amplitude is eps / (i Dc + kappa) = eps / kappa~.
    SystemParams p = params(0.0, 1.0, 1.0, 0.3, 8);
    p.theta = 0.7;
    const double dc = detuning_terms(p).cavity;
    const cplx alpha_h = p.epsilon / (p.kappa + I * dc);
    const cplx alpha_rates = p.epsilon / complex_rates(p).kappa_tilde;
    EXPECT_NEAR(std::abs(alpha_h - alpha_rates), 0.0, 1e-15);
}

TEST(SaturationScaledDrive, Modes) {
    SystemParams p = params(1.0, 1.0, 1.0, 0.7);
    EXPECT_EQ(saturation_scaled_drive(p), 0.7);
    p.epsilon = 1.0;
    p.drive_scaling = DriveScaling::saturation;
    const double e = saturation_scaled_drive(p);
    EXPECT_NEAR(e, std::sqrt(1.0 / 8.0), 1e-15);
    EXPECT_NEAR((e / p.kappa) * (e / p.kappa), p.gamma * p.gamma / (8 * p.g * p.g), 1e-15);
    p.epsilon = 0.0;
    EXPECT_EQ(saturation_scaled_drive(p), 0.0);
    p.drive_scaling = DriveScaling::raw;
    EXPECT_EQ(saturation_scaled_drive(p), 0.0);
    p.g = 0.0;
    p.drive_scaling = DriveScaling::saturation;
    EXPECT_THROW(saturation_scaled_drive(p), Error);
    EXPECT_THROW(drive_scaling_from_string("linear"), Error);
}

TEST(ComplexRates, Substitution) {
    SystemParams p;
    auto r = complex_rates(p);
    EXPECT_EQ(r.kappa_tilde, cplx(1.0, 0.0));
    EXPECT_EQ(r.gamma_tilde, cplx(1.0, 0.0));
    p.theta = 0.5;
    EXPECT_NEAR(std::abs(complex_rates(p).kappa_tilde - cplx(1.0, 0.5)), 0.0, 1e-15);
    p.delta = -2.0;
    EXPECT_NEAR(std::abs(complex_rates(p).gamma_tilde - cplx(1.0, -2.0)), 0.0, 1e-15);
}

TEST(VacuumRabi, Values) {
    SystemParams p;
    EXPECT_NEAR(std::abs(vacuum_rabi(p) - cplx(0.0, 0.968245836551854)), 0.0, 1e-12);
    p.g = 0.0;
    p.kappa = 1.0;
    p.gamma = 0.6;
    const cplx v = vacuum_rabi(p);
    EXPECT_NEAR(std::abs(v - cplx(std::abs(p.kappa - p.gamma / 2.0) / 2.0, 0.0)), 0.0, 1e-15);

    SystemParams a, b;
    a.delta = b.delta = 1.0;
    a.theta = -1.0;
    b.theta = 1.0;
    EXPECT_GT(std::abs(std::abs(vacuum_rabi(a)) - std::abs(vacuum_rabi(b))), 0.1);
}

TEST(VacuumRabi, MatchesOneExcitationEigenvalues) {
    // The one-excitation block of H_eff has eigenvalues -i(kappa~ + gamma~/2)/2 +- i Omega~.
    SystemParams p = params(1.0, 1.0, 1.0, 0.0, 2);
    p.delta = 0.4;
    p.theta = -0.6;
    const Matrix h = effective_hamiltonian(p).matrix();
    const SpaceDims d = p.dims();
    Matrix b(2, 2);
    const int idx[2] = {d.index(Atom::ground, 1), d.index(Atom::excited, 0)};
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) b(i, j) = h(idx[i], idx[j]);
    const auto r = complex_rates(p);
    const cplx centre = -I * (r.kappa_tilde + r.gamma_tilde / 2.0) / 2.0;
    // Energies measured relative to the ground-vacuum level.
    const cplx shift = h(0, 0);
    const auto ev = eigenvalues(b);
    const cplx split = 0.5 * (ev[0] - ev[1]);
    const cplx omega = vacuum_rabi(p);
    EXPECT_NEAR(std::abs(0.5 * (ev[0] + ev[1]) - shift - centre), 0.0, 1e-12);
    EXPECT_NEAR(std::min(std::abs(split - I * omega), std::abs(split + I * omega)), 0.0, 1e-12);
}

TEST(SystemParams, Validation) {
    SystemParams p;
    p.kappa = 0.0;
    EXPECT_THROW(p.validate(), Error);
    p.kappa = 1.0;
    p.gamma = -1.0;
    EXPECT_THROW(p.validate(), Error);
    p.gamma = 1.0;
    p.n_max = 0;
    EXPECT_THROW(p.validate(), Error);
}
