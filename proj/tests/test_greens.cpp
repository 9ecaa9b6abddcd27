#include <cmath>
#include <stdexcept>
#include <vector>

#include <doctest.h>

#include "transducer/greens.hpp"
#include "transducer/special.hpp"

using namespace transducer;

namespace {

template <class Expr>
double max_abs(const Expr& m) {
    return m.cwiseAbs().maxCoeff();
}

// deterministic direction spread, nothing aligned with the axes
Vec3 direction(int i) {
    const double t = 0.31 + 0.57 * i, u = 1.1 + 0.83 * i;
    return Vec3(std::sin(t) * std::cos(u), std::sin(t) * std::sin(u), std::cos(t)).normalized();
}

ScatterScenario sample_scenario() {
    ScatterScenario sc;
    sc.delta_omega = 0.7 * sc.recip();
    sc.grating = Vec2(0.15, 0.1) * sc.recip();
    sc.mix_a = cplx(0.8, 0.0);
    sc.dip_a = 1.2;
    sc.dip_b = 0.9;
    sc.eta = 1e-8 * sc.recip();
    return sc;
}

// Light-cone delta-rule evaluation of the radiative damping tensor: loop the
// diffraction orders of both branches, keep q inside the cone, and add the
// on-shell transverse projector with the 1/k_perp delta weight. No complex
// square roots, no s/p decomposition: an independent path to the same tensor.
Mat3 delta_rule_damping(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                        Branch frame) {
    Mat3 out = Mat3::Zero();
    for (Branch sigma : {Branch::a, Branch::b}) {
        const Vec2 q_base = k_par + sc.branch_shift(sigma) - sc.branch_shift(frame);
        const double omega = res.omega(sigma);
        const double weight = std::norm(sc.mix(sigma)) * sc.dipole(sigma) * sc.dipole(sigma) *
                              omega * omega / (4.0 * sc.lattice_d * sc.lattice_d);
        for (const GIndex& g : reciprocal_vectors(6)) {
            const Vec2 q = q_base + g_vec(sc, g);
            const double kz2 = omega * omega - q.squaredNorm();
            if (kz2 <= 0.0) continue;
            const double kz = std::sqrt(kz2);
            for (int sign : {+1, -1}) {
                const Vec3 khat = Vec3(q.x(), q.y(), sign * kz) / omega;
                const Mat3 proj = Mat3::Identity() - khat * khat.transpose();
                out -= weight / kz * proj;
            }
        }
    }
    return out;
}

}  // namespace

TEST_CASE("dyadic_green is symmetric and even in r") {
    for (int i = 0; i < 6; ++i) {
        const Vec3 r = (0.1 + 7.0 * i) * direction(i);
        for (cplx k : {cplx(0.6, 0.0), cplx(2.3, 1e-3)}) {
            const CMat3 g = dyadic_green(r, k);
            const double scale = max_abs(g);
            CHECK(max_abs(g - g.transpose().eval()) <= 1e-12 * scale);
            CHECK(max_abs(g - dyadic_green(-r, k)) <= 1e-12 * scale);
        }
    }
}

TEST_CASE("dyadic_green far field approaches the transverse spherical wave") {
    const double k = 1.0;
    for (int i = 0; i < 4; ++i) {
        const Vec3 rhat = direction(i);
        const double r = 1e3 / k;
        const CMat3 g = dyadic_green(r * rhat, cplx(k, 0.0));
        const cplx pre = -std::exp(cplx(0.0, k * r)) / (4.0 * pi * r);
        const CMat3 want = pre * (Mat3::Identity() - rhat * rhat.transpose()).cast<cplx>();
        CHECK(max_abs(g - want) <= 0.01 * std::abs(pre));
    }
}

TEST_CASE("dyadic_green small-r imaginary part is -k/(6 pi) on the diagonal") {
    const double k = 1.0;
    const Vec3 r = 1e-4 * direction(2);
    const CMat3 g = dyadic_green(r, cplx(k, 0.0));
    const double want = -k / (6.0 * pi);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            const double im = g(m, n).imag();
            if (m == n)
                CHECK(im == doctest::Approx(want).epsilon(1e-4));
            else
                CHECK(std::abs(im) <= 1e-4 * std::abs(want));
        }
}

TEST_CASE("dyadic_green rejects degenerate arguments") {
    CHECK_THROWS_AS(dyadic_green(Vec3::Zero(), cplx(1.0, 0.0)), std::domain_error);
    CHECK_THROWS_AS(dyadic_green(Vec3(1.0, 0.0, 0.0), cplx(-1.0, 0.0)), std::domain_error);
    CHECK_THROWS_AS(rwa_green(Vec3::Zero(), cplx(1.0, 0.0)), std::domain_error);
}

TEST_CASE("rwa_green shares the imaginary part of the full kernel") {
    const ScatterScenario sc;
    for (int i = 0; i < 8; ++i) {
        const double rn = 0.1 * std::pow(500.0, i / 7.0);  // 0.1 d .. 50 d
        const Vec3 r = rn * sc.lattice_d * direction(i);
        for (int jk = 0; jk < 5; ++jk) {
            const double k = 0.1 * std::pow(100.0, jk / 4.0) * sc.recip();  // 0.1 .. 10
            const CMat3 g = dyadic_green(r, cplx(k, 0.0));
            const CMat3 kp = rwa_green(r, cplx(k, 0.0));
            const double scale = g.imag().cwiseAbs().maxCoeff();
            CHECK((kp.imag() - g.imag()).cwiseAbs().maxCoeff() <= 1e-10 * scale);
            CHECK(max_abs(kp - kp.transpose().eval()) <= 1e-12 * max_abs(kp));
            // the correction is purely real
            CHECK((kp - g).imag().cwiseAbs().maxCoeff() <= 1e-12 * scale);
        }
    }
}

TEST_CASE("rwa_green matches the explicit exponential-integral correction") {
    for (int i = 0; i < 3; ++i) {
        const double rn = std::vector<double>{0.3, 1.7, 23.0}[i];
        const double k = std::vector<double>{7.3, 1.9, 0.23}[i];
        const Vec3 rhat = direction(i + 3);
        const Vec3 r = rn * rhat;
        const double x = k * rn;
        const double c = -1.0 / (4.0 * pi * pi * k * rn * rn);
        const Mat3 id = Mat3::Identity();
        const Mat3 rr = rhat * rhat.transpose();
        const Mat3 corr = c * (exp_integral(2, x) * (id - rr) +
                               (exp_integral(1, x) + exp_integral(0, x)) * (id - 3.0 * rr));
        const CMat3 want = dyadic_green(r, cplx(k, 0.0)) + corr.cast<cplx>();
        const CMat3 got = rwa_green(r, cplx(k, 0.0));
        CHECK(max_abs(got - want) <= 1e-10 * max_abs(got));
    }
}

TEST_CASE("vacuum_decay reproduces the cubic free-space rate") {
    ScatterScenario sc;
    sc.mix_a = cplx(1.0, 0.0);  // |A| = 1
    CHECK(vacuum_decay(sc, Branch::a, 1.0) == doctest::Approx(1.0 / (3.0 * pi)).epsilon(1e-12));
    CHECK(vacuum_decay(sc, Branch::b, 1.0) == 0.0);  // |B|^2 = 0
    CHECK(vacuum_decay(sc, Branch::a, 2.0) ==
          doctest::Approx(8.0 / (3.0 * pi)).epsilon(1e-12));

    sc.mix_a = cplx(0.0, 0.0);  // |A| = 0
    CHECK(vacuum_decay(sc, Branch::a, 1.0) == 0.0);

    sc.mix_a = cplx(0.6, 0.0);
    sc.dip_a = 1.7;
    const double k = 0.9;
    CHECK(vacuum_decay(sc, Branch::a, k) ==
          doctest::Approx(0.36 * 1.7 * 1.7 * k * k * k / (3.0 * pi)).epsilon(1e-12));

    CHECK_THROWS_AS(vacuum_decay(sc, Branch::a, 0.0), ConfigError);
}

TEST_CASE("vacuum_decay agrees with the small-r kernel limit") {
    ScatterScenario sc;
    sc.mix_a = cplx(1.0, 0.0);
    const double k = 1.0;
    const CMat3 g = dyadic_green(1e-5 * direction(1), cplx(k, 0.0));
    const double from_kernel = -2.0 * k * k * g(1, 1).imag();
    CHECK(vacuum_decay(sc, Branch::a, k) == doctest::Approx(from_kernel).epsilon(1e-4));
}

TEST_CASE("rho_d_site composes mixing, dipole, and kernel") {
    ScatterScenario sc = sample_scenario();
    const Resonance res = make_resonance(sc, 0.4 * sc.recip());
    const Vec3 r = 1.7 * direction(4);

    for (bool rwa : {false, true}) {
        sc.rwa = rwa;
        for (Branch sigma : {Branch::a, Branch::b}) {
            const cplx k = res.k(sigma);
            const double amp = std::norm(sc.mix(sigma)) * sc.dipole(sigma) * sc.dipole(sigma);
            const CMat3 kernel = rwa ? rwa_green(r, k) : dyadic_green(r, k);
            const CMat3 want = k * k * amp * kernel;
            const CMat3 got = rho_d_site(sc, res, sigma, r);
            CAPTURE(rwa);
            CHECK(max_abs(got - want) <= 1e-12 * max_abs(want));
            CHECK(max_abs(got - got.transpose().eval()) <= 1e-12 * max_abs(got));
        }
    }

    sc.rwa = false;
    sc.mix_a = cplx(1.0, 0.0);  // |A| = 1: the idler branch carries no weight
    CHECK(max_abs(rho_d_site(sc, res, Branch::b, r)) == 0.0);
}

TEST_CASE("im_rho_p_closed vanishes outside every light cone") {
    ScatterScenario sc;
    sc.eta = 1e-8 * sc.recip();
    const Resonance res = make_resonance(sc, 0.3 * sc.recip());
    const Mat3 im = im_rho_p_closed(sc, res, Vec2(0.6, 0.0) * sc.recip());
    CHECK(max_abs(im) == 0.0);
}

TEST_CASE("im_rho_p_closed matches the light-cone delta rule") {
    const ScatterScenario sc = sample_scenario();
    const std::vector<double> omegas = {0.37, 0.83, 1.41};
    const std::vector<Vec2> kpars = {Vec2(0.21, -0.13), Vec2(0.0, 0.0), Vec2(0.33, 0.27)};
    for (double w : omegas) {
        for (const Vec2& kp : kpars) {
            const Resonance res = make_resonance(sc, w * sc.recip());
            const Vec2 k_par = kp * sc.recip();
            const Mat3 got = im_rho_p_closed(sc, res, k_par);
            const Mat3 want = delta_rule_damping(sc, res, k_par, Branch::a);
            CAPTURE(w);
            CHECK(max_abs(got - want) <= 1e-6 * max_abs(want));
        }
    }
}

TEST_CASE("im_rho_p_closed is additive over a disjoint mode partition") {
    const ScatterScenario sc = sample_scenario();
    const Resonance res = make_resonance(sc, 1.3 * sc.recip());
    const Vec2 k_par = Vec2(0.11, 0.07) * sc.recip();

    const auto inner = [](const GIndex& g) { return std::max(std::abs(g.x()), std::abs(g.y())) <= 1; };
    const auto outer = [&](const GIndex& g) { return !inner(g); };

    const Mat3 all = im_rho_p_closed(sc, res, k_par);
    const Mat3 split = im_rho_p_closed(sc, res, k_par, Branch::a, inner) +
                       im_rho_p_closed(sc, res, k_par, Branch::a, outer);
    CHECK(max_abs(all - split) <= 1e-12 * max_abs(all));
}

TEST_CASE("branch_damping is negative semidefinite") {
    const ScatterScenario sc = sample_scenario();
    const Resonance res = make_resonance(sc, 1.1 * sc.recip());
    for (Branch sigma : {Branch::a, Branch::b}) {
        const Mat3 d = branch_damping(sc, res, sigma, Vec2(0.2, 0.1) * sc.recip());
        const Eigen::SelfAdjointEigenSolver<Mat3> es(d);
        CHECK(es.eigenvalues().maxCoeff() <= 1e-12 * max_abs(d));
    }
}

TEST_CASE("im_rho_p_closed diverges as the inverse square root of the cone distance") {
    ScatterScenario sc;
    sc.delta_omega = 1.5 * sc.recip();
    sc.eta = 1e-10 * sc.recip();

    // idler |g| = 2 orders turn critical at omega = 0.5: approach from above
    std::vector<double> lx, ly;
    for (double ex = -3.0; ex >= -5.0; ex -= 0.5) {
        const double x = std::pow(10.0, ex);
        const Resonance res = make_resonance(sc, 0.5 * (1.0 + x) * sc.recip());
        const Mat3 im = im_rho_p_closed(sc, res, Vec2::Zero());
        lx.push_back(std::log(x));
        ly.push_back(std::log(std::abs(im(1, 1))));
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = double(lx.size());
    for (std::size_t i = 0; i < lx.size(); ++i) {
        sx += lx[i];
        sy += ly[i];
        sxx += lx[i] * lx[i];
        sxy += lx[i] * ly[i];
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope > -0.55);
    CHECK(slope < -0.45);
}

TEST_CASE("re_rho_p_lattice is reciprocal-lattice periodic") {
    ScatterScenario sc;
    sc.delta_omega = 0.3 * sc.recip();
    const Resonance res = make_resonance(sc, 0.4 * sc.recip());
    const Vec2 k_par = Vec2(0.13, -0.07) * sc.recip();

    LatticeSumDiagnostics diag;
    const Mat3 base = re_rho_p_lattice(sc, res, k_par, Branch::a, &diag);
    CHECK(diag.converged);
    const Mat3 shifted = re_rho_p_lattice(sc, res, k_par + g_vec(sc, GIndex(1, 1)), Branch::a);
    CHECK(max_abs(base - shifted) <= 1e-6 * max_abs(base));
}

TEST_CASE("re_rho_p_lattice is even in k_par without a drive grating") {
    ScatterScenario sc;
    const Resonance res = make_resonance(sc, 0.35 * sc.recip());
    const Vec2 k_par = Vec2(0.17, 0.06) * sc.recip();
    const Mat3 plus = re_rho_p_lattice(sc, res, k_par);
    const Mat3 minus = re_rho_p_lattice(sc, res, -k_par);
    CHECK(max_abs(plus - minus) <= 1e-10 * max_abs(plus));
}

TEST_CASE("re_rho_p_lattice converges under radius doubling") {
    ScatterScenario sc;
    sc.delta_omega = 0.45 * sc.recip();
    const Resonance res = make_resonance(sc, 0.27 * sc.recip());
    const Vec2 k_par = Vec2(0.09, 0.04) * sc.recip();

    ScatterScenario tight = sc;
    tight.lattice_r_max = 100.0 * sc.lattice_d;
    ScatterScenario wide = sc;
    wide.lattice_r_max = 200.0 * sc.lattice_d;

    LatticeSumDiagnostics d1, d2;
    const Mat3 a = re_rho_p_lattice(tight, res, k_par, Branch::a, &d1);
    const Mat3 b = re_rho_p_lattice(wide, res, k_par, Branch::a, &d2);
    CHECK(d1.converged);
    CHECK(d2.converged);
    CHECK(max_abs(a - b) <= 1e-4 * max_abs(a));
}

TEST_CASE("self_energy is diagonal at normal incidence without a grating") {
    ScatterScenario sc;
    sc.delta_omega = 0.6 * sc.recip();
    const Resonance res = make_resonance(sc, 0.42 * sc.recip());
    const CMat3 se = self_energy(sc, res, Vec2::Zero());
    const double scale = max_abs(se);
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n)
            if (m != n) CHECK(std::abs(se(m, n)) <= 1e-10 * scale);
    // fourfold symmetry ties the two in-plane directions together
    CHECK(std::abs(se(0, 0) - se(1, 1)) <= 1e-10 * scale);
    CHECK(std::abs(se(0, 0)) > 0.0);
    CHECK(std::abs(se(2, 2)) > 0.0);
}

TEST_CASE("self_energy out-of-plane couplings vanish on the mirror axes") {
    ScatterScenario sc;
    sc.delta_omega = 0.5 * sc.recip();
    const Resonance res = make_resonance(sc, 0.38 * sc.recip());
    for (const Vec2& kp : {Vec2(0.23, 0.0), Vec2(0.0, 0.19)}) {
        const CMat3 se = self_energy(sc, res, kp * sc.recip());
        const double scale = max_abs(se);
        CHECK(std::abs(se(0, 2)) <= 1e-10 * scale);
        CHECK(std::abs(se(2, 0)) <= 1e-10 * scale);
        CHECK(std::abs(se(1, 2)) <= 1e-10 * scale);
        CHECK(std::abs(se(2, 1)) <= 1e-10 * scale);
    }
}

TEST_CASE("self_energy assembles the lattice real part and closed imaginary part") {
    const ScatterScenario sc = sample_scenario();
    const Resonance res = make_resonance(sc, 0.53 * sc.recip());
    const Vec2 k_par = Vec2(0.12, 0.05) * sc.recip();

    const CMat3 se = self_energy(sc, res, k_par);
    const Mat3 re = re_rho_p_lattice(sc, res, k_par);
    const Mat3 im = im_rho_p_closed(sc, res, k_par);
    CHECK(max_abs(se.real() - re) <= 1e-10 * max_abs(se));
    CHECK(max_abs(se.imag() - im) <= 1e-10 * max_abs(se));
}

TEST_CASE("self_energy ignores the idler branch at unit signal weight") {
    ScatterScenario sc = sample_scenario();
    sc.mix_a = cplx(1.0, 0.0);
    const Resonance res1 = make_resonance(sc, 0.44 * sc.recip());
    const CMat3 se1 = self_energy(sc, res1, Vec2(0.1, 0.0) * sc.recip());

    ScatterScenario other = sc;
    other.delta_omega = 1.9 * sc.recip();  // a wildly different idler branch
    other.grating = Vec2(0.4, -0.2) * sc.recip();
    const Resonance res2 = make_resonance(other, 0.44 * sc.recip());
    const CMat3 se2 = self_energy(other, res2, Vec2(0.1, 0.0) * sc.recip());
    CHECK(max_abs(se1 - se2) <= 1e-12 * max_abs(se1));
}

TEST_CASE("self_energy honors the resonant idealization switch") {
    ScatterScenario sc = sample_scenario();
    sc.zero_real_part = true;
    const Resonance res = make_resonance(sc, 0.61 * sc.recip());
    const CMat3 se = self_energy(sc, res, Vec2(0.14, -0.03) * sc.recip());
    CHECK(max_abs(CMat3(se.real().cast<cplx>())) == 0.0);
    CHECK(max_abs(CMat3(se.imag().cast<cplx>())) > 0.0);
}
