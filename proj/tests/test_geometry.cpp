#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "transducer/geometry.hpp"

using namespace transducer;

namespace {

ScatterScenario base_scenario() {
    ScatterScenario sc;
    sc.lattice_d = 1.0;
    return sc;
}

}  // namespace

TEST_CASE("reciprocal_vectors enumerates the square block row-major") {
    CHECK(reciprocal_vectors(0).size() == 1);
    CHECK(reciprocal_vectors(0)[0] == GIndex(0, 0));

    const auto r1 = reciprocal_vectors(1);
    REQUIRE(r1.size() == 9);
    CHECK(r1.front() == GIndex(-1, -1));
    CHECK(r1.back() == GIndex(1, 1));
    CHECK(r1[1] == GIndex(-1, 0));  // inner index (n) fastest

    const auto r3 = reciprocal_vectors(3);
    REQUIRE(r3.size() == 49);
    for (const GIndex& g : {GIndex(3, 0), GIndex(-3, 0), GIndex(0, 3), GIndex(0, -3)})
        CHECK(std::count(r3.begin(), r3.end(), g) == 1);

    CHECK_THROWS_AS(reciprocal_vectors(-1), ConfigError);
}

TEST_CASE("make_plane_wave derives omega and validates transversality") {
    const PlaneWave w = make_plane_wave(Vec2(0.3, 0.0), cplx(0.4, 0.0), CVec3(0.0, 1.0, 0.0));
    CHECK(w.omega == doctest::Approx(0.5).epsilon(1e-14));

    // non-unit polarization
    CHECK_THROWS_AS(make_plane_wave(Vec2(0.3, 0.0), cplx(0.4, 0.0), CVec3(0.0, 2.0, 0.0)),
                    ConfigError);
    // longitudinal polarization
    CHECK_THROWS_AS(make_plane_wave(Vec2(1.0, 0.0), cplx(0.0, 0.0), CVec3(1.0, 0.0, 0.0)),
                    ConfigError);
}

TEST_CASE("incident_wave builds the oblique wavevector") {
    const double deg30 = pi / 6.0;
    const PlaneWave w = incident_wave(2.0, Vec2(1.0, 0.0), deg30, CVec3(0.0, 1.0, 0.0));
    CHECK(w.k_par.x() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(w.k_par.y() == 0.0);
    CHECK(w.k_perp.real() == doctest::Approx(std::sqrt(3.0)).epsilon(1e-12));
    CHECK(w.k_perp.imag() == 0.0);
    CHECK(w.omega == doctest::Approx(2.0).epsilon(1e-12));

    const PlaneWave n = incident_wave(0.7, Vec2(0.0, 1.0), 0.0, CVec3(1.0, 0.0, 0.0));
    CHECK(n.k_par.norm() == 0.0);
    CHECK(n.k_perp.real() == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("outgoing_wavevector classifies the textbook orders") {
    ScatterScenario sc = base_scenario();
    const double rec = sc.recip();
    const double omega = 3.0 * rec;

    // specular orders stay radiant with |k_perp| = omega at normal incidence
    for (int sign : {+1, -1}) {
        const ModeIndex m = outgoing_wavevector(sc, Vec2::Zero(), omega, GIndex(0, 0), sign,
                                                Branch::a);
        CHECK(m.cls == ModeClass::radiant);
        CHECK(m.k_out.k_perp.imag() == 0.0);
        CHECK(m.k_out.k_perp.real() == doctest::Approx(sign * omega).epsilon(1e-12));
        CHECK(m.k_out.omega == doctest::Approx(omega).epsilon(1e-12));
    }

    // |k_par + g| = omega exactly: critical
    const ModeIndex crit = outgoing_wavevector(sc, Vec2::Zero(), omega, GIndex(3, 0), +1,
                                               Branch::a);
    CHECK(crit.cls == ModeClass::critical);
    CHECK(std::abs(crit.k_out.k_perp) <= 1e-3 * omega);

    // beyond the light cone: evanescent, k_perp on the +i branch
    const ModeIndex ev = outgoing_wavevector(sc, Vec2::Zero(), omega, GIndex(4, 0), +1,
                                             Branch::a);
    CHECK(ev.cls == ModeClass::evanescent);
    CHECK(ev.k_out.k_perp.real() == 0.0);
    CHECK(ev.k_out.k_perp.imag() ==
          doctest::Approx(std::sqrt(16.0 - 9.0) * rec).epsilon(1e-12));
}

TEST_CASE("outgoing_wavevector applies the idler shift and drive grating") {
    ScatterScenario sc = base_scenario();
    sc.delta_omega = 1.5 * sc.recip();
    sc.grating = Vec2(0.25, -0.1) * sc.recip();
    const Vec2 k_in(0.11 * sc.recip(), 0.07 * sc.recip());
    const double omega = 0.5 * sc.recip();

    const ModeIndex mb = outgoing_wavevector(sc, k_in, omega, GIndex(1, -2), +1, Branch::b);
    const Vec2 want = k_in + g_vec(sc, GIndex(1, -2)) + sc.grating;
    CHECK((mb.k_out.k_par - want).norm() <= 1e-12 * sc.recip());
    CHECK(mb.k_out.omega == doctest::Approx(omega + sc.delta_omega).epsilon(1e-12));

    // the signal branch ignores the grating
    const ModeIndex ma = outgoing_wavevector(sc, k_in, omega, GIndex(1, -2), +1, Branch::a);
    const Vec2 want_a = k_in + g_vec(sc, GIndex(1, -2));
    CHECK((ma.k_out.k_par - want_a).norm() <= 1e-12 * sc.recip());
    CHECK(ma.k_out.omega == doctest::Approx(omega).epsilon(1e-12));

    // idler turning critical at |k_par + g| = omega + delta_omega
    sc.grating = Vec2::Zero();
    const ModeIndex bc = outgoing_wavevector(sc, Vec2::Zero(), 0.5 * sc.recip(), GIndex(2, 0),
                                             +1, Branch::b);
    CHECK(bc.cls == ModeClass::critical);
}

TEST_CASE("outgoing_wavevector satisfies the dispersion relation") {
    ScatterScenario sc = base_scenario();
    sc.delta_omega = 0.8 * sc.recip();
    sc.grating = Vec2(0.3, 0.15) * sc.recip();
    std::mt19937 rng(321);
    std::uniform_real_distribution<double> uw(0.05, 3.0), ux(-1.0, 1.0);
    std::uniform_int_distribution<int> ug(-4, 4), us(0, 1), ub(0, 1);

    for (int trial = 0; trial < 200; ++trial) {
        const double omega = uw(rng) * sc.recip();
        const Vec2 k_in = 0.4 * omega * Vec2(ux(rng), ux(rng));
        const GIndex g(ug(rng), ug(rng));
        const int sign = us(rng) ? +1 : -1;
        const Branch br = ub(rng) ? Branch::b : Branch::a;
        const ModeIndex m = outgoing_wavevector(sc, k_in, omega, g, sign, br);

        const double w = m.k_out.omega;
        const cplx kp = m.k_out.k_perp;
        const double disp =
            std::abs(kp * kp + cplx(m.k_out.k_par.squaredNorm(), 0.0) - cplx(w * w, 0.0));
        CHECK(disp <= 1e-10 * w * w);

        const int classes = (m.cls == ModeClass::radiant) + (m.cls == ModeClass::evanescent) +
                            (m.cls == ModeClass::critical);
        CHECK(classes == 1);
        if (m.cls == ModeClass::radiant) {
            CHECK(kp.imag() == 0.0);
            CHECK(kp.real() * sign > 0.0);
        } else if (m.cls == ModeClass::evanescent) {
            CHECK(kp.real() == 0.0);
            CHECK(kp.imag() > 0.0);
        }
    }
}

TEST_CASE("outgoing_wavevector is invariant under a g-compensated k_par shift") {
    ScatterScenario sc = base_scenario();
    sc.delta_omega = 0.6 * sc.recip();
    const double omega = 0.45 * sc.recip();
    const Vec2 k_in(0.12 * sc.recip(), -0.05 * sc.recip());
    const GIndex g(2, -1), g0(1, 1);

    const ModeIndex m1 = outgoing_wavevector(sc, k_in, omega, g, +1, Branch::b);
    const ModeIndex m2 =
        outgoing_wavevector(sc, k_in + g_vec(sc, g0), omega, GIndex(g - g0), +1, Branch::b);
    CHECK((m1.k_out.k_par - m2.k_out.k_par).norm() <= 1e-9 * sc.recip());
    CHECK(std::abs(m1.k_out.k_perp - m2.k_out.k_perp) <= 1e-9 * sc.recip());
    CHECK(m1.cls == m2.cls);
}

TEST_CASE("cooperativity_threshold reproduces the closed-form angles") {
    const ScatterScenario sc = base_scenario();
    const double rec = sc.recip();

    // normal incidence: first order turns radiant at omega = 2 pi / d
    CHECK(cooperativity_threshold(sc, Vec2(1.0, 0.0), 0.0) == doctest::Approx(rec).epsilon(1e-9));
    CHECK(cooperativity_threshold(sc, Vec2(0.37, -0.91), 0.0) ==
          doctest::Approx(rec).epsilon(1e-9));

    // 30 degrees along a lattice axis: (1 + sin)|omega| = recip
    const double deg30 = pi / 6.0;
    CHECK(cooperativity_threshold(sc, Vec2(1.0, 0.0), deg30) ==
          doctest::Approx(2.0 / 3.0 * rec).epsilon(1e-9));

    // 30 degrees along the diagonal
    const double want = std::sqrt(2.0) / 3.0 * (std::sqrt(7.0) - 1.0) * rec;
    CHECK(cooperativity_threshold(sc, Vec2(1.0, 1.0), deg30) ==
          doctest::Approx(want).epsilon(1e-9));
}

TEST_CASE("find_critical_frequencies resolves the normal-incidence idler crossings") {
    ScatterScenario sc = base_scenario();
    sc.delta_omega = 1.5 * sc.recip();
    const double rec = sc.recip();

    const auto pts = find_critical_frequencies(sc, Vec2(1.0, 0.0), 0.0, 0.05 * rec, 0.95 * rec);
    REQUIRE(pts.size() == 12);

    // omega = 0.5: |g| = 2 four-fold degenerate
    for (int i = 0; i < 4; ++i) {
        CHECK(pts[i].omega == doctest::Approx(0.5 * rec).epsilon(1e-6));
        CHECK(pts[i].g.cast<double>().norm() == doctest::Approx(2.0).epsilon(1e-12));
    }
    // omega = sqrt(5) - 3/2: |g| = sqrt(5) eight-fold degenerate
    const double second = (std::sqrt(5.0) - 1.5) * rec;
    for (int i = 4; i < 12; ++i) {
        CHECK(pts[i].omega == doctest::Approx(second).epsilon(1e-6));
        CHECK(pts[i].g.cast<double>().norm() == doctest::Approx(std::sqrt(5.0)).epsilon(1e-12));
    }

    // every root satisfies the defining light-cone equation
    for (const auto& p : pts) {
        const double lhs = p.omega + sc.delta_omega;
        const double rhs = g_vec(sc, p.g).norm();  // normal incidence: k_par = 0
        CHECK(std::abs(lhs - rhs) <= 1e-9 * rec);
    }

    for (std::size_t i = 0; i + 1 < pts.size(); ++i)
        CHECK(pts[i].omega <= pts[i + 1].omega + 1e-12 * rec);
}

TEST_CASE("find_critical_frequencies at oblique incidence") {
    ScatterScenario sc = base_scenario();
    sc.delta_omega = 3.0 * sc.recip();
    const double rec = sc.recip();
    const double deg30 = pi / 6.0;

    const auto pts =
        find_critical_frequencies(sc, Vec2(1.0, 0.0), deg30, 0.28 * rec, 0.34 * rec);
    REQUIRE(pts.size() == 2);
    // (omega + 3)^2 = (omega/2 + 3)^2 + 1 --> omega = (4 sqrt(3) - 6)/3
    const double want = (4.0 * std::sqrt(3.0) - 6.0) / 3.0 * rec;
    CHECK(pts[0].omega == doctest::Approx(want).epsilon(1e-8));
    CHECK(pts[1].omega == doctest::Approx(want).epsilon(1e-8));
    CHECK(pts[0].g == GIndex(3, 1));  // degenerate pair listed +n first
    CHECK(pts[1].g == GIndex(3, -1));
}

TEST_CASE("find_critical_frequencies sees the drive grating") {
    ScatterScenario sc = base_scenario();
    sc.grating = Vec2(0.5, 0.0) * sc.recip();
    const double rec = sc.recip();

    // specular idler order g = 0 turns critical where omega = |grating|
    const auto pts = find_critical_frequencies(sc, Vec2(1.0, 0.0), 0.0, 0.05 * rec, 0.95 * rec);
    bool specular = false;
    for (const auto& p : pts)
        if (p.g == GIndex(0, 0)) {
            specular = true;
            CHECK(p.omega == doctest::Approx(0.5 * rec).epsilon(1e-8));
        }
    CHECK(specular);
}

TEST_CASE("find_critical_frequencies returns empty when no order crosses") {
    ScatterScenario sc = base_scenario();  // delta_omega = 0, no grating
    const double rec = sc.recip();
    const auto pts = find_critical_frequencies(sc, Vec2(1.0, 0.0), 0.0, 0.05 * rec, 0.2 * rec);
    CHECK(pts.empty());
}
