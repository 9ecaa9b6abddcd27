#include <cmath>
#include <random>
#include <vector>

#include <doctest.h>

#include "transducer/smatrix.hpp"

using namespace transducer;

namespace {

// unit-test scenarios keep the lattice sums short; identities under test do
// not depend on the extrapolation depth
ScatterScenario fast_scenario() {
    ScatterScenario sc;
    sc.lattice_max_doublings = 3;
    return sc;
}

// mirror of the per-mode basis used by the scatterer: s/p in the mode's own
// plane of incidence, (x, y) at normal outgoing direction
Vec3 mode_polarization(const ModeAmplitude& row) {
    const Vec2 k_par = row.mode.k_out.k_par;
    const double k_perp = row.mode.k_out.k_perp.real();
    std::optional<Vec2> axis;
    if (k_par.norm() <= 1e-12 * row.mode.k_out.omega) axis = Vec2(1.0, 0.0);
    return row.polarization == 's' ? s_polarization(k_par, k_perp, axis)
                                   : p_polarization(k_par, k_perp, axis);
}

PlaneWave oblique_wave(double omega, double angle_deg, const Vec2& direction, bool p_pol) {
    const Vec2 u = direction.normalized();
    const double angle = angle_deg * pi / 180.0;
    const Vec2 k_par = omega * std::sin(angle) * u;
    const double k_perp = omega * std::cos(angle);
    const Vec2 s_axis(-u.y(), u.x());
    const Vec3 pol = p_pol ? p_polarization(k_par, k_perp, s_axis)
                           : s_polarization(k_par, k_perp, s_axis);
    return make_plane_wave(k_par, k_perp, pol.cast<cplx>());
}

}  // namespace

TEST_CASE("coupling_vertex projects the polarization and scales as sqrt(omega)") {
    ScatterScenario sc;
    sc.dip_a = 1.0;
    sc.dip_b = 1.3;
    const CVec3 ey = Vec3(0.0, 1.0, 0.0).cast<cplx>();
    const PlaneWave w2 = make_plane_wave(Vec2::Zero(), 2.0, ey);
    CHECK(std::abs(coupling_vertex(sc, w2, 0, Branch::a)) == 0.0);
    CHECK(coupling_vertex(sc, w2, 1, Branch::a).real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(coupling_vertex(sc, w2, 1, Branch::b).real() == doctest::Approx(1.3).epsilon(1e-12));

    const PlaneWave w8 = make_plane_wave(Vec2::Zero(), 8.0, ey);
    CHECK(std::abs(coupling_vertex(sc, w8, 1, Branch::a)) ==
          doctest::Approx(2.0 * std::abs(coupling_vertex(sc, w2, 1, Branch::a))).epsilon(1e-12));
}

TEST_CASE("s and p polarizations form a transverse basis") {
    const double omega = 1.0;
    const Vec2 k_par(omega * 0.5, 0.0);  // 30 degrees in the x-z plane
    const double k_perp = omega * std::sqrt(3.0) / 2.0;

    const Vec3 s = s_polarization(k_par, k_perp);
    const Vec3 p = p_polarization(k_par, k_perp);
    CHECK((s - Vec3(0.0, 1.0, 0.0)).norm() <= 1e-12);

    const Vec3 k(k_par.x(), k_par.y(), k_perp);
    CHECK(std::abs(s.dot(p)) <= 1e-12);
    CHECK(std::abs(s.dot(k)) <= 1e-12);
    CHECK(std::abs(p.dot(k)) <= 1e-12);
    CHECK(s.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.norm() == doctest::Approx(1.0).epsilon(1e-12));

    // the axis hint only matters at normal incidence
    const Vec3 s_hint = s_polarization(k_par, k_perp, Vec2(0.3, 0.9));
    CHECK((s - s_hint).norm() <= 1e-15);

    const Vec3 s0 = s_polarization(Vec2::Zero(), omega, Vec2(0.0, 1.0));
    CHECK((s0 - Vec3(0.0, 1.0, 0.0)).norm() <= 1e-12);
    const Vec3 p0 = p_polarization(Vec2::Zero(), omega, Vec2(0.0, 1.0));
    CHECK(std::abs(p0.dot(s0)) <= 1e-12);
    CHECK(std::abs(p0.z()) <= 1e-12);

    CHECK_THROWS_AS(s_polarization(Vec2::Zero(), omega), ConfigError);
    CHECK_THROWS_AS(p_polarization(Vec2::Zero(), omega), ConfigError);
}

TEST_CASE("scatter produces no idler weight at the mixing endpoints") {
    ScatterScenario sc = fast_scenario();
    const PlaneWave wave = oblique_wave(0.3 * sc.recip(), 20.0, Vec2(1.0, 0.2), false);
    for (double a : {0.0, 1.0}) {
        sc.mix_a = cplx(a, 0.0);
        const ScatteringResult res = scatter(sc, wave);
        CHECK(res.efficiency_total_b == 0.0);
        CHECK(efficiency_total(sc, wave) == 0.0);
    }
}

TEST_CASE("scatter is unitary with transverse, in-range per-mode rows") {
    std::mt19937 rng(4211);
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    for (int trial = 0; trial < 10; ++trial) {
        ScatterScenario sc = fast_scenario();
        sc.eta = 1e-10 * sc.recip();
        sc.delta_omega = 5.0 * uni(rng) * sc.recip();
        sc.mix_a = cplx(std::sqrt(0.02 + 0.96 * uni(rng)), 0.0);
        const double omega = (0.05 + 2.95 * uni(rng)) * sc.recip();
        const double angle = 1.0 + 59.0 * uni(rng);
        const double phi = two_pi * uni(rng);
        const Vec2 dir(std::cos(phi), std::sin(phi));

        // random transverse polarization: complex mix of s and p
        const Vec2 u = dir.normalized();
        const Vec2 k_par = omega * std::sin(angle * pi / 180.0) * u;
        const double k_perp = omega * std::cos(angle * pi / 180.0);
        const Vec2 s_axis(-u.y(), u.x());
        const Vec3 s = s_polarization(k_par, k_perp, s_axis);
        const Vec3 p = p_polarization(k_par, k_perp, s_axis);
        CVec3 pol = cplx(uni(rng) - 0.5, uni(rng) - 0.5) * s.cast<cplx>() +
                    cplx(uni(rng) - 0.5, uni(rng) - 0.5) * p.cast<cplx>();
        pol /= std::sqrt(pol.squaredNorm());
        const PlaneWave wave = make_plane_wave(k_par, k_perp, pol);

        const ScatteringResult res = scatter(sc, wave);
        double total = 0.0, total_b = 0.0;
        for (const ModeAmplitude& row : res.per_mode) {
            CHECK(row.probability >= 0.0);
            CHECK(row.probability <= 1.0 + 1e-9);
            total += row.probability;
            if (row.mode.branch == Branch::b) total_b += row.probability;

            const Vec3 pol_out = mode_polarization(row);
            const Vec3 k_out(row.mode.k_out.k_par.x(), row.mode.k_out.k_par.y(),
                             row.mode.k_out.k_perp.real());
            CHECK(std::abs(pol_out.dot(k_out)) <= 1e-10 * omega);
        }
        CAPTURE(trial);
        CHECK(std::abs(total - 1.0) <= 1e-6);
        CHECK(std::abs(res.efficiency_total_b + res.efficiency_survive_a - 1.0) <= 1e-6);
        CHECK(std::abs(total_b - res.efficiency_total_b) <= 1e-6);
        if (trial < 3)
            CHECK(efficiency_total(sc, wave) ==
                  doctest::Approx(res.efficiency_total_b).epsilon(1e-8));
    }
}

TEST_CASE("normal-incidence y input only populates modes with a y component") {
    ScatterScenario sc = fast_scenario();
    sc.delta_omega = 2.8 * sc.recip();
    const PlaneWave wave = make_plane_wave(Vec2::Zero(), 0.201 * sc.recip(),
                                           Vec3(0.0, 1.0, 0.0).cast<cplx>());
    const ScatteringResult res = scatter(sc, wave);

    double max_amp = 0.0;
    for (const ModeAmplitude& row : res.per_mode)
        max_amp = std::max(max_amp, std::abs(row.amplitude));
    REQUIRE(max_amp > 0.0);
    int silenced = 0;
    for (const ModeAmplitude& row : res.per_mode) {
        if (std::abs(mode_polarization(row).y()) > 1e-12) continue;
        ++silenced;
        CHECK(std::abs(row.amplitude) <= 1e-10 * max_amp);
    }
    CHECK(silenced > 0);
}

TEST_CASE("efficiency_projected partitions the idler weight") {
    ScatterScenario sc = fast_scenario();
    sc.delta_omega = 2.8 * sc.recip();
    const PlaneWave wave = make_plane_wave(Vec2::Zero(), 0.201 * sc.recip(),
                                           Vec3(0.0, 1.0, 0.0).cast<cplx>());

    const double total = efficiency_total(sc, wave);
    const auto all_pass = [](const GIndex&) { return true; };
    CHECK(efficiency_projected(sc, wave, all_pass) == doctest::Approx(total).epsilon(1e-10));

    const auto inner = [](const GIndex& g) { return g.x() * g.x() + g.y() * g.y() <= 4; };
    const auto outer = [&](const GIndex& g) { return !inner(g); };
    const double split =
        efficiency_projected(sc, wave, inner) + efficiency_projected(sc, wave, outer);
    CHECK(split == doctest::Approx(total).epsilon(1e-10));

    // axis selectivity: the y-polarized drive feeds the (+-3, 0) orders and
    // leaves (0, +-3) empty
    const auto along_x = [](const GIndex& g) { return std::abs(g.x()) == 3 && g.y() == 0; };
    const auto along_y = [](const GIndex& g) { return g.x() == 0 && std::abs(g.y()) == 3; };
    const double px = efficiency_projected(sc, wave, along_x);
    const double py = efficiency_projected(sc, wave, along_y);
    CHECK(px > 0.0);
    CHECK(py < 1e-3 * px);
}

TEST_CASE("below criticality the lower diffraction cone carries everything") {
    ScatterScenario sc = fast_scenario();
    sc.delta_omega = 1.5 * sc.recip();
    const PlaneWave wave = make_plane_wave(Vec2::Zero(), 0.45 * sc.recip(),
                                           Vec3(0.0, 1.0, 0.0).cast<cplx>());
    // omega_b = 1.95 (2 pi / d): only |g|^2 <= 2 orders radiate
    const auto lower = [](const GIndex& g) { return g.x() * g.x() + g.y() * g.y() <= 2; };
    const double total = efficiency_total(sc, wave);
    CHECK(total > 0.0);
    CHECK(efficiency_projected(sc, wave, lower) == doctest::Approx(total).epsilon(1e-8));
}

TEST_CASE("optimize_mixing finds an interior maximum with zero endpoints") {
    ScatterScenario sc = fast_scenario();
    const PlaneWave wave = make_plane_wave(Vec2::Zero(), 0.2 * sc.recip(),
                                           Vec3(0.0, 1.0, 0.0).cast<cplx>());
    const MixingOptimum best = optimize_mixing(sc, wave);
    CHECK(best.abs_a > 0.0);
    CHECK(best.abs_a < 1.0);
    CHECK(best.efficiency == doctest::Approx(0.5).epsilon(0.02));

    ScatterScenario end = sc;
    end.mix_a = cplx(0.0, 0.0);
    CHECK(efficiency_total(end, wave) == 0.0);
    end.mix_a = cplx(1.0, 0.0);
    CHECK(efficiency_total(end, wave) == 0.0);
    CHECK(best.efficiency > 0.2);
}

TEST_CASE("optimal mixing weight moves toward pure signal as the idler hardens") {
    ScatterScenario sc = fast_scenario();
    const PlaneWave wave = make_plane_wave(Vec2::Zero(), 0.2 * sc.recip(),
                                           Vec3(0.0, 1.0, 0.0).cast<cplx>());
    std::vector<double> peaks;
    for (double dw : {0.0, 2.5, 5.0}) {
        sc.delta_omega = dw * sc.recip();
        peaks.push_back(optimize_mixing(sc, wave).abs_a);
    }
    CHECK(peaks[0] < peaks[1]);
    CHECK(peaks[1] < peaks[2]);
}

TEST_CASE("optimum efficiency is insensitive to the dipole-moment ratio") {
    ScatterScenario sc = fast_scenario();
    sc.eta = 1e-6 * sc.recip();  // the insensitivity is a property of the lossless optimum
    const PlaneWave wave = make_plane_wave(Vec2::Zero(), 0.2 * sc.recip(),
                                           Vec3(0.0, 1.0, 0.0).cast<cplx>());
    const double base = optimize_mixing(sc, wave).efficiency;
    sc.dip_a = 2.0;
    sc.dip_b = 0.5;  // ratio moved by a factor of 4 in each direction
    const double skew = optimize_mixing(sc, wave).efficiency;
    CHECK(std::abs(base - skew) < 1e-3);
}

TEST_CASE("frequency sweep dips at the critical crossing and recovers") {
    ScatterScenario sc = fast_scenario();
    sc.delta_omega = 1.5 * sc.recip();

    SweepOptions opt;
    opt.direction = Vec2(1.0, 0.0);
    opt.polarization = SweepPol::s;
    const std::vector<double> grid = {0.49 * sc.recip(), 0.4995 * sc.recip(), 0.53 * sc.recip()};
    const std::vector<SweepRow> rows = sweep(sc, SweepAxis::omega_in, grid, opt);
    REQUIRE(rows.size() == 3);
    for (const SweepRow& r : rows) {
        CHECK(r.error.empty());
        CHECK(std::abs(r.efficiency + r.survival - 1.0) <= 1e-6);
    }
    CHECK(rows[0].x == grid[0]);
    CHECK(rows[1].efficiency < 0.05);
    CHECK(rows[1].efficiency < 0.2 * rows[0].efficiency);
    CHECK(rows[1].efficiency < 0.2 * rows[2].efficiency);
}

TEST_CASE("sweep records per-row errors and keeps going") {
    ScatterScenario sc = fast_scenario();
    SweepOptions opt;
    opt.omega_in = 0.2 * sc.recip();
    opt.polarization = SweepPol::s;
    const std::vector<SweepRow> rows = sweep(sc, SweepAxis::abs_a_sq, {0.25, 1.5}, opt);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].error.empty());
    CHECK(rows[0].efficiency > 0.0);
    CHECK(rows[0].abs_a == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(!rows[1].error.empty());
    CHECK(rows[1].efficiency == 0.0);
}

TEST_CASE("sweep reaches one half exactly when the Hermitian part is dropped") {
    ScatterScenario sc = fast_scenario();
    sc.eta = 1e-6 * sc.recip();
    sc.delta_omega = 1.0 * sc.recip();

    SweepOptions opt;
    opt.polarization = SweepPol::s;
    opt.zero_real_part = true;
    opt.optimize_a = true;
    const std::vector<double> grid = {0.2 * sc.recip(), 0.35 * sc.recip()};
    for (const SweepRow& r : sweep(sc, SweepAxis::omega_in, grid, opt)) {
        CHECK(r.error.empty());
        CHECK(r.efficiency == doctest::Approx(0.5).epsilon(1e-3));
    }
}

TEST_CASE("oblique s-polarized transduction stays below one half") {
    ScatterScenario sc = fast_scenario();
    sc.delta_omega = 3.0 * sc.recip();

    SweepOptions opt;
    opt.direction = Vec2(1.0, 0.0);
    opt.angle = 30.0 * pi / 180.0;
    opt.polarization = SweepPol::s;
    opt.optimize_a = true;

    std::vector<double> grid;
    for (int i = 0; i < 15; ++i) grid.push_back((0.06 + 0.07 * i) * sc.recip());
    for (const SweepRow& r : sweep(sc, SweepAxis::omega_in, grid, opt)) {
        CHECK(r.error.empty());
        CHECK(r.efficiency <= 0.5 + 1e-6);
        CHECK(r.efficiency >= 0.0);
    }
}

TEST_CASE("angle sweep keeps rows independent and unitary") {
    ScatterScenario sc = fast_scenario();
    sc.delta_omega = 0.4 * sc.recip();

    SweepOptions opt;
    opt.omega_in = 0.3 * sc.recip();
    opt.polarization = SweepPol::p;
    const std::vector<double> grid = {0.1, 0.4, 0.8};
    const std::vector<SweepRow> rows = sweep(sc, SweepAxis::angle, grid, opt);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 0; i < rows.size(); ++i) {
        CHECK(rows[i].x == grid[i]);
        CHECK(rows[i].error.empty());
        CHECK(std::abs(rows[i].efficiency + rows[i].survival - 1.0) <= 1e-6);
    }
}
