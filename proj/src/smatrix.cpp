#include "transducer/smatrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/SVD>

#include "transducer/parallel.hpp"

namespace transducer {
namespace {

constexpr cplx imag_unit(0.0, 1.0);

Vec2 unit_axis(const Vec2& axis, const char* who) {
    const double n = axis.norm();
    if (n == 0.0) throw ConfigError(std::string(who) + ": replacement axis must be nonzero");
    return axis / n;
}

}  // namespace

Vec3 s_polarization(const Vec2& k_par, [[maybe_unused]] double k_perp,
                    const std::optional<Vec2>& axis) {
    const double n = k_par.norm();
    if (n == 0.0) {
        // degenerate plane of incidence: the caller-supplied axis is s itself
        if (!axis)
            throw ConfigError("s_polarization: k_par = 0 requires an explicit in-plane axis");
        const Vec2 dir = unit_axis(*axis, "s_polarization");
        return Vec3(dir.x(), dir.y(), 0.0);
    }
    const Vec2 dir = k_par / n;
    return Vec3(-dir.y(), dir.x(), 0.0);  // z x k_par_hat
}

Vec3 p_polarization(const Vec2& k_par, double k_perp, const std::optional<Vec2>& axis) {
    const Vec3 s = s_polarization(k_par, k_perp, axis);
    Vec3 k(k_par.x(), k_par.y(), k_perp);
    const double kn = k.norm();
    if (kn == 0.0) throw ConfigError("p_polarization: zero wavevector");
    return ((k / kn).cross(s)).normalized();
}

cplx coupling_vertex(const ScatterScenario& sc, const PlaneWave& wave, int axis, Branch sigma) {
    if (axis < 0 || axis > 2)
        throw ConfigError("coupling_vertex: axis must be 0 (x), 1 (y), or 2 (z)");
    if (!(wave.omega > 0.0))
        throw ConfigError("coupling_vertex: wave frequency must be positive");
    return sc.dipole(sigma) * wave.pol(axis) * std::sqrt(0.5 * wave.omega);
}

namespace {

// Shared state of one scattering evaluation: the inverted collective
// propagator applied to the incoming coupling vector.
struct Propagator {
    Resonance res;
    CMat3 m = CMat3::Zero();  // (rho I - rho P)^{-1}
    CVec3 mv = CVec3::Zero(); // m * (incoming coupling vector)
    double k_perp_in = 0.0;
    double cond = 0.0;
};

Propagator build_propagator(const ScatterScenario& sc, const PlaneWave& incoming) {
    sc.validate();
    if (!(incoming.omega > 0.0))
        throw ConfigError("scatter: incoming frequency must be positive");
    if (std::abs(incoming.k_perp.imag()) > 1e-12 * incoming.omega ||
        std::abs(incoming.k_perp.real()) <= sc.crit_tol_eff())
        throw ConfigError("scatter: incoming wave must be radiant (real, nonzero k_perp)");
    Propagator pr;
    pr.res = make_resonance(sc, incoming.omega);
    const CMat3 rho_p = self_energy(sc, pr.res, incoming.k_par, Branch::a);
    const CMat3 a_mat = pr.res.rho * CMat3::Identity() - rho_p;
    const Eigen::JacobiSVD<CMat3> svd(a_mat);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(2);
    pr.cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(pr.cond <= 1e12))
        throw IllConditionedError(
            "scatter: rho I - rho P is ill-conditioned (exact criticality; nudge eta or omega)",
            pr.cond);
    pr.m = a_mat.inverse();
    pr.mv = pr.m * (sc.dip_a * std::sqrt(0.5 * incoming.omega) * incoming.pol);
    pr.k_perp_in = std::abs(incoming.k_perp.real());
    return pr;
}

// Closed-form idler efficiency: the damping matrix of the idler branch
// contracted between M v and its conjugate, flux-normalized to the incoming
// wave. An optional diffraction-order filter restricts the damping sum.
double closed_form_b(const ScatterScenario& sc, const PlaneWave& incoming, const Propagator& pr,
                     const GFilter& filter) {
    const Vec2 q_b = incoming.k_par + sc.branch_shift(Branch::b);
    const Mat3 damping = branch_damping(sc, pr.res, Branch::b, q_b, filter);
    const cplx quad = pr.mv.dot((-2.0 * damping).cast<cplx>() * pr.mv);
    const double d2 = sc.lattice_d * sc.lattice_d;
    return std::norm(sc.mix_a) * incoming.omega / (pr.k_perp_in * d2) * quad.real();
}

}  // namespace

ScatteringResult scatter(const ScatterScenario& sc, const PlaneWave& incoming) {
    const Propagator pr = build_propagator(sc, incoming);
    ScatteringResult out;
    out.inverse_propagator = pr.m;
    const int fwd_sign = incoming.k_perp.real() > 0.0 ? +1 : -1;
    const double d2 = sc.lattice_d * sc.lattice_d;
    const double omega_in = incoming.omega;
    for (Branch sigma : {Branch::a, Branch::b}) {
        const cplx chi = sigma == Branch::a ? cplx(std::norm(sc.mix_a), 0.0)
                                            : std::conj(sc.mix_a) * sc.mix_b();
        const Vec2 q_base = incoming.k_par + sc.branch_shift(sigma);
        const double omega_out = pr.res.omega(sigma);
        // pr.mv already carries the incoming vertex; only the outgoing one here
        const cplx common = -imag_unit / d2 * chi * sc.dipole(sigma) *
                            std::sqrt(0.5 * omega_out) * omega_out;
        for (const DiffractionChannel& ch : diffraction_channels(sc, pr.res, sigma, q_base)) {
            if (ch.mode.cls == ModeClass::evanescent) continue;
            // flux bookkeeping: outgoing normal flux over incoming normal flux
            const double flux =
                (1.0 / ch.inv_k_perp).real() * omega_in / (omega_out * pr.k_perp_in);
            for (const char pol_label : {'s', 'p'}) {
                const Vec3& pol = pol_label == 's' ? ch.pol_s : ch.pol_p;
                cplx amp = common * ch.inv_k_perp * pol.cast<cplx>().dot(pr.mv);
                if (sigma == Branch::a && ch.mode.g.x() == 0 && ch.mode.g.y() == 0 &&
                    ch.mode.sign == fwd_sign)
                    amp += pol.cast<cplx>().dot(incoming.pol);  // identity, projected
                ModeAmplitude row;
                row.mode = ch.mode;
                row.polarization = pol_label;
                row.amplitude = amp;
                row.probability = std::norm(amp) * flux;
                if (sigma == Branch::b) out.efficiency_total_b += row.probability;
                out.per_mode.push_back(std::move(row));
            }
        }
    }
    out.efficiency_survive_a = 1.0 - closed_form_b(sc, incoming, pr, {});
    return out;
}

double efficiency_total(const ScatterScenario& sc, const PlaneWave& incoming) {
    const Propagator pr = build_propagator(sc, incoming);
    return closed_form_b(sc, incoming, pr, {});
}

double efficiency_projected(const ScatterScenario& sc, const PlaneWave& incoming,
                            const GFilter& filter) {
    const Propagator pr = build_propagator(sc, incoming);
    return closed_form_b(sc, incoming, pr, filter);
}

MixingOptimum optimize_mixing(const ScatterScenario& sc, const PlaneWave& incoming) {
    sc.validate();
    const auto eval = [&](double abs_a) {
        ScatterScenario s2 = sc;
        s2.mix_a = cplx(abs_a, 0.0);
        return efficiency_total(s2, incoming);
    };
    double best_a = 0.0;
    double best_e = -1.0;
    for (int i = 0; i <= 100; ++i) {
        const double a = i / 100.0;
        const double e = eval(a);
        if (e > best_e) {
            best_e = e;
            best_a = a;
        }
    }
    double lo = std::max(0.0, best_a - 0.01);
    double hi = std::min(1.0, best_a + 0.01);
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = hi - gr * (hi - lo);
    double x2 = lo + gr * (hi - lo);
    double f1 = eval(x1);
    double f2 = eval(x2);
    while (hi - lo > 1e-4) {
        if (f1 < f2) {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + gr * (hi - lo);
            f2 = eval(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - gr * (hi - lo);
            f1 = eval(x1);
        }
    }
    const double a_star = 0.5 * (lo + hi);
    return {a_star, eval(a_star)};
}

namespace {

PlaneWave sweep_wave(double omega, double angle, const SweepOptions& opt) {
    if (!(omega > 0.0))
        throw ConfigError("sweep: omega_in must be positive (set options.omega_in)");
    if (!(angle >= 0.0 && angle < 0.5 * pi))
        throw ConfigError("sweep: angle must lie in [0, pi/2)");
    const double n = opt.direction.norm();
    Vec2 u(1.0, 0.0);
    if (n > 0.0)
        u = opt.direction / n;
    else if (angle != 0.0)
        throw ConfigError("sweep: in-plane direction must be nonzero at oblique incidence");
    const Vec2 k_par = omega * std::sin(angle) * u;
    const double k_perp = omega * std::cos(angle);
    const Vec2 s_axis(-u.y(), u.x());  // angle -> 0 limit of z x k_par_hat
    CVec3 pol;
    switch (opt.polarization) {
        case SweepPol::s: pol = s_polarization(k_par, k_perp, s_axis).cast<cplx>(); break;
        case SweepPol::p: pol = p_polarization(k_par, k_perp, s_axis).cast<cplx>(); break;
        default: pol = opt.custom_pol; break;
    }
    return make_plane_wave(k_par, cplx(k_perp, 0.0), pol);
}

}  // namespace

std::vector<SweepRow> sweep(const ScatterScenario& sc, SweepAxis axis,
                            const std::vector<double>& grid, const SweepOptions& opt) {
    sc.validate();
    std::vector<SweepRow> rows(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        SweepRow& row = rows[i];
        row.x = grid[i];
        try {
            ScatterScenario s2 = sc;
            if (opt.zero_real_part) s2.zero_real_part = true;
            double omega = opt.omega_in;
            double angle = opt.angle;
            if (axis == SweepAxis::omega_in) {
                omega = row.x;
            } else if (axis == SweepAxis::angle) {
                angle = row.x;
            } else {
                if (!(row.x >= 0.0 && row.x <= 1.0))
                    throw ConfigError("sweep: |A|^2 grid value outside [0, 1]");
                s2.mix_a = cplx(std::sqrt(row.x), 0.0);
            }
            const PlaneWave wave = sweep_wave(omega, angle, opt);
            if (opt.optimize_a) {
                const MixingOptimum best = optimize_mixing(s2, wave);
                s2.mix_a = cplx(best.abs_a, 0.0);
            }
            row.abs_a = std::abs(s2.mix_a);
            const ScatteringResult res = scatter(s2, wave);
            row.efficiency = res.efficiency_total_b;
            row.survival = res.efficiency_survive_a;
            if (opt.g_filter) row.projected = efficiency_projected(s2, wave, opt.g_filter);
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });
    return rows;
}

}  // namespace transducer
