#include "transducer/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace transducer {
namespace {

Vec2 unit_direction(const Vec2& direction, double angle) {
    const double n = direction.norm();
    if (n < 1e-14) {
        if (angle == 0.0) return Vec2(1.0, 0.0);  // direction is irrelevant at normal incidence
        throw ConfigError("in-plane incidence direction must be nonzero");
    }
    return direction / n;
}

}  // namespace

PlaneWave make_plane_wave(const Vec2& k_par, cplx k_perp, const CVec3& pol) {
    if (std::abs(k_perp.imag()) > 1e-12)
        throw ConfigError("make_plane_wave expects a propagating wave (real k_perp)");
    PlaneWave w;
    w.k_par = k_par;
    w.k_perp = k_perp;
    w.pol = pol;
    w.omega = std::sqrt(k_par.squaredNorm() + k_perp.real() * k_perp.real());
    if (!(w.omega > 0.0)) throw ConfigError("plane wave must have a nonzero wavevector");
    if (std::abs(pol.norm() - 1.0) > 1e-12)
        throw ConfigError("plane-wave polarization must be a unit vector");
    const cplx k_dot_pol = k_par.x() * pol.x() + k_par.y() * pol.y() + k_perp * pol.z();
    if (std::abs(k_dot_pol) > 1e-12 * w.omega)
        throw ConfigError("plane-wave polarization must be transverse (k . pol = 0)");
    return w;
}

PlaneWave incident_wave(double omega, const Vec2& direction, double angle, const CVec3& pol) {
    if (!(omega > 0.0)) throw ConfigError("incident frequency must be positive");
    if (!(angle >= 0.0) || angle >= 0.5 * pi)
        throw ConfigError("incidence angle must lie in [0, pi/2)");
    const Vec2 dir = unit_direction(direction, angle);
    return make_plane_wave(omega * std::sin(angle) * dir, omega * std::cos(angle), pol);
}

std::vector<GIndex> reciprocal_vectors(int radius) {
    if (radius < 0) throw ConfigError("reciprocal_vectors: radius must be >= 0");
    std::vector<GIndex> out;
    out.reserve(static_cast<std::size_t>(2 * radius + 1) * static_cast<std::size_t>(2 * radius + 1));
    for (int m = -radius; m <= radius; ++m)
        for (int n = -radius; n <= radius; ++n) out.emplace_back(m, n);
    return out;
}

ModeIndex outgoing_wavevector(const ScatterScenario& sc, const Vec2& k_par_in, double omega_in,
                              const GIndex& g, int sign, Branch branch) {
    if (!(omega_in > 0.0)) throw ConfigError("outgoing_wavevector: omega_in must be positive");
    if (sign != 1 && sign != -1) throw ConfigError("outgoing_wavevector: sign must be +1 or -1");
    ModeIndex mode;
    mode.g = g;
    mode.sign = sign;
    mode.branch = branch;
    const double omega_out = branch == Branch::b ? omega_in + sc.delta_omega : omega_in;
    const Vec2 q = k_par_in + g_vec(sc, g) + sc.branch_shift(branch);
    const double gap = omega_out - q.norm();  // distance to the light cone
    mode.k_out.k_par = q;
    mode.k_out.omega = omega_out;
    const double disc = omega_out * omega_out - q.squaredNorm();
    if (gap >= 0.0)
        mode.k_out.k_perp = cplx(sign * std::sqrt(std::max(disc, 0.0)), 0.0);
    else
        mode.k_out.k_perp = cplx(0.0, std::sqrt(-disc));  // decays away from the array
    if (std::abs(gap) < sc.crit_tol_eff())
        mode.cls = ModeClass::critical;
    else
        mode.cls = gap > 0.0 ? ModeClass::radiant : ModeClass::evanescent;
    return mode;
}

double cooperativity_threshold(const ScatterScenario& sc, const Vec2& direction, double angle) {
    if (!(angle >= 0.0) || angle >= 0.5 * pi)
        throw ConfigError("incidence angle must lie in [0, pi/2)");
    const Vec2 dir = unit_direction(direction, angle);
    const double s = std::sin(angle);
    const double c2 = 1.0 - s * s;
    double best = std::numeric_limits<double>::infinity();
    for (const GIndex& g : reciprocal_vectors(std::max(sc.g_cutoff, 1))) {
        if (g.x() == 0 && g.y() == 0) continue;
        const Vec2 gv = g_vec(sc, g);
        const double along = s * dir.dot(gv);
        // smallest omega with omega = |omega sin(angle) dir + g|:
        // omega^2 cos^2 = 2 omega sin (dir.g) + g^2
        const double omega_g = (along + std::sqrt(along * along + c2 * gv.squaredNorm())) / c2;
        best = std::min(best, omega_g);
    }
    return best;
}

std::vector<CriticalPoint> find_critical_frequencies(const ScatterScenario& sc,
                                                     const Vec2& direction, double angle,
                                                     double omega_lo, double omega_hi,
                                                     int g_radius) {
    if (!(omega_lo > 0.0) || !(omega_hi > omega_lo))
        throw ConfigError("find_critical_frequencies: need 0 < omega_lo < omega_hi");
    if (!(angle >= 0.0) || angle >= 0.5 * pi)
        throw ConfigError("incidence angle must lie in [0, pi/2)");
    const Vec2 dir = unit_direction(direction, angle);
    const double s = std::sin(angle);
    const int radius = g_radius >= 0 ? g_radius : sc.g_cutoff;

    std::vector<CriticalPoint> found;
    constexpr int scan_points = 10000;
    const double step = (omega_hi - omega_lo) / scan_points;
    for (const GIndex& g : reciprocal_vectors(radius)) {
        const Vec2 base = g_vec(sc, g) + sc.grating;
        const auto f = [&](double omega) {
            return omega + sc.delta_omega - (omega * s * dir + base).norm();
        };
        double prev_omega = omega_lo;
        double prev_f = f(prev_omega);
        if (prev_f == 0.0) found.push_back({prev_omega, g});
        for (int i = 1; i <= scan_points; ++i) {
            const double omega = omega_lo + i * step;
            const double fi = f(omega);
            if (fi == 0.0) {
                // exact grid hit: record once, and the zero endpoint keeps the
                // neighbouring intervals from bracketing the same root again
                found.push_back({omega, g});
            } else if (prev_f != 0.0 && (prev_f < 0.0) != (fi < 0.0)) {
                double lo = prev_omega, hi = omega;
                double flo = prev_f;
                while (hi - lo > 1e-10 * hi) {
                    const double mid = 0.5 * (lo + hi);
                    const double fm = f(mid);
                    if (fm == 0.0) {
                        lo = hi = mid;
                        break;
                    }
                    if ((fm < 0.0) == (flo < 0.0)) {
                        lo = mid;
                        flo = fm;
                    } else {
                        hi = mid;
                    }
                }
                found.push_back({0.5 * (lo + hi), g});
            }
            prev_omega = omega;
            prev_f = fi;
        }
    }
    std::sort(found.begin(), found.end(), [](const CriticalPoint& u, const CriticalPoint& v) {
        if (u.omega != v.omega) return u.omega < v.omega;
        if (u.g.x() != v.g.x()) return u.g.x() < v.g.x();
        return u.g.y() > v.g.y();  // degenerate pairs (m, +-n) list +n first
    });
    return found;
}

}  // namespace transducer
