#pragma once

#include <vector>

#include "transducer/scenario.hpp"
#include "transducer/types.hpp"

namespace transducer {

// Free-space plane-wave mode. k_perp is real for propagating waves and purely
// imaginary (+i|k_perp|) for evanescent ones; omega = |k| is derived.
struct PlaneWave {
    Vec2 k_par = Vec2::Zero();
    cplx k_perp = 0.0;
    CVec3 pol = CVec3::Zero();
    double omega = 0.0;
};

// Validates transversality (k . pol = 0) and unit polarization, derives omega.
PlaneWave make_plane_wave(const Vec2& k_par, cplx k_perp, const CVec3& pol);

// Propagating wave with frequency omega incident at `angle` from the surface
// normal, in-plane direction `direction` (normalized internally), k_perp > 0.
PlaneWave incident_wave(double omega, const Vec2& direction, double angle, const CVec3& pol);

// Outgoing wavevector of a diffraction order, before polarization is chosen.
struct WaveVec {
    Vec2 k_par = Vec2::Zero();
    cplx k_perp = 0.0;  // sign * sqrt(omega^2 - |k_par|^2), or +i|.| if evanescent
    double omega = 0.0;
};

// One outgoing diffraction order (g, s, sigma) of the scattered field.
struct ModeIndex {
    GIndex g = GIndex::Zero();
    int sign = +1;  // s = +/- : emission into z > 0 / z < 0
    Branch branch = Branch::a;
    WaveVec k_out;
    ModeClass cls = ModeClass::radiant;
};

// All integer pairs with max(|m|,|n|) <= radius, row-major then lexicographic:
// (-r,-r), (-r,-r+1), ..., (r,r). radius 0 -> 1 vector, 1 -> 9, 3 -> 49.
std::vector<GIndex> reciprocal_vectors(int radius);

// Physical reciprocal vector (2*pi/d) * g.
inline Vec2 g_vec(const ScatterScenario& sc, const GIndex& g) {
    return sc.recip() * Vec2(g.x(), g.y());
}

// k'(g,s,sigma): in-plane k_par_in + g + branch shift; omega_out picks up
// delta_omega on the idler branch; classification against the light cone
// uses the scenario's criticality tolerance. Evanescent k_perp is stored on
// the upper branch, +i|k_perp|, so the mode decays away from the array.
ModeIndex outgoing_wavevector(const ScatterScenario& sc, const Vec2& k_par_in, double omega_in,
                              const GIndex& g, int sign, Branch branch);

inline ModeIndex outgoing_wavevector(const ScatterScenario& sc, const PlaneWave& incoming,
                                     const GIndex& g, int sign, Branch branch) {
    return outgoing_wavevector(sc, incoming.k_par, incoming.omega, g, sign, branch);
}

// Largest incoming frequency for which g = 0 is the only radiant signal order,
// for incidence at `angle` from the normal along in-plane `direction`.
double cooperativity_threshold(const ScatterScenario& sc, const Vec2& direction, double angle);

struct CriticalPoint {
    double omega;  // incoming frequency at which the order turns critical
    GIndex g;
};

// Incoming frequencies where an idler diffraction order crosses the light
// cone: omega + delta_omega = |k_par(omega) + g + grating|. Scans 1e4 points
// per order over [omega_lo, omega_hi], then bisects each bracket to 1e-10
// relative accuracy. Results sorted ascending; degenerate orders all reported.
std::vector<CriticalPoint> find_critical_frequencies(const ScatterScenario& sc,
                                                     const Vec2& direction, double angle,
                                                     double omega_lo, double omega_hi,
                                                     int g_radius = -1);

}  // namespace transducer
