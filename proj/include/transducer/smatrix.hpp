#pragma once

#include <optional>
#include <string>
#include <vector>

#include "transducer/greens.hpp"

namespace transducer {

// Transverse polarization basis of a propagating wave. s is in-plane and
// normal to the plane of incidence, p lies in the plane of incidence; both
// are real unit vectors orthogonal to (k_par, k_perp). At normal incidence
// the plane of incidence is undefined and the caller must supply an explicit
// in-plane axis, which becomes the s direction; otherwise axis is ignored.
// Throws ConfigError for k_par = 0 without an axis.
Vec3 s_polarization(const Vec2& k_par, double k_perp, const std::optional<Vec2>& axis = {});
Vec3 p_polarization(const Vec2& k_par, double k_perp, const std::optional<Vec2>& axis = {});

// Emitter-photon coupling of branch sigma for one Cartesian dipole axis:
// dip_sigma * (e_axis . pol) * sqrt(omega / 2).
cplx coupling_vertex(const ScatterScenario& sc, const PlaneWave& wave, int axis, Branch sigma);

// One outgoing amplitude row of the scattering operator.
struct ModeAmplitude {
    ModeIndex mode;
    char polarization = 's';  // 's' or 'p' in the mode's own basis
    cplx amplitude;           // scattering-operator element; the identity is
                              // folded into the forward specular signal mode
    double probability = 0.0; // flux-normalized |amplitude|^2
};

struct ScatteringResult {
    double efficiency_total_b = 0.0;   // summed idler-mode probabilities
    double efficiency_survive_a = 0.0; // 1 - closed-form idler efficiency; the
                                       // identity is never added by hand
    std::vector<ModeAmplitude> per_mode;
    CMat3 inverse_propagator = CMat3::Zero();  // (rho I - rho P)^{-1}
};

// Scatters one incoming radiant plane wave off the infinite array: builds
// the collective propagator at the incoming in-plane momentum, then one
// amplitude per radiant outgoing channel (both branches, both sides, both
// transverse polarizations). Throws IllConditionedError when rho I - rho P
// has condition number above 1e12 (exact criticality; nudge eta).
ScatteringResult scatter(const ScatterScenario& sc, const PlaneWave& incoming);

// Total a -> b transduction probability through the closed form
//   (|A|^2 omega_in / (k_perp d^2)) v+ M+ (-2 Im rho_D_b) M v ,
// an independent evaluation path that must agree with summing the per-mode
// probabilities of scatter().
double efficiency_total(const ScatterScenario& sc, const PlaneWave& incoming);

// Transduction probability restricted to idler diffraction orders passing
// the filter. The all-pass filter reproduces efficiency_total.
double efficiency_projected(const ScatterScenario& sc, const PlaneWave& incoming,
                            const GFilter& filter);

struct MixingOptimum {
    double abs_a = 0.0;       // |A| at the efficiency maximum
    double efficiency = 0.0;  // efficiency there
};

// Maximizes efficiency_total over the dark-state weight |A| in [0, 1]:
// 101-point scan refined by golden-section search to 1e-4 in |A|.
MixingOptimum optimize_mixing(const ScatterScenario& sc, const PlaneWave& incoming);

enum class SweepAxis { omega_in, abs_a_sq, angle };
enum class SweepPol { s, p, custom };

struct SweepOptions {
    Vec2 direction = Vec2(1.0, 0.0);  // in-plane incidence direction
    double angle = 0.0;               // radians; fixed unless axis == angle
    double omega_in = 0.0;            // fixed unless axis == omega_in
    SweepPol polarization = SweepPol::s;
    CVec3 custom_pol = CVec3::Zero();  // used when polarization == custom
    bool zero_real_part = false;       // overrides scenario.zero_real_part
    bool optimize_a = false;           // re-optimize |A| at every grid point
    GFilter g_filter;                  // adds a projected-efficiency column
};

struct SweepRow {
    double x = 0.0;           // grid value
    double efficiency = 0.0;  // total a -> b
    double survival = 0.0;
    double abs_a = 0.0;       // |A| used (optimized or from the scenario)
    double projected = -1.0;  // filtered efficiency; -1 when no filter
    std::string error;        // empty on success
};

// Evaluates one row per grid value; rows are independent and computed in
// parallel, ordered by the input grid. Failing rows record the error and the
// sweep continues.
std::vector<SweepRow> sweep(const ScatterScenario& sc, SweepAxis axis,
                            const std::vector<double>& grid, const SweepOptions& opt);

}  // namespace transducer
