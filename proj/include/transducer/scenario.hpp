#pragma once

#include <cmath>

#include "transducer/types.hpp"

namespace transducer {

// Static description of the driven emitter array and the numerical controls
// shared by all solvers. Negative control values mean "derive the default
// from the lattice constant" (resolved by the *_eff accessors).
struct ScatterScenario {
    double lattice_d = 1.0;    // lattice constant d (sets the length unit)
    double delta_omega = 0.0;  // idler/signal frequency gap, >= 0
    double detuning = 0.0;     // Re(rho): offset of the drive from two-photon resonance
    double eta = -1.0;         // Im(rho) > 0; auto = 1e-3 * (2*pi/d)
    double dip_a = 1.0;        // transition dipole moment, signal
    double dip_b = 1.0;        // transition dipole moment, idler
    cplx mix_a = cplx(0.70710678118654752, 0.0);  // dark-state amplitude A; B derived
    Vec2 grating = Vec2::Zero();                  // in-plane drive momentum transfer (k_L2 - k_L1)
    bool rwa = false;          // use the positive-frequency kernel instead of the full one
    int g_cutoff = 6;          // reciprocal-vector enumeration radius for searches
    bool zero_real_part = false;  // drop the Hermitian part of the collective coupling
    bool markov_decay = false;    // site decay rates at the transition frequency
                                  // (detuning removed) instead of the field frequency

    // numerical controls
    double crit_tol = -1.0;       // light-cone classification tolerance; auto = 1e-6 * (2*pi/d)
    double lattice_r_max = -1.0;  // initial real-part summation radius; auto = 200 * d
    double lattice_tol = 1e-5;    // relative convergence target of the real-part sum
    int lattice_max_doublings = 6;

    double recip() const { return two_pi / lattice_d; }  // reciprocal unit 2*pi/d

    // B is fixed real and nonnegative by |A|^2 + |B|^2 = 1; the phase of B is
    // unobservable (it cancels against the drive phase).
    cplx mix_b() const {
        double b2 = 1.0 - std::norm(mix_a);
        return cplx(std::sqrt(b2 > 0.0 ? b2 : 0.0), 0.0);
    }

    double eta_eff() const { return eta > 0.0 ? eta : 1e-3 * recip(); }
    double crit_tol_eff() const { return crit_tol > 0.0 ? crit_tol : 1e-6 * recip(); }
    double lattice_r_max_eff() const { return lattice_r_max > 0.0 ? lattice_r_max : 200.0 * lattice_d; }

    double dipole(Branch br) const { return br == Branch::a ? dip_a : dip_b; }
    cplx mix(Branch br) const { return br == Branch::a ? mix_a : mix_b(); }

    // In-plane momentum kick picked up by branch sigma relative to the signal
    // branch: zero for a, +grating for b.
    Vec2 branch_shift(Branch br) const { return br == Branch::b ? Vec2(grating) : Vec2(Vec2::Zero()); }

    void validate() const;  // throws ConfigError on violated invariants
};

// Complex resonance parameter and branch field frequencies for one incoming
// photon. rho = detuning + i*eta; the branch wavenumbers ride the photon:
// k_a = omega_in + i*eta, k_b = omega_in + delta_omega + i*eta.
struct Resonance {
    cplx rho;
    double omega_a = 0.0;  // real field frequency, signal branch
    double omega_b = 0.0;  // real field frequency, idler branch
    double eta = 0.0;

    double omega(Branch br) const { return br == Branch::a ? omega_a : omega_b; }
    cplx k(Branch br) const { return cplx(omega(br), eta); }
};

Resonance make_resonance(const ScatterScenario& sc, double omega_in);

}  // namespace transducer
