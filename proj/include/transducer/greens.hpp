#pragma once

#include <functional>
#include <vector>

#include "transducer/geometry.hpp"
#include "transducer/scenario.hpp"
#include "transducer/types.hpp"

namespace transducer {

// Free-space dyadic Green's function G(r, k) of the vector Helmholtz
// equation, 3x3, symmetric. k may carry a small positive imaginary part
// (resonance regularizer); the real part must be positive. r != 0.
CMat3 dyadic_green(const Vec3& r, cplx k);

// Positive-frequency kernel K+(r, k) = G(r, k) + purely real algebraic
// correction built from exp_integral(j, Re(k)|r|). By construction
// Im K+ = Im G entrywise. r != 0, Re(k) > 0.
CMat3 rwa_green(const Vec3& r, cplx k);

// Free-space decay rate of one emitter on branch sigma at field frequency
// k_sigma: |mix|^2 dip^2 k^3 / (3 pi), the small-r limit -2 k^2 dip^2 |mix|^2
// Im G(r -> 0, k) of the kernel above.
double vacuum_decay(const ScatterScenario& sc, Branch sigma, double k_sigma);

// Per-site coupling tensor of branch sigma: k^2 |mix|^2 dip^2 K+(r, k) with
// k = res.k(sigma) (full kernel G instead of K+ when scenario.rwa is false).
// Only this product is exposed; the bare two-level propagator carries a
// 1/rho pole and never appears alone.
CMat3 rho_d_site(const ScatterScenario& sc, const Resonance& res, Branch sigma, const Vec3& r);

// Optional restriction of sums over diffraction orders; empty means all-pass.
using GFilter = std::function<bool(const GIndex&)>;

// One outgoing diffraction channel (g, s) of branch sigma at in-plane
// momentum q = q_base + g: kinematics plus the transverse polarization pair
// and the scalar coupling weight shared by the mode-resolved amplitudes and
// the closed-form damping matrix.
struct DiffractionChannel {
    ModeIndex mode;       // classification + outgoing wavevector
    cplx inv_k_perp;      // 1 / sqrt(k_c^2 - |q|^2), k_c = omega_sigma + i eta
    Vec3 pol_s, pol_p;    // transverse unit vectors of the real direction
    double weight = 0.0;  // |mix|^2 dip^2 omega_sigma^2 / (4 d^2)
};

// Enumerates channels with max-norm |g| <= radius (scenario.g_cutoff when
// radius < 0) around branch in-plane momentum q_base (already including any
// grating shift), both signs s. Deterministic order: g row-major, s = +,-.
std::vector<DiffractionChannel> diffraction_channels(const ScatterScenario& sc,
                                                     const Resonance& res, Branch sigma,
                                                     const Vec2& q_base, int g_radius = -1,
                                                     const GFilter& filter = {});

// Radiative damping matrix of one branch: the (real symmetric) imaginary
// part of the momentum-space coupling sum, as a closed finite sum
//   -sum_{g,s,pol} weight * Re(1 / k_perp(g)) * pol pol^T
// over channels inside (or within the criticality tolerance of) the light
// cone. Negative semidefinite. q_base as in diffraction_channels.
Mat3 branch_damping(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                    const Vec2& q_base, const GFilter& filter = {});

// Imaginary part of the full collective coupling tensor in the given branch
// frame: sum of branch_damping over sigma in {a, b} with the inter-branch
// grating shift applied to the in-plane momentum.
Mat3 im_rho_p_closed(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                     Branch frame = Branch::a, const GFilter& filter = {});

// Convergence report of one real-part lattice sum.
struct LatticeSumDiagnostics {
    double achieved_tol = 0.0;  // last relative step of the extrapolated value
    double r_final = 0.0;       // outermost summation radius used
    int doublings = 0;
    bool converged = true;      // false: stalled at lattice_max_doublings
};

// Real (Hermitian) part of the momentum-space coupling sum of one branch:
// windowed real-space lattice sum of Re[rho_d_site * phase] over sites
// r != 0, extrapolated over radius doublings until the relative step falls
// below scenario.lattice_tol. Throws NonConvergenceError if the partial sums
// diverge; a stalled (but decreasing) extrapolation is reported through
// diag->converged = false instead.
Mat3 branch_shift(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                  const Vec2& q_base, LatticeSumDiagnostics* diag = nullptr);

// Real part of the full collective coupling tensor in the given branch frame
// (sum of branch_shift over both branches).
Mat3 re_rho_p_lattice(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                      Branch frame = Branch::a, LatticeSumDiagnostics* diag = nullptr);

// Full collective coupling tensor rho P(k_par, frame) = real lattice part
// + i * closed-form imaginary part, per-branch results served through the
// process-wide self-energy cache. scenario.zero_real_part drops the real
// part (resonant idealization).
CMat3 self_energy(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                  Branch frame = Branch::a);

// Cached unit-mixing per-branch tensors (mixing amplitudes scaled out, so one
// entry serves every |A| at the same kinematics). Thread-safe: concurrent
// reads, single-writer insertion. When the TRANSDUCER_CACHE_DIR environment
// variable names a directory, entries are mirrored there across runs.
struct BranchTensors {
    Mat3 shift = Mat3::Zero();    // real part at |mix| = 1
    Mat3 damping = Mat3::Zero();  // imaginary part at |mix| = 1
    LatticeSumDiagnostics diag;
};

class SelfEnergyCache {
  public:
    static SelfEnergyCache& global();

    // Unit-mixing tensors of branch sigma at in-plane momentum q_base.
    BranchTensors get(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                      const Vec2& q_base);

    void clear();
    std::size_t size() const;

  private:
    struct Impl;
    Impl* impl_;
    SelfEnergyCache();
    ~SelfEnergyCache();
};

}  // namespace transducer
