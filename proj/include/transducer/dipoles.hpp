#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "transducer/geometry.hpp"
#include "transducer/scenario.hpp"
#include "transducer/types.hpp"

namespace transducer {

// Emitter positions in units of the lattice constant d.
struct EmitterSet {
    std::vector<Vec3> positions;

    // Centered n x n square lattice in the z = 0 plane, spacing d,
    // row-major site order.
    static EmitterSet square(int n, double d);

    int size() const { return static_cast<int>(positions.size()); }
    // Largest |x| (= |y|) coordinate of any site; 0 for a single emitter.
    double footprint() const;
};

// Scalar steady-state (cross-)polarizabilities of one emitter,
// alpha[in -> out]: P_out = sum_in alpha_{out,in} E_in (grating phases are
// applied at the sites, not here). Rank-1: aa * bb = ab * ba.
struct CrossPolarizability {
    cplx aa, ab, ba, bb;

    cplx operator()(Branch out, Branch in) const {
        if (out == Branch::a) return in == Branch::a ? aa : ab;
        return in == Branch::a ? ba : bb;
    }
};

// alpha_{sigma,sigma'} = i dip_sigma dip_sigma' mix_sigma conj(mix_sigma') /
// ((gamma_a + gamma_b)/2 - i delta), with gamma_sigma the free-space rate at
// field frequency k_sigma (or at the detuning-free transition frequency when
// scenario.markov_decay is set).
CrossPolarizability polarizabilities(const ScatterScenario& sc, double k_a, double k_b);

// Site fields and polarizations of one finite-array steady state.
struct SiteSolution {
    std::vector<CVec3> field_a, field_b;  // total driving fields at the sites
    std::vector<CVec3> pol_a, pol_b;      // induced polarizations
    CrossPolarizability alpha;
    PlaneWave incident;
    cplx amplitude = 1.0;  // incident amplitude E0
    double k_a = 0.0, k_b = 0.0;
    double residual = 0.0;  // ||Ax - b|| / ||b|| of the accepted solve
    std::string method;     // "dense" or "bicgstab"
};

struct SolveOptions {
    enum class Method { automatic, dense, iterative };
    Method method = Method::automatic;   // dense up to iterative_threshold sites
    int iterative_threshold = 40 * 40;   // emitter count switching to Krylov
    double iterative_tol = 1e-8;         // Krylov stopping residual
    double max_memory_gib = 8.0;         // refuse larger dense factorizations
};

// Solves the steady-state coupled-dipole system for the site fields of both
// branches (6 N complex unknowns for N emitters): the incident wave drives
// branch a, sites couple through -k^2 G(r_j - r_i, k) (positive-frequency
// kernel when scenario.rwa) with the drive-grating phases attached to the
// cross terms. Dense partial-pivot LU by default with a residual check of
// 1e-10; matrix-free BiCGSTAB above the size threshold. Throws ConfigError
// for invalid emitters, NonConvergenceError if the residual target is not
// met, and IllConditionedError for a singular system.
SiteSolution solve_sites(const ScatterScenario& sc, const EmitterSet& emitters,
                         const PlaneWave& incident, cplx amplitude = 1.0,
                         const SolveOptions& opt = {});

// Regular evaluation grid; index (i, j, k) maps to flat i + nx*(j + ny*k)
// (x fastest). Axes with a single point collapse to a plane or line.
struct GridSpec {
    Vec3 origin = Vec3::Zero();
    Vec3 step = Vec3::Zero();
    int nx = 1, ny = 1, nz = 1;

    std::size_t count() const {
        return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
               static_cast<std::size_t>(nz);
    }
    Vec3 point(int i, int j, int k) const {
        return origin + Vec3(i * step.x(), j * step.y(), k * step.z());
    }
    static GridSpec plane_z(double half_extent, int n, double z);   // x-y plane
    static GridSpec plane_y(double half_extent_x, int nx, double y, double z_min,
                            double z_max, int nz);                  // x-z plane
    static GridSpec line_x(double x_min, double x_max, int n, double y, double z);
};

struct FieldMap {
    GridSpec grid;
    std::vector<CVec3> field_a, field_b;  // grid.count() entries, x fastest
    std::vector<CVec3> pol_a, pol_b;      // site polarizations (echo)
    std::vector<Vec3> sites;              // emitter positions (echo)
};

// Scattered-plus-incident field of both branches on the grid:
// E_sigma(r) = delta_{sigma,a} E0_a(r) - k_sigma^2 sum_i G(r - r_i) P_sigma(r_i).
// Grid points closer than 1e-6 d to any emitter are rejected (ConfigError).
// Deterministic and parallel over grid points.
FieldMap evaluate_field(const ScatterScenario& sc, const EmitterSet& emitters,
                        const SiteSolution& solution, const GridSpec& grid);

// Half-width analysis of the scattered idler lobe along the array plane.
struct FwhmResult {
    std::vector<double> x;               // sample positions (units d)
    std::vector<double> z_half;          // first z > 0 with |E_b| at half the
                                         // in-plane value; NaN when not found
    std::vector<double> z_half_smooth;   // centered 5-point median filter
    std::vector<std::uint8_t> found;     // half-crossing located in window
    double spread_rate_raw = 0.0;        // least-squares slope of z_half vs x
    double spread_rate = 0.0;            // slope of the filtered series
    double fit_residual = 0.0;           // rms residual of the filtered fit
};

// Scans |E_b(x, 0, z)| upward in z for each x sample of an x-z field map
// (y = 0 plane) restricted to [x_min, x_max], which must lie strictly
// outside the emitter footprint; half-crossings are located by linear
// interpolation between z samples.
FwhmResult fwhm_lobe(const ScatterScenario& sc, const EmitterSet& emitters,
                     const FieldMap& xz_map, double x_min, double x_max);

enum class SpectralWindow { hann, rectangular };
enum class FieldPart { real_part, imag_part, complex_full };

struct SpectrumResult {
    std::vector<double> q;          // wavenumber bins, units 2 pi / d
    std::vector<double> magnitude;  // |DFT| per bin
    std::vector<int> peaks;         // indices of local maxima > 5 x median
    double bin_width = 0.0;         // q resolution (one bin)
};

// Discrete Fourier transform of one Cartesian field component along an
// axis-aligned cut of the map (axis in {0,1,2}; the other two indices
// fixed). Requires >= 256 uniform samples along the cut. part selects
// Re, Im, or the full complex samples; the window tapers the cut before
// the transform (peak positions must be window-invariant within one bin).
SpectrumResult spectrum_linecut(const FieldMap& map, int axis, int fixed1, int fixed2,
                                int component, FieldPart part = FieldPart::real_part,
                                SpectralWindow window = SpectralWindow::hann);

}  // namespace transducer
