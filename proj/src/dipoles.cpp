#include "transducer/dipoles.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "transducer/greens.hpp"
#include "transducer/parallel.hpp"

namespace transducer {

namespace {

using Eigen::MatrixXcd;
using Eigen::VectorXcd;

CMat3 site_kernel(const ScatterScenario& sc, const Vec3& r, double k) {
    return sc.rwa ? rwa_green(r, cplx(k, 0.0)) : dyadic_green(r, cplx(k, 0.0));
}

// Shared description of the 6N x 6N steady-state system
//   [x_a; x_b] + C [x_a; x_b] = [E0(sites); 0]
// in block layout: components 3i..3i+2 are E_a(r_i), 3N+3i.. are E_b(r_i).
struct SystemContext {
    const ScatterScenario* sc = nullptr;
    const EmitterSet* em = nullptr;
    CrossPolarizability alpha;
    double k_a = 0.0, k_b = 0.0;
    std::vector<cplx> phase;  // e^{+i grating . r_i} per site

    int sites() const { return em->size(); }
    int dim() const { return 6 * em->size(); }
};

SystemContext make_context(const ScatterScenario& sc, const EmitterSet& em,
                           double k_a, double k_b) {
    SystemContext ctx;
    ctx.sc = &sc;
    ctx.em = &em;
    ctx.k_a = k_a;
    ctx.k_b = k_b;
    ctx.alpha = polarizabilities(sc, k_a, k_b);
    ctx.phase.resize(em.positions.size());
    for (std::size_t i = 0; i < em.positions.size(); ++i) {
        const Vec3& r = em.positions[i];
        ctx.phase[i] = std::exp(cplx(0.0, sc.grating.x() * r.x() + sc.grating.y() * r.y()));
    }
    return ctx;
}

// y = (I + C) x without forming C. Row-parallel; every write is to a
// distinct slot, so the result is bit-identical for any worker count.
void apply_system(const SystemContext& ctx, const VectorXcd& x, VectorXcd& y) {
    const int n = ctx.sites();
    const double ka2 = ctx.k_a * ctx.k_a;
    const double kb2 = ctx.k_b * ctx.k_b;
    // per-source polarization combos shared by every row
    std::vector<CVec3> src_a(n), src_b(n);
    for (int i = 0; i < n; ++i) {
        const CVec3 xa = x.segment<3>(3 * i);
        const CVec3 xb = x.segment<3>(3 * n + 3 * i);
        src_a[i] = ctx.alpha.aa * xa + ctx.alpha.ab * std::conj(ctx.phase[i]) * xb;
        src_b[i] = ctx.alpha.ba * ctx.phase[i] * xa + ctx.alpha.bb * xb;
    }
    y.resize(ctx.dim());
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t j) {
        const Vec3& rj = ctx.em->positions[j];
        CVec3 acc_a = x.segment<3>(3 * static_cast<int>(j));
        CVec3 acc_b = x.segment<3>(3 * n + 3 * static_cast<int>(j));
        for (int i = 0; i < n; ++i) {
            if (i == static_cast<int>(j)) continue;
            const Vec3 r = rj - ctx.em->positions[i];
            acc_a += ka2 * (site_kernel(*ctx.sc, r, ctx.k_a) * src_a[i]);
            acc_b += kb2 * (site_kernel(*ctx.sc, r, ctx.k_b) * src_b[i]);
        }
        y.segment<3>(3 * static_cast<int>(j)) = acc_a;
        y.segment<3>(3 * n + 3 * static_cast<int>(j)) = acc_b;
    });
}

VectorXcd incident_at_sites(const SystemContext& ctx, const PlaneWave& incident,
                            cplx amplitude) {
    const int n = ctx.sites();
    VectorXcd b = VectorXcd::Zero(ctx.dim());
    for (int i = 0; i < n; ++i) {
        const Vec3& r = ctx.em->positions[i];
        const cplx ph = std::exp(cplx(0.0, 1.0) * (cplx(incident.k_par.x() * r.x() +
                                                        incident.k_par.y() * r.y()) +
                                                   incident.k_perp * r.z()));
        b.segment<3>(3 * i) = amplitude * ph * incident.pol;
    }
    return b;
}

double relative_residual(const SystemContext& ctx, const VectorXcd& x, const VectorXcd& b) {
    VectorXcd ax;
    apply_system(ctx, x, ax);
    return (ax - b).norm() / b.norm();
}

void assemble_dense(const SystemContext& ctx, MatrixXcd& a) {
    const int n = ctx.sites();
    const int dim = ctx.dim();
    const double ka2 = ctx.k_a * ctx.k_a;
    const double kb2 = ctx.k_b * ctx.k_b;
    a = MatrixXcd::Identity(dim, dim);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t js) {
        const int j = static_cast<int>(js);
        const Vec3& rj = ctx.em->positions[j];
        for (int i = 0; i < n; ++i) {
            if (i == j) continue;
            const Vec3 r = rj - ctx.em->positions[i];
            const CMat3 ga = ka2 * site_kernel(*ctx.sc, r, ctx.k_a);
            const CMat3 gb = kb2 * site_kernel(*ctx.sc, r, ctx.k_b);
            a.block<3, 3>(3 * j, 3 * i) += ctx.alpha.aa * ga;
            a.block<3, 3>(3 * j, 3 * n + 3 * i) += ctx.alpha.ab * std::conj(ctx.phase[i]) * ga;
            a.block<3, 3>(3 * n + 3 * j, 3 * i) += ctx.alpha.ba * ctx.phase[i] * gb;
            a.block<3, 3>(3 * n + 3 * j, 3 * n + 3 * i) += ctx.alpha.bb * gb;
        }
    });
    if (n >= 2) {
        // kernel reciprocity spot check: G(r, k) = G(-r, k)^T entrywise
        const Vec3 r01 = ctx.em->positions[0] - ctx.em->positions[1];
        const CMat3 fwd = site_kernel(*ctx.sc, r01, ctx.k_a);
        const CMat3 bwd = site_kernel(*ctx.sc, -r01, ctx.k_a);
        if ((fwd - bwd.transpose()).cwiseAbs().maxCoeff() > 1e-12 * fwd.cwiseAbs().maxCoeff())
            throw std::logic_error("coupled-dipole kernel lost reciprocity");
    }
}

// Textbook unpreconditioned BiCGSTAB with the matrix-free apply above.
VectorXcd bicgstab(const SystemContext& ctx, const VectorXcd& b, double tol,
                   int max_iter, double* achieved) {
    VectorXcd x = VectorXcd::Zero(b.size());
    VectorXcd r = b;  // r = b - A*0
    const VectorXcd rhat = r;
    const double bnorm = b.norm();
    cplx rho(1.0, 0.0), alpha(1.0, 0.0), omega(1.0, 0.0);
    VectorXcd v = VectorXcd::Zero(b.size());
    VectorXcd p = VectorXcd::Zero(b.size());
    VectorXcd s(b.size()), t(b.size());
    double rel = r.norm() / bnorm;
    for (int it = 0; it < max_iter && rel > tol; ++it) {
        const cplx rho1 = rhat.dot(r);
        if (std::abs(rho1) < 1e-300) break;  // breakdown; caller checks residual
        const cplx beta = (rho1 / rho) * (alpha / omega);
        p = r + beta * (p - omega * v);
        apply_system(ctx, p, v);
        alpha = rho1 / rhat.dot(v);
        s = r - alpha * v;
        if (s.norm() / bnorm <= tol) {
            x += alpha * p;
            rel = s.norm() / bnorm;
            break;
        }
        apply_system(ctx, s, t);
        omega = t.dot(s) / t.dot(t);
        x += alpha * p + omega * s;
        r = s - omega * t;
        rho = rho1;
        rel = r.norm() / bnorm;
        if (std::abs(omega) < 1e-300) break;
    }
    if (achieved) *achieved = rel;
    return x;
}

}  // namespace

EmitterSet EmitterSet::square(int n, double d) {
    if (n < 1) throw ConfigError("EmitterSet::square: need n >= 1");
    if (!(d > 0.0)) throw ConfigError("EmitterSet::square: need d > 0");
    EmitterSet out;
    out.positions.reserve(static_cast<std::size_t>(n) * n);
    const double off = 0.5 * (n - 1);
    for (int iy = 0; iy < n; ++iy)
        for (int ix = 0; ix < n; ++ix)
            out.positions.emplace_back((ix - off) * d, (iy - off) * d, 0.0);
    return out;
}

double EmitterSet::footprint() const {
    double f = 0.0;
    for (const Vec3& r : positions) f = std::max({f, std::abs(r.x()), std::abs(r.y())});
    return f;
}

CrossPolarizability polarizabilities(const ScatterScenario& sc, double k_a, double k_b) {
    if (!(k_a > 0.0) || !(k_b > 0.0))
        throw ConfigError("polarizabilities: field frequencies must be positive");
    double kga = k_a, kgb = k_b;
    if (sc.markov_decay) {
        // decay rates evaluated at the bare transition frequencies instead of
        // the (detuned) field frequencies
        kga = k_a - sc.detuning;
        kgb = k_b - sc.detuning;
        if (!(kga > 0.0) || !(kgb > 0.0))
            throw ConfigError("polarizabilities: detuning exceeds a transition frequency");
    }
    const double gamma_a = vacuum_decay(sc, Branch::a, kga);
    const double gamma_b = vacuum_decay(sc, Branch::b, kgb);
    const cplx denom = cplx(0.5 * (gamma_a + gamma_b), -sc.detuning);
    const cplx pref = cplx(0.0, 1.0) / denom;
    const cplx a = sc.mix(Branch::a);
    const cplx b = sc.mix(Branch::b);
    const double pa = sc.dipole(Branch::a);
    const double pb = sc.dipole(Branch::b);
    CrossPolarizability out;
    out.aa = pref * pa * pa * std::norm(a);
    out.ab = pref * pa * pb * a * std::conj(b);
    out.ba = pref * pb * pa * b * std::conj(a);
    out.bb = pref * pb * pb * std::norm(b);
    return out;
}

SiteSolution solve_sites(const ScatterScenario& sc, const EmitterSet& emitters,
                         const PlaneWave& incident, cplx amplitude,
                         const SolveOptions& opt) {
    sc.validate();
    const int n = emitters.size();
    if (n < 1) throw ConfigError("solve_sites: empty emitter set");
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if ((emitters.positions[i] - emitters.positions[j]).norm() < 1e-9 * sc.lattice_d)
                throw ConfigError("solve_sites: coincident emitter positions");
    if (std::abs(incident.k_perp.imag()) > 1e-9 * incident.omega)
        throw ConfigError("solve_sites: incident wave must be radiant");
    if (!std::isfinite(amplitude.real()) || !std::isfinite(amplitude.imag()))
        throw ConfigError("solve_sites: non-finite incident amplitude");

    const double k_a = incident.omega;
    const double k_b = incident.omega + sc.delta_omega;
    SystemContext ctx = make_context(sc, emitters, k_a, k_b);
    const VectorXcd b = incident_at_sites(ctx, incident, amplitude);

    bool dense = true;
    const double bytes = 16.0 * static_cast<double>(ctx.dim()) * static_cast<double>(ctx.dim());
    const double limit = opt.max_memory_gib * 1024.0 * 1024.0 * 1024.0;
    switch (opt.method) {
        case SolveOptions::Method::dense:
            if (bytes > limit)
                throw ConfigError("solve_sites: dense factorization would need " +
                                  std::to_string(bytes / (1024.0 * 1024.0 * 1024.0)) +
                                  " GiB (limit " + std::to_string(opt.max_memory_gib) + ")");
            break;
        case SolveOptions::Method::iterative:
            dense = false;
            break;
        case SolveOptions::Method::automatic:
            dense = n <= opt.iterative_threshold && bytes <= limit;
            break;
    }

    SiteSolution sol;
    sol.alpha = ctx.alpha;
    sol.incident = incident;
    sol.amplitude = amplitude;
    sol.k_a = k_a;
    sol.k_b = k_b;

    VectorXcd x;
    double accept_tol = 1e-10;
    if (dense) {
        MatrixXcd a;
        assemble_dense(ctx, a);
        Eigen::PartialPivLU<MatrixXcd> lu(a);
        const double rc = lu.rcond();
        if (!(rc > 1e-14))
            throw IllConditionedError("solve_sites: near-singular coupled-dipole system",
                                      rc > 0.0 ? 1.0 / rc : std::numeric_limits<double>::infinity());
        x = lu.solve(b);
        sol.method = "dense";
    } else {
        accept_tol = opt.iterative_tol;
        double achieved = 0.0;
        x = bicgstab(ctx, b, opt.iterative_tol, 10000, &achieved);
        sol.method = "bicgstab";
    }

    sol.residual = relative_residual(ctx, x, b);
    if (!(sol.residual < accept_tol))
        throw NonConvergenceError("solve_sites: relative residual " +
                                  std::to_string(sol.residual) + " above " +
                                  std::to_string(accept_tol));

    sol.field_a.resize(n);
    sol.field_b.resize(n);
    sol.pol_a.resize(n);
    sol.pol_b.resize(n);
    for (int i = 0; i < n; ++i) {
        sol.field_a[i] = x.segment<3>(3 * i);
        sol.field_b[i] = x.segment<3>(3 * n + 3 * i);
        sol.pol_a[i] = ctx.alpha.aa * sol.field_a[i] +
                       ctx.alpha.ab * std::conj(ctx.phase[i]) * sol.field_b[i];
        sol.pol_b[i] = ctx.alpha.ba * ctx.phase[i] * sol.field_a[i] +
                       ctx.alpha.bb * sol.field_b[i];
    }
    return sol;
}

GridSpec GridSpec::plane_z(double half_extent, int n, double z) {
    GridSpec g;
    g.nx = g.ny = n;
    g.nz = 1;
    const double step = n > 1 ? 2.0 * half_extent / (n - 1) : 0.0;
    g.origin = Vec3(-half_extent, -half_extent, z);
    g.step = Vec3(step, step, 0.0);
    return g;
}

GridSpec GridSpec::plane_y(double half_extent_x, int nx, double y, double z_min,
                           double z_max, int nz) {
    GridSpec g;
    g.nx = nx;
    g.ny = 1;
    g.nz = nz;
    g.origin = Vec3(-half_extent_x, y, z_min);
    g.step = Vec3(nx > 1 ? 2.0 * half_extent_x / (nx - 1) : 0.0, 0.0,
                  nz > 1 ? (z_max - z_min) / (nz - 1) : 0.0);
    return g;
}

GridSpec GridSpec::line_x(double x_min, double x_max, int n, double y, double z) {
    GridSpec g;
    g.nx = n;
    g.ny = g.nz = 1;
    g.origin = Vec3(x_min, y, z);
    g.step = Vec3(n > 1 ? (x_max - x_min) / (n - 1) : 0.0, 0.0, 0.0);
    return g;
}

FieldMap evaluate_field(const ScatterScenario& sc, const EmitterSet& emitters,
                        const SiteSolution& solution, const GridSpec& grid) {
    sc.validate();
    if (grid.nx < 1 || grid.ny < 1 || grid.nz < 1)
        throw ConfigError("evaluate_field: empty grid");
    const int n = emitters.size();
    if (n != static_cast<int>(solution.pol_a.size()))
        throw ConfigError("evaluate_field: solution does not match emitter set");

    FieldMap map;
    map.grid = grid;
    map.sites = emitters.positions;
    map.pol_a = solution.pol_a;
    map.pol_b = solution.pol_b;
    map.field_a.resize(grid.count());
    map.field_b.resize(grid.count());

    const double ka2 = solution.k_a * solution.k_a;
    const double kb2 = solution.k_b * solution.k_b;
    const double exclusion = 1e-6 * sc.lattice_d;
    const std::size_t nxy = static_cast<std::size_t>(grid.nx) * grid.ny;
    parallel_for(grid.count(), [&](std::size_t flat) {
        const int k = static_cast<int>(flat / nxy);
        const int j = static_cast<int>((flat % nxy) / grid.nx);
        const int i = static_cast<int>(flat % grid.nx);
        const Vec3 p = grid.point(i, j, k);
        const cplx ph = std::exp(cplx(0.0, 1.0) *
                                 (cplx(solution.incident.k_par.x() * p.x() +
                                       solution.incident.k_par.y() * p.y()) +
                                  solution.incident.k_perp * p.z()));
        CVec3 ea = solution.amplitude * ph * solution.incident.pol;
        CVec3 eb = CVec3::Zero();
        for (int s = 0; s < n; ++s) {
            const Vec3 r = p - emitters.positions[s];
            if (r.norm() < exclusion)
                throw ConfigError("evaluate_field: grid point on an emitter site");
            ea -= ka2 * (site_kernel(sc, r, solution.k_a) * solution.pol_a[s]);
            eb -= kb2 * (site_kernel(sc, r, solution.k_b) * solution.pol_b[s]);
        }
        map.field_a[flat] = ea;
        map.field_b[flat] = eb;
    });
    return map;
}

namespace {

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

struct LineFit {
    double slope = 0.0, intercept = 0.0, rms = 0.0;
    int count = 0;
};

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y,
                 const std::vector<std::uint8_t>& use) {
    LineFit f;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!use[i] || !std::isfinite(y[i])) continue;
        ++f.count;
        sx += x[i];
        sy += y[i];
        sxx += x[i] * x[i];
        sxy += x[i] * y[i];
    }
    if (f.count < 2) return f;
    const double den = f.count * sxx - sx * sx;
    f.slope = (f.count * sxy - sx * sy) / den;
    f.intercept = (sy - f.slope * sx) / f.count;
    double ss = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!use[i] || !std::isfinite(y[i])) continue;
        const double r = y[i] - (f.slope * x[i] + f.intercept);
        ss += r * r;
    }
    f.rms = std::sqrt(ss / f.count);
    return f;
}

}  // namespace

FwhmResult fwhm_lobe(const ScatterScenario& sc, const EmitterSet& emitters,
                     const FieldMap& xz_map, double x_min, double x_max) {
    sc.validate();
    const GridSpec& g = xz_map.grid;
    if (g.ny != 1) throw ConfigError("fwhm_lobe: map must be an x-z plane (ny == 1)");
    if (std::abs(g.origin.y()) > 1e-9)
        throw ConfigError("fwhm_lobe: map must lie in the y = 0 plane");
    if (g.nz < 3 || !(g.step.z() > 0.0))
        throw ConfigError("fwhm_lobe: need an increasing z axis");
    if (!(x_min < x_max)) throw ConfigError("fwhm_lobe: empty x range");
    const double foot = emitters.footprint();
    if (!(x_min > foot || x_max < -foot))
        throw ConfigError("fwhm_lobe: x range must lie strictly outside the array footprint");

    // index of the z = 0 row the in-plane reference values come from
    int kz0 = -1;
    for (int k = 0; k < g.nz; ++k)
        if (std::abs(g.origin.z() + k * g.step.z()) <= 1e-9 * std::max(1.0, g.step.z())) {
            kz0 = k;
            break;
        }
    if (kz0 < 0) throw ConfigError("fwhm_lobe: map must contain a z = 0 sample row");

    FwhmResult out;
    auto mag = [&](int i, int k) {
        return xz_map.field_b[static_cast<std::size_t>(i) +
                              static_cast<std::size_t>(g.nx) * static_cast<std::size_t>(k)]
            .norm();
    };
    for (int i = 0; i < g.nx; ++i) {
        const double x = g.origin.x() + i * g.step.x();
        if (x < x_min || x > x_max) continue;
        out.x.push_back(x);
        const double base = mag(i, kz0);
        const double half = 0.5 * base;
        double zc = std::numeric_limits<double>::quiet_NaN();
        std::uint8_t found = 0;
        if (base > 0.0) {
            for (int k = kz0; k + 1 < g.nz; ++k) {
                const double m0 = mag(i, k);
                const double m1 = mag(i, k + 1);
                if (m0 >= half && m1 < half) {
                    const double z0 = g.origin.z() + k * g.step.z();
                    const double frac = (m0 - half) / (m0 - m1);
                    zc = z0 + frac * g.step.z();
                    found = 1;
                    break;
                }
            }
        }
        out.z_half.push_back(zc);
        out.found.push_back(found);
    }
    if (out.x.empty()) throw ConfigError("fwhm_lobe: no map samples inside the x range");

    // centered 5-point running median over the located crossings
    const int m = static_cast<int>(out.x.size());
    out.z_half_smooth.assign(m, std::numeric_limits<double>::quiet_NaN());
    std::vector<std::uint8_t> smooth_ok(m, 0);
    for (int i = 0; i < m; ++i) {
        std::vector<double> window;
        for (int j = std::max(0, i - 2); j <= std::min(m - 1, i + 2); ++j)
            if (out.found[j]) window.push_back(out.z_half[j]);
        if (!window.empty()) {
            out.z_half_smooth[i] = median_of(window);
            smooth_ok[i] = 1;
        }
    }

    const LineFit raw = fit_line(out.x, out.z_half, out.found);
    const LineFit smooth = fit_line(out.x, out.z_half_smooth, smooth_ok);
    if (smooth.count < 2)
        throw NonConvergenceError("fwhm_lobe: fewer than two half-crossings in the window");
    out.spread_rate_raw = raw.slope;
    out.spread_rate = smooth.slope;
    out.fit_residual = smooth.rms;
    return out;
}

SpectrumResult spectrum_linecut(const FieldMap& map, int axis, int fixed1, int fixed2,
                                int component, FieldPart part, SpectralWindow window) {
    const GridSpec& g = map.grid;
    if (axis < 0 || axis > 2) throw ConfigError("spectrum_linecut: axis must be 0, 1 or 2");
    if (component < 0 || component > 5)
        throw ConfigError("spectrum_linecut: component must be 0..2 (E_a) or 3..5 (E_b)");
    const int dims[3] = {g.nx, g.ny, g.nz};
    const double steps[3] = {g.step.x(), g.step.y(), g.step.z()};
    const int n = dims[axis];
    if (n < 256) throw ConfigError("spectrum_linecut: need at least 256 samples along the cut");
    const double h = steps[axis];
    if (!(h > 0.0)) throw ConfigError("spectrum_linecut: cut axis has zero spacing");
    // remaining axes in ascending order take the fixed indices
    int other[2], nother = 0;
    for (int ax = 0; ax < 3; ++ax)
        if (ax != axis) other[nother++] = ax;
    const int fixed[2] = {fixed1, fixed2};
    for (int i = 0; i < 2; ++i)
        if (fixed[i] < 0 || fixed[i] >= dims[other[i]])
            throw ConfigError("spectrum_linecut: fixed index out of range");

    const bool from_b = component >= 3;
    const int comp = component % 3;
    std::vector<cplx> samples(n);
    for (int s = 0; s < n; ++s) {
        int idx[3];
        idx[axis] = s;
        idx[other[0]] = fixed[0];
        idx[other[1]] = fixed[1];
        const std::size_t flat = static_cast<std::size_t>(idx[0]) +
                                 static_cast<std::size_t>(g.nx) *
                                     (static_cast<std::size_t>(idx[1]) +
                                      static_cast<std::size_t>(g.ny) *
                                          static_cast<std::size_t>(idx[2]));
        const cplx v = from_b ? map.field_b[flat](comp) : map.field_a[flat](comp);
        switch (part) {
            case FieldPart::real_part: samples[s] = cplx(v.real(), 0.0); break;
            case FieldPart::imag_part: samples[s] = cplx(v.imag(), 0.0); break;
            case FieldPart::complex_full: samples[s] = v; break;
        }
    }

    std::vector<double> win(n, 1.0);
    if (window == SpectralWindow::hann)
        for (int s = 0; s < n; ++s)
            win[s] = 0.5 * (1.0 - std::cos(2.0 * pi * s / (n - 1)));
    double win_sum = 0.0;
    for (double w : win) win_sum += w;

    SpectrumResult out;
    out.bin_width = 1.0 / (n * h);  // in units 2 pi / d, lengths already in d
    out.q.resize(n);
    out.magnitude.resize(n);
    for (int bin = 0; bin < n; ++bin) {
        const int mfreq = bin - n / 2;
        cplx acc(0.0, 0.0);
        for (int s = 0; s < n; ++s)
            acc += samples[s] * win[s] *
                   std::exp(cplx(0.0, -2.0 * pi * mfreq * s / static_cast<double>(n)));
        out.q[bin] = mfreq / (n * h);
        out.magnitude[bin] = std::abs(acc) / win_sum;
    }

    const double med = median_of(out.magnitude);
    for (int bin = 1; bin + 1 < n; ++bin)
        if (out.magnitude[bin] > 5.0 * med && out.magnitude[bin] > out.magnitude[bin - 1] &&
            out.magnitude[bin] >= out.magnitude[bin + 1])
            out.peaks.push_back(bin);
    return out;
}

}  // namespace transducer
