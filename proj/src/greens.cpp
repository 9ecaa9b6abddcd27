#include "transducer/greens.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "transducer/parallel.hpp"
#include "transducer/smatrix.hpp"
#include "transducer/special.hpp"

namespace transducer {
namespace {

constexpr cplx imag_unit(0.0, 1.0);

// Both dipole kernels decompose as iso * I + rr * rhat rhat^T with scalars
// depending on |r| only.
struct KernelScalars {
    cplx iso, rr;
};

KernelScalars green_scalars(double r, cplx k) {
    const cplx kr = k * r;
    const cplx inv = 1.0 / kr;
    const cplx inv2 = inv * inv;
    const cplx pre = -std::exp(imag_unit * kr) / (4.0 * pi * r);
    return {pre * (1.0 + imag_unit * inv - inv2),
            pre * (-1.0 - 3.0 * imag_unit * inv + 3.0 * inv2)};
}

// Purely real difference K+ - G, evaluated at the real frequency Re(k).
KernelScalars rwa_correction_scalars(double r, double k_re) {
    const double x = k_re * r;
    const double c = -1.0 / (4.0 * pi * pi * k_re * r * r);
    const double c1 = c * exp_integral_fast(2, x);
    const double c2 = c * (exp_integral_fast(1, x) + exp_integral_fast(0, x));
    return {cplx(c1 + c2, 0.0), cplx(-(c1 + 3.0 * c2), 0.0)};
}

CMat3 assemble_kernel(const Vec3& r, const KernelScalars& s) {
    const Vec3 rhat = r.normalized();
    CMat3 out = s.iso * CMat3::Identity();
    out += s.rr * (rhat * rhat.transpose()).cast<cplx>();
    return out;
}

void check_resonance(const ScatterScenario& sc, const Resonance& res) {
    if (!(res.omega_a > 0.0))
        throw ConfigError("resonance: signal frequency must be positive");
    if (std::abs(res.omega_b - res.omega_a - sc.delta_omega) >
        1e-9 * std::max(1.0, res.omega_b))
        throw ConfigError("resonance: branch frequencies do not match the scenario frequency gap");
}

}  // namespace

CMat3 dyadic_green(const Vec3& r, cplx k) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw std::domain_error("dyadic_green: r must be nonzero");
    if (!(k.real() > 0.0)) throw std::domain_error("dyadic_green: Re(k) must be positive");
    return assemble_kernel(r, green_scalars(rn, k));
}

CMat3 rwa_green(const Vec3& r, cplx k) {
    const double rn = r.norm();
    if (!(rn > 0.0)) throw std::domain_error("rwa_green: r must be nonzero");
    if (!(k.real() > 0.0)) throw std::domain_error("rwa_green: Re(k) must be positive");
    KernelScalars s = green_scalars(rn, k);
    const KernelScalars c = rwa_correction_scalars(rn, k.real());
    s.iso += c.iso;
    s.rr += c.rr;
    return assemble_kernel(r, s);
}

double vacuum_decay(const ScatterScenario& sc, Branch sigma, double k_sigma) {
    if (!(k_sigma > 0.0)) throw ConfigError("vacuum_decay: field frequency must be positive");
    const double dip = sc.dipole(sigma);
    return std::norm(sc.mix(sigma)) * dip * dip * k_sigma * k_sigma * k_sigma / (3.0 * pi);
}

CMat3 rho_d_site(const ScatterScenario& sc, const Resonance& res, Branch sigma, const Vec3& r) {
    const cplx k = res.k(sigma);
    const CMat3 kernel = sc.rwa ? rwa_green(r, k) : dyadic_green(r, k);
    const double dip = sc.dipole(sigma);
    return (std::norm(sc.mix(sigma)) * dip * dip) * (k * k) * kernel;
}

std::vector<DiffractionChannel> diffraction_channels(const ScatterScenario& sc,
                                                     const Resonance& res, Branch sigma,
                                                     const Vec2& q_base, int g_radius,
                                                     const GFilter& filter) {
    check_resonance(sc, res);
    const int radius = g_radius >= 0 ? g_radius : sc.g_cutoff;
    const double omega = res.omega(sigma);
    const double dip = sc.dipole(sigma);
    const double weight = std::norm(sc.mix(sigma)) * dip * dip * omega * omega /
                          (4.0 * sc.lattice_d * sc.lattice_d);
    const cplx k_c = res.k(sigma);
    std::vector<DiffractionChannel> out;
    const std::vector<GIndex> orders = reciprocal_vectors(radius);
    out.reserve(2 * orders.size());
    for (const GIndex& g : orders) {
        if (filter && !filter(g)) continue;
        for (int sign : {+1, -1}) {
            DiffractionChannel ch;
            // q_base already contains every in-plane shift, so the kinematics
            // are evaluated on the shift-free branch; the tag is restored after.
            ch.mode = outgoing_wavevector(sc, q_base, omega, g, sign, Branch::a);
            ch.mode.branch = sigma;
            const Vec2 q = ch.mode.k_out.k_par;
            // principal sqrt: the argument has positive imaginary part, so
            // k_perp sits in the first quadrant for either classification
            const cplx k_perp = std::sqrt(k_c * k_c - cplx(q.squaredNorm(), 0.0));
            ch.inv_k_perp = 1.0 / k_perp;
            const double kz = sign * k_perp.real();
            std::optional<Vec2> axis;
            if (q.norm() <= 1e-12 * omega) axis = Vec2(1.0, 0.0);  // basis (x, y) at k_par = 0
            ch.pol_s = s_polarization(q, kz, axis);
            ch.pol_p = p_polarization(q, kz, axis);
            ch.weight = weight;
            out.push_back(std::move(ch));
        }
    }
    return out;
}

Mat3 branch_damping(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                    const Vec2& q_base, const GFilter& filter) {
    Mat3 out = Mat3::Zero();
    for (const DiffractionChannel& ch : diffraction_channels(sc, res, sigma, q_base, -1, filter)) {
        if (ch.mode.cls == ModeClass::evanescent) continue;
        const double flux = ch.inv_k_perp.real();  // Re(1/k_perp) >= 0
        out -= (ch.weight * flux) *
               (ch.pol_s * ch.pol_s.transpose() + ch.pol_p * ch.pol_p.transpose());
    }
    return out;
}

Mat3 im_rho_p_closed(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                     Branch frame, const GFilter& filter) {
    Mat3 out = Mat3::Zero();
    for (Branch sigma : {Branch::a, Branch::b}) {
        const Vec2 q = k_par + sc.branch_shift(sigma) - sc.branch_shift(frame);
        out += branch_damping(sc, res, sigma, q, filter);
    }
    return out;
}

namespace {

// ---- real-part lattice sum -------------------------------------------------

struct LatAcc {
    cplx xx{0.0, 0.0}, xy{0.0, 0.0}, yy{0.0, 0.0}, zz{0.0, 0.0};
};

LatAcc combine_acc(const LatAcc& a, const LatAcc& b) {
    return {a.xx + b.xx, a.xy + b.xy, a.yy + b.yy, a.zz + b.zz};
}

// C-infinity bump that is 1 up to r_max/2 and 0 at r_max. A smooth cutoff
// makes the truncation error of the oscillatory tail fall faster than any
// power of the radius, which the radius-doubling extrapolation then removes.
double planck_window(double r, double r_max) {
    if (r <= 0.5 * r_max) return 1.0;
    if (r >= r_max) return 0.0;
    const double t = (r_max - r) / (0.5 * r_max);  // in (0, 1)
    const double z = 1.0 / t + 1.0 / (t - 1.0);
    if (z > 700.0) return 0.0;
    if (z < -700.0) return 1.0;
    return 1.0 / (1.0 + std::exp(z));
}

// Rows of the half lattice {m > 0} U {m = 0, n > 0} inside radius ri (integer
// units); the other half is folded in through the 2 cos(q . r) pairing.
struct HalfPlaneRows {
    std::vector<int> m, n_min;
    std::vector<std::size_t> start;  // start[i]: first flat index of row i
};

HalfPlaneRows half_plane_rows(int ri) {
    HalfPlaneRows rows;
    rows.start.push_back(0);
    if (ri >= 1) {
        rows.m.push_back(0);
        rows.n_min.push_back(1);
        rows.start.push_back(rows.start.back() + static_cast<std::size_t>(ri));
        for (int m = 1; m <= ri; ++m) {
            const double rem = static_cast<double>(ri) * ri - static_cast<double>(m) * m;
            const int span = static_cast<int>(std::floor(std::sqrt(std::max(0.0, rem))));
            rows.m.push_back(m);
            rows.n_min.push_back(-span);
            rows.start.push_back(rows.start.back() + static_cast<std::size_t>(2 * span + 1));
        }
    }
    return rows;
}

LatAcc windowed_half_sum(const ScatterScenario& sc, cplx k, const Vec2& q, double r_max) {
    const double d = sc.lattice_d;
    const int ri = static_cast<int>(std::floor(r_max / d + 1e-9));
    const HalfPlaneRows rows = half_plane_rows(ri);
    const std::size_t total = rows.start.back();
    const double qxd = q.x() * d;
    const double qyd = q.y() * d;
    const double k_re = k.real();
    const bool rwa = sc.rwa;
    const auto accumulate = [&](std::size_t lo, std::size_t hi, LatAcc& acc) {
        std::size_t row = static_cast<std::size_t>(
                              std::upper_bound(rows.start.begin(), rows.start.end(), lo) -
                              rows.start.begin()) -
                          1;
        int mm = rows.m[row];
        int nn = rows.n_min[row] + static_cast<int>(lo - rows.start[row]);
        for (std::size_t idx = lo; idx < hi; ++idx) {
            if (idx >= rows.start[row + 1]) {
                ++row;
                mm = rows.m[row];
                nn = rows.n_min[row];
            }
            const double r2i = static_cast<double>(mm) * mm + static_cast<double>(nn) * nn;
            const double rd = d * std::sqrt(r2i);
            const double w = planck_window(rd, r_max);
            if (w > 0.0) {
                const double c2w = 2.0 * std::cos(qxd * mm + qyd * nn) * w;
                KernelScalars s = green_scalars(rd, k);
                if (rwa) {
                    const KernelScalars c = rwa_correction_scalars(rd, k_re);
                    s.iso += c.iso;
                    s.rr += c.rr;
                }
                acc.xx += c2w * (s.iso + s.rr * (static_cast<double>(mm) * mm / r2i));
                acc.xy += (c2w * (static_cast<double>(mm) * nn / r2i)) * s.rr;
                acc.yy += c2w * (s.iso + s.rr * (static_cast<double>(nn) * nn / r2i));
                acc.zz += c2w * s.iso;
            }
            ++nn;
        }
    };
    return chunked_reduce<LatAcc>(total, 8192, LatAcc{}, accumulate, combine_acc);
}

// Hermitian part of the per-branch momentum sum from one windowed real-space
// pass: Re[k^2 * sum], assembled into the planar (xx, xy, yy | zz) block form.
Mat3 from_acc(const LatAcc& acc, cplx k2, double pref) {
    Mat3 m = Mat3::Zero();
    m(0, 0) = pref * (k2 * acc.xx).real();
    m(0, 1) = m(1, 0) = pref * (k2 * acc.xy).real();
    m(1, 1) = pref * (k2 * acc.yy).real();
    m(2, 2) = pref * (k2 * acc.zz).real();
    return m;
}

}  // namespace

Mat3 branch_shift(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                  const Vec2& q_base, LatticeSumDiagnostics* diag) {
    check_resonance(sc, res);
    LatticeSumDiagnostics local;
    LatticeSumDiagnostics& dg = diag ? *diag : local;
    dg = LatticeSumDiagnostics{};
    const double mix2 = std::norm(sc.mix(sigma));
    const double dip = sc.dipole(sigma);
    const double pref = mix2 * dip * dip;
    if (pref == 0.0) return Mat3::Zero();
    const cplx k = res.k(sigma);
    const cplx k2 = k * k;
    const double omega = res.omega(sigma);
    // scale floor: one-emitter linewidth expressed in the same units, so a
    // coupling that sums to nearly zero is not chased to relative precision
    const double floor_scale = pref * omega * omega * omega / (6.0 * pi);
    double r_max = sc.lattice_r_max_eff();

    std::vector<Mat3> partials;
    std::vector<double> diffs;
    Mat3 result = Mat3::Zero();
    int increasing = 0;
    for (int j = 0;; ++j) {
        partials.push_back(from_acc(windowed_half_sum(sc, k, q_base, r_max), k2, pref));
        // Aitken delta^2 on the last three partial sums, entrywise; skipped
        // where the increments grow or nearly cancel (extrapolation unsafe)
        Mat3 extrap = partials.back();
        if (partials.size() >= 3) {
            const Mat3& s0 = partials[partials.size() - 3];
            const Mat3& s1 = partials[partials.size() - 2];
            const Mat3& s2 = partials.back();
            for (int r = 0; r < 3; ++r) {
                for (int c = 0; c < 3; ++c) {
                    const double d1 = s1(r, c) - s0(r, c);
                    const double d2 = s2(r, c) - s1(r, c);
                    const double den = d2 - d1;
                    if (std::abs(d2) <= std::abs(d1) && std::abs(den) > 0.05 * std::abs(d2)) {
                        const double cand = s2(r, c) - d2 * d2 / den;
                        // trust the accelerated value only while it stays within
                        // a couple of raw steps of the plain partial sum; slowly
                        // oscillating tails otherwise catapult it far off
                        if (std::abs(cand - s2(r, c)) <= 2.0 * std::abs(d2))
                            extrap(r, c) = cand;
                    }
                }
            }
        }
        result = extrap;
        dg.r_final = r_max;
        dg.doublings = j;
        if (partials.size() >= 2) {
            const Mat3& prev = partials[partials.size() - 2];
            const double scale = std::max(partials.back().cwiseAbs().maxCoeff(), floor_scale);
            const double diff = (partials.back() - prev).cwiseAbs().maxCoeff() / scale;
            diffs.push_back(diff);
            dg.achieved_tol = diff;
            if (diff <= sc.lattice_tol) {
                dg.converged = true;
                return result;
            }
            // Near a critical order the partial sums legitimately build up
            // like sqrt(R) for a while (growth ratio ~ sqrt(2) per doubling)
            // before settling; only super-geometric growth is a runaway.
            if (diffs.size() >= 2 && diff > 1.8 * diffs[diffs.size() - 2]) {
                if (++increasing >= 3)
                    throw NonConvergenceError(
                        "branch_shift: lattice sum diverging (3 radius doublings with "
                        "step growth above 1.8x, last relative step " +
                        std::to_string(diff) + ")");
            } else {
                increasing = 0;
            }
        }
        if (j >= sc.lattice_max_doublings) break;
        r_max *= 2.0;
    }
    dg.converged = false;  // stalled: best extrapolation is still returned
    return result;
}

Mat3 re_rho_p_lattice(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                      Branch frame, LatticeSumDiagnostics* diag) {
    check_resonance(sc, res);
    if (diag) *diag = LatticeSumDiagnostics{};
    Mat3 out = Mat3::Zero();
    for (Branch sigma : {Branch::a, Branch::b}) {
        const double mix2 = std::norm(sc.mix(sigma));
        if (mix2 == 0.0) continue;
        const Vec2 q = k_par + sc.branch_shift(sigma) - sc.branch_shift(frame);
        const BranchTensors t = SelfEnergyCache::global().get(sc, res, sigma, q);
        out += mix2 * t.shift;
        if (diag) {
            diag->achieved_tol = std::max(diag->achieved_tol, t.diag.achieved_tol);
            diag->r_final = std::max(diag->r_final, t.diag.r_final);
            diag->doublings = std::max(diag->doublings, t.diag.doublings);
            diag->converged = diag->converged && t.diag.converged;
        }
    }
    return out;
}

CMat3 self_energy(const ScatterScenario& sc, const Resonance& res, const Vec2& k_par,
                  Branch frame) {
    check_resonance(sc, res);
    Mat3 re = Mat3::Zero();
    Mat3 im = Mat3::Zero();
    for (Branch sigma : {Branch::a, Branch::b}) {
        const double mix2 = std::norm(sc.mix(sigma));
        if (mix2 == 0.0) continue;
        const Vec2 q = k_par + sc.branch_shift(sigma) - sc.branch_shift(frame);
        if (sc.zero_real_part) {
            // resonant idealization: the expensive Hermitian part is dropped,
            // so the cache is bypassed entirely
            im += branch_damping(sc, res, sigma, q);
        } else {
            const BranchTensors t = SelfEnergyCache::global().get(sc, res, sigma, q);
            re += mix2 * t.shift;
            im += mix2 * t.damping;
        }
    }
    return re.cast<cplx>() + imag_unit * im.cast<cplx>();
}

// ---- per-branch tensor cache -------------------------------------------------

namespace {

std::string tensor_key(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                       const Vec2& q) {
    const double fields[] = {
        1.0,  // record layout version
        q.x(),
        q.y(),
        res.omega(sigma),
        res.eta,
        sc.lattice_d,
        sc.dipole(sigma),
        sc.crit_tol_eff(),
        sc.lattice_r_max_eff(),
        sc.lattice_tol,
        static_cast<double>(sc.lattice_max_doublings),
        static_cast<double>(sc.g_cutoff),
        sigma == Branch::b ? 1.0 : 0.0,
        sc.rwa ? 1.0 : 0.0,
    };
    std::string key(sizeof(fields), '\0');
    std::memcpy(key.data(), fields, sizeof(fields));
    return key;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string record_name(const std::string& key) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "se-%016llx.bin",
                  static_cast<unsigned long long>(fnv1a(key)));
    return buf;
}

constexpr std::uint32_t disk_magic = 0x54534531;  // "TSE1"

bool load_record(const std::filesystem::path& path, const std::string& key, BranchTensors& out) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return false;
    std::uint32_t magic = 0, klen = 0;
    in.read(reinterpret_cast<char*>(&magic), sizeof magic);
    in.read(reinterpret_cast<char*>(&klen), sizeof klen);
    if (!in || magic != disk_magic || klen != key.size()) return false;
    std::string stored(klen, '\0');
    in.read(stored.data(), static_cast<std::streamsize>(klen));
    if (!in || stored != key) return false;  // hash collision or stale layout
    double shift[9], damping[9], diag[2];
    std::int32_t doublings = 0;
    std::uint8_t converged = 0;
    in.read(reinterpret_cast<char*>(shift), sizeof shift);
    in.read(reinterpret_cast<char*>(damping), sizeof damping);
    in.read(reinterpret_cast<char*>(diag), sizeof diag);
    in.read(reinterpret_cast<char*>(&doublings), sizeof doublings);
    in.read(reinterpret_cast<char*>(&converged), sizeof converged);
    if (!in) return false;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) {
            out.shift(r, c) = shift[3 * r + c];
            out.damping(r, c) = damping[3 * r + c];
        }
    out.diag.achieved_tol = diag[0];
    out.diag.r_final = diag[1];
    out.diag.doublings = doublings;
    out.diag.converged = converged != 0;
    return true;
}

void store_record(const std::filesystem::path& dir, const std::string& key,
                  const BranchTensors& t) {
    const std::string name = record_name(key);
    const auto tag = std::chrono::steady_clock::now().time_since_epoch().count();
    const std::filesystem::path tmp = dir / (name + ".tmp" + std::to_string(tag));
    {
        std::ofstream outf(tmp, std::ios::binary | std::ios::trunc);
        if (!outf) return;  // cache is best-effort
        const std::uint32_t magic = disk_magic;
        const std::uint32_t klen = static_cast<std::uint32_t>(key.size());
        double shift[9], damping[9], diag[2];
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c) {
                shift[3 * r + c] = t.shift(r, c);
                damping[3 * r + c] = t.damping(r, c);
            }
        diag[0] = t.diag.achieved_tol;
        diag[1] = t.diag.r_final;
        const std::int32_t doublings = t.diag.doublings;
        const std::uint8_t converged = t.diag.converged ? 1 : 0;
        outf.write(reinterpret_cast<const char*>(&magic), sizeof magic);
        outf.write(reinterpret_cast<const char*>(&klen), sizeof klen);
        outf.write(key.data(), static_cast<std::streamsize>(key.size()));
        outf.write(reinterpret_cast<const char*>(shift), sizeof shift);
        outf.write(reinterpret_cast<const char*>(damping), sizeof damping);
        outf.write(reinterpret_cast<const char*>(diag), sizeof diag);
        outf.write(reinterpret_cast<const char*>(&doublings), sizeof doublings);
        outf.write(reinterpret_cast<const char*>(&converged), sizeof converged);
        if (!outf) {
            outf.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            return;
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, dir / name, ec);
    if (ec) std::filesystem::remove(tmp, ec);
}

}  // namespace

struct SelfEnergyCache::Impl {
    mutable std::shared_mutex mu;
    std::unordered_map<std::string, BranchTensors> map;
    std::filesystem::path dir;
    bool use_disk = false;
};

SelfEnergyCache::SelfEnergyCache() : impl_(new Impl) {
    if (const char* env = std::getenv("TRANSDUCER_CACHE_DIR"); env && *env) {
        std::error_code ec;
        std::filesystem::create_directories(env, ec);
        if (std::filesystem::is_directory(env, ec)) {
            impl_->dir = env;
            impl_->use_disk = true;
        }
    }
}

SelfEnergyCache::~SelfEnergyCache() { delete impl_; }

SelfEnergyCache& SelfEnergyCache::global() {
    static SelfEnergyCache cache;
    return cache;
}

BranchTensors SelfEnergyCache::get(const ScatterScenario& sc, const Resonance& res, Branch sigma,
                                   const Vec2& q_base) {
    const std::string key = tensor_key(sc, res, sigma, q_base);
    {
        std::shared_lock lock(impl_->mu);
        if (const auto it = impl_->map.find(key); it != impl_->map.end()) return it->second;
    }
    BranchTensors t;
    bool loaded = false;
    if (impl_->use_disk) loaded = load_record(impl_->dir / record_name(key), key, t);
    if (!loaded) {
        // tensors are stored at unit mixing so one entry serves every |A|
        ScatterScenario unit = sc;
        unit.mix_a = sigma == Branch::a ? cplx(1.0, 0.0) : cplx(0.0, 0.0);
        t.shift = branch_shift(unit, res, sigma, q_base, &t.diag);
        t.damping = branch_damping(unit, res, sigma, q_base);
    }
    std::unique_lock lock(impl_->mu);
    const auto [it, inserted] = impl_->map.emplace(key, t);
    if (inserted && !loaded && impl_->use_disk) store_record(impl_->dir, key, it->second);
    return it->second;
}

void SelfEnergyCache::clear() {
    std::unique_lock lock(impl_->mu);
    impl_->map.clear();
}

std::size_t SelfEnergyCache::size() const {
    std::shared_lock lock(impl_->mu);
    return impl_->map.size();
}

}  // namespace transducer
