#include "transducer/scenario.hpp"

#include <cmath>
#include <string>

namespace transducer {

void ScatterScenario::validate() const {
    if (!(lattice_d > 0.0)) throw ConfigError("scenario.d must be positive");
    if (!(delta_omega >= 0.0) || !std::isfinite(delta_omega))
        throw ConfigError("scenario.delta_omega must be >= 0 (signal is up-converted)");
    if (!std::isfinite(detuning)) throw ConfigError("scenario.detuning must be finite");
    if (eta == 0.0 || !std::isfinite(eta))
        throw ConfigError("scenario.eta must be positive (negative selects the default)");
    if (!(dip_a > 0.0) || !(dip_b > 0.0))
        throw ConfigError("scenario.dip_a and scenario.dip_b must be positive");
    if (std::norm(mix_a) > 1.0 + 1e-12)
        throw ConfigError("scenario.mix_a: |A|^2 must not exceed 1 (|A|^2 + |B|^2 = 1)");
    if (!std::isfinite(grating.x()) || !std::isfinite(grating.y()))
        throw ConfigError("scenario.grating must be finite");
    if (g_cutoff < 0) throw ConfigError("scenario.g_cutoff must be >= 0");
    if (crit_tol == 0.0) throw ConfigError("scenario.crit_tol must be positive (negative selects the default)");
    if (lattice_r_max == 0.0)
        throw ConfigError("scenario.lattice_r_max must be positive (negative selects the default)");
    if (!(lattice_tol > 0.0)) throw ConfigError("scenario.lattice_tol must be positive");
    if (lattice_max_doublings < 0 || lattice_max_doublings > 12)
        throw ConfigError("scenario.lattice_max_doublings must be in [0, 12]");
}

Resonance make_resonance(const ScatterScenario& sc, double omega_in) {
    if (!(omega_in > 0.0))
        throw ConfigError("incoming frequency must be positive (got " + std::to_string(omega_in) + ")");
    Resonance res;
    res.eta = sc.eta_eff();
    res.rho = cplx(sc.detuning, res.eta);
    res.omega_a = omega_in;
    res.omega_b = omega_in + sc.delta_omega;
    return res;
}

}  // namespace transducer
