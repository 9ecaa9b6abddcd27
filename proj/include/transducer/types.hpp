#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace transducer {

using cplx = std::complex<double>;
using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Mat3 = Eigen::Matrix3d;
using CMat3 = Eigen::Matrix3cd;

// Integer reciprocal-lattice index (m, n); physical vector is (2*pi/d)*(m, n).
using GIndex = Eigen::Vector2i;

inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi = 2.0 * pi;

// Photon branch: 'a' rides the signal transition, 'b' the idler transition.
enum class Branch { a, b };

inline const char* to_string(Branch br) { return br == Branch::a ? "a" : "b"; }

// Diffraction-order classification against the light cone.
enum class ModeClass { radiant, evanescent, critical };

inline const char* to_string(ModeClass c) {
    switch (c) {
        case ModeClass::radiant: return "radiant";
        case ModeClass::evanescent: return "evanescent";
        default: return "critical";
    }
}

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct NonConvergenceError : std::runtime_error {
    explicit NonConvergenceError(const std::string& what) : std::runtime_error(what) {}
};

struct IllConditionedError : std::runtime_error {
    double condition_number;
    IllConditionedError(const std::string& what, double cond)
        : std::runtime_error(what), condition_number(cond) {}
};

}  // namespace transducer
