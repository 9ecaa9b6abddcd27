#pragma once

namespace transducer {

// exp_integral(j, x) = \int_0^inf u^j e^{-u} / (u^2 + x^2) du for j in
// {0, 1, 2} and x > 0. These weight the algebraic (purely real) correction
// that turns the full dipole kernel into its positive-frequency part.
//
// Adaptive quadrature with the tail mapped through u = t/(1-t); for large x
// the equivalent factorial series (truncated at its smallest term) is used.
// Relative accuracy 1e-10 or better. Throws std::domain_error for x < 1e-8
// (j = 0, 1 diverge as x -> 0) or j outside {0, 1, 2}.
double exp_integral(int j, double x);

// Fast evaluation for kernel assembly loops: cubic interpolation of
// log exp_integral on a precomputed logarithmic grid over [1e-3, 40]
// (built thread-safely on first use), series above, exact quadrature below.
// Relative accuracy ~1e-11; callers that need the full 1e-10 contract on
// isolated points should use exp_integral() directly.
double exp_integral_fast(int j, double x);

namespace detail {
// The two evaluation paths, exposed so tests can cross-validate them in the
// overlap region. exp_integral() switches between them at x = 40.
double exp_integral_quadrature(int j, double x);
double exp_integral_series(int j, double x);
}  // namespace detail

}  // namespace transducer

