#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace nld {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
};

namespace quad {

/// Adaptive Gauss–Kronrod on a finite interval.
template <class F>
QuadResult kronrod(F&& f, double a, double b, double tol = 1e-10, unsigned depth = 15) {
    QuadResult r;
    r.value = boost::math::quadrature::gauss_kronrod<double, 31>::integrate(
        std::forward<F>(f), a, b, depth, tol, &r.error);
    return r;
}

/// Semi-infinite integral over [a, inf) of a decaying integrand.
template <class F>
QuadResult to_infinity(F&& f, double a, double tol = 1e-10) {
    boost::math::quadrature::exp_sinh<double> integrator;
    QuadResult r;
    r.value = integrator.integrate(std::forward<F>(f), a,
                                   std::numeric_limits<double>::infinity(), tol, &r.error);
    return r;
}

/// Surface area of the unit sphere S^{N-1}.
inline double surface_area(int dim) {
    return 2.0 * std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0);
}

/// Volume of the unit ball in R^N.
inline double ball_volume(int dim) {
    return std::pow(std::numbers::pi, dim / 2.0) / std::tgamma(dim / 2.0 + 1.0);
}

/// int_{R^N} exp(-c |z|^beta) dz, closed form via the gamma function.
inline double stretched_exponential_mass(double c, double beta, int dim) {
    if (c <= 0 || beta <= 0) throw std::invalid_argument("stretched_exponential_mass: c, beta > 0");
    return surface_area(dim) * std::tgamma(dim / beta) / (beta * std::pow(c, dim / beta));
}

/// int_{Xi}^{inf} r^{N-1} exp(-c r^beta) dr (radial tail of the above).
inline double stretched_exponential_radial_tail(double c, double beta, int dim, double xi) {
    const double z = c * std::pow(xi, beta);
    return boost::math::tgamma(static_cast<double>(dim) / beta, z) /
           (beta * std::pow(c, dim / beta));
}

} // namespace quad
} // namespace nld
