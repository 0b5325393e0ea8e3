#pragma once

// Independent numerical oracles for the test suite. These deliberately avoid
// the library's quadrature and transform helpers so that expected values come
// from a separate computational route.

#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

namespace oracle {

/// Composite Simpson rule with Richardson refinement until two successive
/// halvings agree to `tol` (absolute).
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      double tol = 1e-12, int max_levels = 22) {
    auto pass = [&](long n) {
        const double h = (b - a) / n;
        double s = f(a) + f(b);
        for (long i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(a + i * h);
        return s * h / 3.0;
    };
    long n = 64;
    double prev = pass(n);
    for (int lvl = 0; lvl < max_levels; ++lvl) {
        n *= 2;
        const double cur = pass(n);
        if (std::abs(cur - prev) < tol) return cur;
        prev = cur;
    }
    throw std::runtime_error("oracle::simpson did not converge");
}

/// x(t) for x' = a x^{1+p} - b x, x(0) = x0, via the substitution y = x^{-p}
/// (y' = -pa + pb y). Blow-up when y reaches 0.
inline double bernoulli_solution(double t, double a, double b, double p, double x0) {
    const double y0 = std::pow(x0, -p);
    double y;
    if (b == 0.0) {
        y = y0 - p * a * t;
    } else {
        y = (y0 - a / b) * std::exp(p * b * t) + a / b;
    }
    if (y <= 0.0) throw std::domain_error("bernoulli_solution: past blow-up");
    return std::pow(y, -1.0 / p);
}

/// Blow-up time of the same equation (requires x0 > (b/a)^{1/p}).
inline double bernoulli_blowup_time(double a, double b, double p, double x0) {
    if (b == 0.0) return std::pow(x0, -p) / (p * a);
    const double r = a / b;
    return std::log(r / (r - std::pow(x0, -p))) / (p * b);
}

/// Classical RK4 integration of a scalar ODE x' = f(x), fixed step.
inline double rk4(const std::function<double(double)>& f, double x0, double t, int steps) {
    double x = x0;
    const double h = t / steps;
    for (int i = 0; i < steps; ++i) {
        const double k1 = f(x);
        const double k2 = f(x + 0.5 * h * k1);
        const double k3 = f(x + 0.5 * h * k2);
        const double k4 = f(x + h * k3);
        x += h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4);
    }
    return x;
}

} // namespace oracle
