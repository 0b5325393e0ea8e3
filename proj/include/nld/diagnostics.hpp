#pragma once

#include "nld/semigroup.hpp"

#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace nld {

/// Thrown by the pointwise growth solution at or beyond its singular time.
class singularity_error : public std::domain_error {
public:
    singularity_error(const std::string& what, double t_singular)
        : std::domain_error(what), singular_time(t_singular) {}
    double singular_time;
};

namespace detail {

inline void require_radial_nonneg(const Field& u) {
    const int M = u.grid.points_per_axis;
    double sup = 0.0, asym = 0.0, neg = 0.0;
    for (double v : u.values) {
        sup = std::max(sup, std::abs(v));
        neg = std::min(neg, v);
    }
    auto mirror1 = [&](int i) { return (M - i) % M; };
    if (u.grid.dim == 1) {
        for (int i = 0; i < M; ++i)
            asym = std::max(asym, std::abs(u.at(i) - u.at(mirror1(i))));
    } else {
        for (int i = 0; i < M; ++i)
            for (int j = 0; j < M; ++j) {
                asym = std::max(asym, std::abs(u.at(i, j) - u.at(mirror1(i), mirror1(j))));
                asym = std::max(asym, std::abs(u.at(i, j) - u.at(j, i)));
            }
    }
    if (neg < -1e-12 * std::max(1.0, sup))
        throw std::invalid_argument("frequency functional: initial data must be nonnegative");
    if (asym > 1e-10 * std::max(1.0, sup))
        throw std::invalid_argument(
            "frequency functional: initial data must be radial about the origin");
}

} // namespace detail

/// f(t) = int exp(t (hat J(xi) - 1)) hat u0(xi) d xi on the discrete frequency
/// lattice, with the kernel's true transform and hat u0 from the DFT.
/// Requires u0 nonnegative and radial about the origin.
inline double kaplan_f(const KernelSpec& kernel, const Field& u0, double t) {
    if (t < 0) throw std::invalid_argument("kaplan_f: t >= 0 required");
    if (kernel.dim() != u0.grid.dim) throw std::invalid_argument("kaplan_f: dimension mismatch");
    detail::require_radial_nonneg(u0);
    const auto spectrum = continuum_spectrum(u0);
    const Grid& g = u0.grid;
    const int M = g.points_per_axis;
    // hat J is radial: evaluate once per axis frequency magnitude
    std::vector<double> axis_decay(M);
    if (g.dim == 1) {
        for (int k = 0; k < M; ++k) axis_decay[k] = kernel.one_minus_hat(g.frequency(k));
    }
    double re = 0.0, im = 0.0;
    for (std::size_t idx = 0; idx < spectrum.size(); ++idx) {
        double d;
        if (g.dim == 1) {
            d = axis_decay[idx];
        } else {
            d = kernel.one_minus_hat(g.freq_radius(idx));
        }
        const double mult = std::exp(-t * d);
        re += mult * spectrum[idx].real();
        im += mult * spectrum[idx].imag();
    }
    const double cell = g.freq_cell();
    if (std::abs(im) > 1e-8 * std::max(1.0, std::abs(re)))
        throw numerical_error("kaplan_f: non-negligible imaginary part");
    return cell * re;
}

/// Dual form (2pi)^N (e^{-t} u0(0) + h^N sum psi_K(t,.) u0): pairs the initial
/// data with the truncated series semigroup. Agrees with kaplan_f within
/// series truncation + lattice tolerance.
inline double kaplan_f_dual(const KernelSpec& kernel, const Field& u0, double t, int terms) {
    if (t < 0) throw std::invalid_argument("kaplan_f_dual: t >= 0 required");
    detail::require_radial_nonneg(u0);
    const Grid& g = u0.grid;
    const double twopi_n = std::pow(2.0 * std::numbers::pi, g.dim);
    if (t == 0.0) return twopi_n * u0.origin_value();
    const Field psi = psi_field(discretize(kernel, g), t, terms);
    double pair = 0.0;
    for (std::size_t i = 0; i < psi.size(); ++i) pair += psi.values[i] * u0.values[i];
    pair *= std::pow(g.spacing(), g.dim);
    return twopi_n * (std::exp(-t) * u0.origin_value() + pair);
}

/// G = (1/2) int_{R^N} e^{-2 A |z|^beta} dz, the constant of the lower bound
/// f(t) >= G ||u0||_1 / t^{N/beta}. Computed by certified quadrature.
inline double kaplan_lower_bound_constant(const FourierExpansion& e, int dim) {
    if (!(e.amplitude > 0) || !(e.beta > 0))
        throw std::invalid_argument("lower bound constant: invalid expansion");
    const double c = 2.0 * e.amplitude;
    double xi_cut = std::pow(40.0 / c, 1.0 / e.beta);
    while (quad::stretched_exponential_radial_tail(c, e.beta, dim, xi_cut) >
           1e-14 * std::tgamma(dim / e.beta) / (e.beta * std::pow(c, dim / e.beta)))
        xi_cut *= 1.5;
    const auto q = quad::kronrod(
        [&](double r) { return std::pow(r, dim - 1) * std::exp(-c * std::pow(r, e.beta)); }, 0.0,
        xi_cut, 1e-12, 18);
    return 0.5 * quad::surface_area(dim) * q.value;
}

/// Lower bound G ||u0||_1 t^{-N/beta}.
inline double kaplan_lower_bound(const FourierExpansion& e, int dim, double u0_l1, double t) {
    if (!(t > 0)) throw std::invalid_argument("kaplan_lower_bound: t > 0 required");
    return kaplan_lower_bound_constant(e, dim) * u0_l1 * std::pow(t, -static_cast<double>(dim) / e.beta);
}

/// Upper bound (2pi)^N ( ((p+1)/p)^{1/p} t^{-1/p} + e^{-t} u0(0) ), valid for
/// global solutions.
inline double kaplan_upper_bound(double p, double u0_at_origin, double t, int dim) {
    if (!(t > 0) || !(p > 0))
        throw std::invalid_argument("kaplan_upper_bound: t > 0 and p > 0 required");
    return std::pow(2.0 * std::numbers::pi, dim) *
           (std::pow((p + 1.0) / p, 1.0 / p) * std::pow(t, -1.0 / p) +
            std::exp(-t) * u0_at_origin);
}

/// Two-sided report of the frequency functional along a time grid.
struct KaplanReport {
    std::vector<double> t;
    std::vector<double> f;
    std::vector<double> f_dual;
    std::vector<double> lower;  // G ||u0||_1 t^{-N/beta}
    std::vector<double> upper;  // (2pi)^N (((p+1)/p)^{1/p} t^{-1/p} + e^{-t} u0(0))
    double lower_constant = 0.0; // G
    double p = 0.0;
};

inline KaplanReport assemble_kaplan_report(const KernelSpec& kernel, const Field& u0,
                                           std::span<const double> t_grid, double p,
                                           double series_tol = 1e-10) {
    KaplanReport rep;
    rep.p = p;
    const FourierExpansion e = estimate_expansion(kernel);
    rep.lower_constant = kaplan_lower_bound_constant(e, kernel.dim());
    const double u0_l1 = l1_norm(u0);
    const double u00 = u0.origin_value();
    const double sup0 = linf_norm(u0);
    for (double t : t_grid) {
        rep.t.push_back(t);
        rep.f.push_back(kaplan_f(kernel, u0, t));
        const int terms = series_terms_for(t, sup0, series_tol);
        rep.f_dual.push_back(kaplan_f_dual(kernel, u0, t, terms));
        rep.lower.push_back(t > 0 ? kaplan_lower_bound(e, kernel.dim(), u0_l1, t)
                                  : std::numeric_limits<double>::infinity());
        rep.upper.push_back(t > 0 ? kaplan_upper_bound(p, u00, t, kernel.dim())
                                  : std::numeric_limits<double>::infinity());
    }
    return rep;
}

/// Dimension-only constant of the shifted-ball inequality
/// int_{|z-y|<=R} J >= C_N int_{|z|<=R} J for |y| < R and radial J.
/// C_1 = 1/2 exactly; for N >= 2 a ratio of incomplete cosine-power integrals
/// with theta* = arccos(2^{-1/(N-1)}).
inline double ball_constant_c_n(int dim) {
    if (dim < 1) throw std::invalid_argument("ball_constant_c_n: N >= 1");
    if (dim == 1) return 0.5;
    const double theta_star = std::acos(std::pow(2.0, -1.0 / (dim - 1)));
    double c = 1.0;
    for (int j = 1; j <= dim - 1; ++j) {
        const int e = dim - 1 - j; // cosine power of the j-th angle
        const auto num = quad::kronrod(
            [e](double th) { return std::pow(std::cos(th), e); }, -theta_star, theta_star, 1e-13);
        double den;
        if (j == dim - 1) {
            den = 2.0 * std::numbers::pi; // the last angle spans a full circle
        } else {
            den = std::sqrt(std::numbers::pi) * std::tgamma((e + 1) / 2.0) /
                  std::tgamma(e / 2.0 + 1.0);
        }
        c *= num.value / den;
    }
    return c;
}

/// lambda_min(R, p) = (1 - C_N int_{|z|<=R} J)^{1/p}: indicator data
/// lambda 1_{|x|<=R} with lambda above this threshold blow up.
inline double blowup_threshold(const KernelSpec& kernel, double R, double p) {
    if (!(R > 0) || !(p > 0))
        throw std::invalid_argument("blowup_threshold: R > 0 and p > 0 required");
    const double inside = 1.0 - ball_constant_c_n(kernel.dim()) * kernel.ball_mass(R);
    return std::pow(inside, 1.0 / p);
}

struct BallShiftReport {
    bool holds = true;
    double min_margin = 0.0; // min over samples of lhs - C_N * rhs
    int samples = 0;
};

/// Monte Carlo check of the shifted-ball inequality: random centers y in B_R,
/// ball masses by deterministic quadrature.
inline BallShiftReport mc_ball_shift(const KernelSpec& kernel, double R, int samples,
                                     std::uint64_t seed) {
    if (!(R > 0) || samples < 1) throw std::invalid_argument("mc_ball_shift: bad inputs");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double cn = ball_constant_c_n(kernel.dim());
    const double rhs = cn * kernel.ball_mass(R);
    BallShiftReport rep;
    rep.samples = samples;
    rep.min_margin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        double r0;
        if (kernel.dim() == 1) {
            r0 = R * unif(rng);
        } else {
            r0 = R * std::sqrt(unif(rng)); // uniform over the disk, radial part
        }
        const double lhs = kernel.offcenter_ball_mass(r0, R);
        rep.min_margin = std::min(rep.min_margin, lhs - rhs);
    }
    rep.holds = rep.min_margin >= -1e-9;
    return rep;
}

struct ExtinctionCertificate {
    double delta = 0.0;        // smallness threshold on ||u0||_1 + ||hat u0||_1
    bool small_enough = false; // the supplied data size is below delta
    double g_limit = 0.0;      // g(inf) when bounded, +inf otherwise
    std::function<double(double)> g; // supersolution factor, g(0) = 1, nondecreasing
};

/// Supercritical extinction certificate (p > beta/N): the smallness threshold
/// delta = (1/C) ((pN/beta - 1)/p)^{1/p} and the supersolution factor g(t).
/// C is the empirical linear-decay constant (estimate_decay_constant).
inline ExtinctionCertificate extinction_certificate(double p, const FourierExpansion& e, int dim,
                                                    double u0_size, double c_est) {
    if (!(c_est > 0)) throw std::invalid_argument("extinction_certificate: C > 0 required");
    const double q = p * dim / e.beta - 1.0;
    if (!(q > 0))
        throw std::domain_error(
            "extinction_certificate: requires the supercritical regime p > beta/N");
    ExtinctionCertificate cert;
    cert.delta = std::pow(q / p, 1.0 / p) / c_est;
    cert.small_enough = u0_size < cert.delta;
    const double factor = p * std::pow(c_est * u0_size, p) / q;
    cert.g = [factor, p, q](double t) {
        const double den = 1.0 - factor * (1.0 - std::pow(1.0 + t, -q));
        if (den <= 0.0) return std::numeric_limits<double>::infinity();
        return std::pow(den, -1.0 / p);
    };
    cert.g_limit = factor < 1.0 ? std::pow(1.0 - factor, -1.0 / p)
                                : std::numeric_limits<double>::infinity();
    return cert;
}

/// w(t, X) = X (1 - eps p t X^p)^{-1/p}: the pointwise growth solution of
/// dw/dt = eps w^{1+p}, w(0) = X. Convex and increasing in X.
inline double hairtrigger_w(double t, double X, double eps, double p) {
    if (!(X >= 0)) throw std::invalid_argument("hairtrigger_w: X >= 0 required");
    if (!(eps > 0) || !(p > 0)) throw std::invalid_argument("hairtrigger_w: eps, p > 0 required");
    if (t < 0) throw std::invalid_argument("hairtrigger_w: t >= 0 required");
    if (X == 0.0) return 0.0;
    const double t_sing = 1.0 / (eps * p * std::pow(X, p));
    if (t >= t_sing)
        throw singularity_error("hairtrigger_w: at or beyond the singular time " +
                                    detail::format_full(t_sing),
                                t_sing);
    return X * std::pow(1.0 - eps * p * t * std::pow(X, p), -1.0 / p);
}

/// Horizon T(tau) = (1/(eps p)) (tau^{pN/beta} ((1-eps) gamma)^{-p} - (1-eps)^{-p});
/// positive for tau large, and T(tau)/tau -> 0 when p < beta/(2N).
inline double hairtrigger_horizon(double tau, double eps, double p, double gamma, int dim,
                                  double beta) {
    if (!(tau > 0)) throw std::invalid_argument("hairtrigger_horizon: tau > 0 required");
    if (!(eps > 0) || eps >= 1 || !(p > 0) || !(gamma > 0) || !(beta > 0))
        throw std::invalid_argument("hairtrigger_horizon: bad parameters");
    const double om = 1.0 - eps;
    return (std::pow(tau, p * dim / beta) / (std::pow(om, p) * std::pow(gamma, p)) -
            1.0 / std::pow(om, p)) /
           (eps * p);
}

struct SubsolutionReport {
    double max_residual = -std::numeric_limits<double>::infinity(); // signed sup over (t,x)
    double linf_w = 0.0;          // sup over the scenario of |W|
    double max_w = 0.0;           // max W value seen (should stay <= 1 - eps)
    bool below_capacity = true;   // W <= 1 - eps everywhere sampled
    std::vector<double> residuals; // per (t, x), t-major; for refinement studies
};

/// Discrete residual of the traveling-in-X subsolution W(t,x) = w(t, Phi(t,x)),
/// where Phi evolves under the linear flow from Phi0. Checks
/// dW/dt - (J*W - W) - W^{1+p}(1-W) <= tol at grid points, with the time
/// derivative by centered differences of half-width fd_delta.
inline SubsolutionReport subsolution_residual(const KernelSpec& kernel, double eps, double p,
                                              const Field& phi0, std::span<const double> t_grid,
                                              double fd_delta = 0.01) {
    if (!(fd_delta > 0)) throw std::invalid_argument("subsolution_residual: fd_delta > 0");
    LinearPropagator prop(kernel, phi0.grid);
    SubsolutionReport rep;
    auto w_of = [&](double t, const Field& phi) {
        Field w(phi.grid);
        for (std::size_t i = 0; i < phi.size(); ++i) {
            const double X = std::max(phi.values[i], 0.0);
            w.values[i] = X == 0.0 ? 0.0 : hairtrigger_w(t, X, eps, p);
        }
        return w;
    };
    rep.residuals.reserve(t_grid.size() * phi0.size());
    for (double t : t_grid) {
        if (t < fd_delta)
            throw std::invalid_argument("subsolution_residual: t_grid must start above fd_delta");
        const Field wm = w_of(t - fd_delta, prop.evolve(phi0, t - fd_delta));
        const Field w0 = w_of(t, prop.evolve(phi0, t));
        const Field wp = w_of(t + fd_delta, prop.evolve(phi0, t + fd_delta));
        const Field jw = convolve(prop.kernel().field, w0);
        for (std::size_t i = 0; i < w0.size(); ++i) {
            const double wv = w0.values[i];
            const double dwdt = (wp.values[i] - wm.values[i]) / (2.0 * fd_delta);
            const double react = wv <= 0.0 ? 0.0 : std::pow(wv, 1.0 + p) * (1.0 - wv);
            const double resid = dwdt - (jw.values[i] - wv) - react;
            rep.residuals.push_back(resid);
            rep.max_residual = std::max(rep.max_residual, resid);
            rep.linf_w = std::max(rep.linf_w, std::abs(wv));
            rep.max_w = std::max(rep.max_w, wv);
        }
    }
    rep.below_capacity = rep.max_w <= 1.0 - eps + 1e-9;
    return rep;
}

} // namespace nld
