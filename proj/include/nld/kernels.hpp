#pragma once

#include "nld/detail/stats.hpp"
#include "nld/quadrature.hpp"

#include <boost/math/special_functions/beta.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nld {

/// Raised when a numerical routine cannot certify its result
/// (quadrature non-convergence, transform integrity failures, ...).
class numerical_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class KernelFamily { gaussian, laplace, compact_bump, algebraic_tail, cauchy, tabulated };

inline std::string family_name(KernelFamily f) {
    switch (f) {
        case KernelFamily::gaussian: return "gaussian";
        case KernelFamily::laplace: return "laplace";
        case KernelFamily::compact_bump: return "compact_bump";
        case KernelFamily::algebraic_tail: return "algebraic_tail";
        case KernelFamily::cauchy: return "cauchy";
        case KernelFamily::tabulated: return "tabulated";
    }
    return "?";
}

/// Small-frequency expansion hat J(xi) = 1 - A |xi|^beta + o(|xi|^beta),
/// estimated by a log-log fit of 1 - hat J over a frequency window.
struct FourierExpansion {
    double beta = 0.0;
    double amplitude = 0.0;       // A
    double window_lo = 0.0;
    double window_hi = 0.0;
    double residual = 0.0;        // max relative fit error over the window
    bool clamped = false;         // fit exceeded beta = 2 and was clamped (reported, not silent)
    bool low_confidence = false;  // residual above threshold
    std::optional<double> second_moment; // nullopt == infinite
};

/// A radial probability kernel J on R^N: nonnegative, bounded, unit mass.
///
/// Immutable after construction; evaluation, transforms and ball masses are
/// const and safe to call concurrently.
class KernelSpec {
public:
    static KernelSpec gaussian(double sigma, int dim) {
        require_dim(dim);
        if (!(sigma > 0)) throw std::invalid_argument("gaussian kernel: sigma > 0 required");
        KernelSpec k(KernelFamily::gaussian, dim);
        k.a_ = sigma;
        k.norm_ = std::pow(2.0 * std::numbers::pi * sigma * sigma, -dim / 2.0);
        return k;
    }

    static KernelSpec laplace(double lambda, int dim) {
        require_dim(dim);
        if (!(lambda > 0)) throw std::invalid_argument("laplace kernel: lambda > 0 required");
        KernelSpec k(KernelFamily::laplace, dim);
        k.a_ = lambda;
        k.norm_ = dim == 1 ? lambda / 2.0
                           : lambda * lambda / (2.0 * std::numbers::pi);
        return k;
    }

    static KernelSpec compact_bump(double radius, int dim) {
        require_dim(dim);
        if (!(radius > 0)) throw std::invalid_argument("compact_bump kernel: radius > 0 required");
        KernelSpec k(KernelFamily::compact_bump, dim);
        k.a_ = radius;
        // shape exp(-1/(1-(r/R)^2)) on [0,R); smooth with essential zeros at the edge
        auto shape = [radius](double r) {
            const double q = r / radius;
            if (q >= 1.0) return 0.0;
            return std::exp(-1.0 / (1.0 - q * q));
        };
        const auto m = quad::kronrod(
            [&](double r) { return std::pow(r, dim - 1) * shape(r); }, 0.0, radius, 1e-13);
        k.norm_ = 1.0 / (quad::surface_area(dim) * m.value);
        return k;
    }

    /// J(x) = c (r0^2 + |x|^2)^{-alpha/2}: smooth core with an exact |x|^{-alpha} tail.
    static KernelSpec algebraic_tail(double alpha, double core_radius, int dim) {
        require_dim(dim);
        if (!(alpha > dim))
            throw std::invalid_argument("algebraic_tail kernel: alpha > N required");
        if (!(core_radius > 0))
            throw std::invalid_argument("algebraic_tail kernel: core radius > 0 required");
        KernelSpec k(KernelFamily::algebraic_tail, dim);
        k.a_ = alpha;
        k.b_ = core_radius;
        // int_0^inf r^{N-1} (r0^2+r^2)^{-alpha/2} dr = r0^{N-alpha}/2 * B(N/2, (alpha-N)/2)
        const double radial = 0.5 * std::pow(core_radius, dim - alpha) *
                              boost::math::beta(dim / 2.0, (alpha - dim) / 2.0);
        k.norm_ = 1.0 / (quad::surface_area(dim) * radial);
        return k;
    }

    static KernelSpec cauchy() {
        KernelSpec k(KernelFamily::cauchy, 1);
        k.norm_ = 1.0 / std::numbers::pi;
        return k;
    }

    /// Piecewise-linear radial profile from (radius, value) samples;
    /// renormalized to unit mass at construction.
    static KernelSpec tabulated(std::vector<std::pair<double, double>> samples, int dim) {
        require_dim(dim);
        if (samples.size() < 4)
            throw std::invalid_argument("tabulated kernel: need at least 4 radial samples");
        for (std::size_t i = 0; i < samples.size(); ++i) {
            if (samples[i].first < 0 || !std::isfinite(samples[i].first) ||
                !std::isfinite(samples[i].second))
                throw std::invalid_argument("tabulated kernel: non-finite or negative radius");
            if (samples[i].second < 0)
                throw std::invalid_argument("tabulated kernel: negative density value");
            if (i > 0 && !(samples[i].first > samples[i - 1].first))
                throw std::invalid_argument("tabulated kernel: radii must be strictly increasing");
        }
        KernelSpec k(KernelFamily::tabulated, dim);
        k.tab_ = std::move(samples);
        const double mass = quad::surface_area(dim) * k.tab_radial_moment(dim - 1);
        if (!(mass > 0))
            throw std::invalid_argument("tabulated kernel: zero total mass");
        for (auto& s : k.tab_) s.second /= mass;
        k.norm_ = 1.0;
        return k;
    }

    KernelFamily family() const { return family_; }
    int dim() const { return dim_; }

    /// Kernel parameters as a flat string map (used by config serialization).
    std::map<std::string, std::string> to_params() const {
        std::map<std::string, std::string> p;
        p["family"] = family_name(family_);
        p["dim"] = std::to_string(dim_);
        switch (family_) {
            case KernelFamily::gaussian: p["sigma"] = detail::format_full(a_); break;
            case KernelFamily::laplace: p["lambda"] = detail::format_full(a_); break;
            case KernelFamily::compact_bump: p["radius"] = detail::format_full(a_); break;
            case KernelFamily::algebraic_tail:
                p["alpha"] = detail::format_full(a_);
                p["core_radius"] = detail::format_full(b_);
                break;
            case KernelFamily::cauchy: break;
            case KernelFamily::tabulated: p["samples"] = std::to_string(tab_.size()); break;
        }
        return p;
    }

    /// J as a function of r = |x|.
    double radial(double r) const {
        r = std::abs(r);
        switch (family_) {
            case KernelFamily::gaussian: return norm_ * std::exp(-r * r / (2.0 * a_ * a_));
            case KernelFamily::laplace: return norm_ * std::exp(-a_ * r);
            case KernelFamily::compact_bump: {
                const double q = r / a_;
                if (q >= 1.0) return 0.0;
                return norm_ * std::exp(-1.0 / (1.0 - q * q));
            }
            case KernelFamily::algebraic_tail:
                return norm_ * std::pow(b_ * b_ + r * r, -a_ / 2.0);
            case KernelFamily::cauchy: return norm_ / (1.0 + r * r);
            case KernelFamily::tabulated: return tab_interp(r);
        }
        return 0.0;
    }

    double eval(double x) const {
        if (dim_ != 1) throw std::invalid_argument("eval(x): kernel is not one-dimensional");
        return radial(std::abs(x));
    }
    double eval(double x, double y) const {
        if (dim_ != 2) throw std::invalid_argument("eval(x,y): kernel is not two-dimensional");
        return radial(std::hypot(x, y));
    }
    double eval(std::span<const double> x) const {
        if (static_cast<int>(x.size()) != dim_)
            throw std::invalid_argument("eval: point dimension mismatch");
        return dim_ == 1 ? radial(std::abs(x[0])) : radial(std::hypot(x[0], x[1]));
    }

    /// hat J(|xi|) = int exp(-i xi . x) J(x) dx; real-valued (J real, radial) in [-1, 1].
    double hat(double xi) const { return 1.0 - one_minus_hat(xi); }

    /// 1 - hat J(|xi|), computed without cancellation near xi = 0.
    double one_minus_hat(double xi) const {
        xi = std::abs(xi);
        if (xi == 0.0) return 0.0;
        switch (family_) {
            case KernelFamily::gaussian:
                return -std::expm1(-a_ * a_ * xi * xi / 2.0);
            case KernelFamily::laplace: {
                const double q = (xi / a_) * (xi / a_);
                if (dim_ == 1) return q / (1.0 + q);
                // 2D transform of the exponential profile: (1 + q)^{-3/2}
                return 1.0 - std::pow(1.0 + q, -1.5);
            }
            case KernelFamily::cauchy:
                return -std::expm1(-xi);
            default:
                return one_minus_hat_numeric(xi);
        }
    }

    /// m2 = int |x|^2 J(x) dx; nullopt flags +infinity.
    std::optional<double> second_moment() const {
        switch (family_) {
            case KernelFamily::gaussian: return dim_ * a_ * a_;
            case KernelFamily::laplace: return dim_ * (dim_ + 1) / (a_ * a_);
            case KernelFamily::cauchy: return std::nullopt;
            case KernelFamily::algebraic_tail: {
                if (a_ <= dim_ + 2) return std::nullopt;
                const double radial = 0.5 * std::pow(b_, dim_ + 2 - a_) *
                                      boost::math::beta((dim_ + 2) / 2.0, (a_ - dim_ - 2) / 2.0);
                return norm_ * quad::surface_area(dim_) * radial;
            }
            case KernelFamily::compact_bump: {
                const auto m = quad::kronrod(
                    [&](double r) { return std::pow(r, dim_ + 1) * radial(r); }, 0.0, a_, 1e-12);
                return quad::surface_area(dim_) * m.value;
            }
            case KernelFamily::tabulated:
                return quad::surface_area(dim_) * tab_radial_moment(dim_ + 1);
        }
        return std::nullopt;
    }

    /// int_{|x| <= R} J(x) dx.
    double ball_mass(double R) const {
        if (R <= 0) return 0.0;
        switch (family_) {
            case KernelFamily::gaussian:
                if (dim_ == 1) return std::erf(R / (a_ * std::numbers::sqrt2));
                return -std::expm1(-R * R / (2.0 * a_ * a_));
            case KernelFamily::laplace:
                if (dim_ == 1) return -std::expm1(-a_ * R);
                return 1.0 - (1.0 + a_ * R) * std::exp(-a_ * R);
            case KernelFamily::cauchy:
                return 2.0 / std::numbers::pi * std::atan(R);
            case KernelFamily::algebraic_tail: {
                const double t = R * R / (b_ * b_ + R * R);
                return boost::math::ibeta(dim_ / 2.0, (a_ - dim_) / 2.0, t);
            }
            default: {
                const double hi = std::min(R, support_radius());
                const auto m = quad::kronrod(
                    [&](double r) { return std::pow(r, dim_ - 1) * radial(r); }, 0.0, hi, 1e-12);
                return std::min(1.0, quad::surface_area(dim_) * m.value);
            }
        }
    }

    /// int_{|x| > R} J(x) dx, computed without cancellation for heavy tails.
    double tail_mass(double R) const {
        if (R <= 0) return 1.0;
        if (family_ == KernelFamily::algebraic_tail) {
            const double t = R * R / (b_ * b_ + R * R);
            return boost::math::ibetac(dim_ / 2.0, (a_ - dim_) / 2.0, t);
        }
        return std::max(0.0, 1.0 - ball_mass(R));
    }

    /// int_{|z - y| <= R} J(z) dz for an offset |y| = center_dist (radial J).
    double offcenter_ball_mass(double center_dist, double R) const {
        const double r0 = std::abs(center_dist);
        if (r0 == 0.0) return ball_mass(R);
        if (dim_ == 1) {
            // one-sided cumulative: int_0^x J = ball_mass(x)/2
            const double a = r0 - R, b = r0 + R;
            if (a >= 0) return 0.5 * (ball_mass(b) - ball_mass(a));
            return 0.5 * (ball_mass(b) + ball_mass(-a));
        }
        // 2D: integrate the radial profile against the wedge angle subtended by
        // the shifted disk on each circle |z| = r.
        auto wedge = [&](double r) {
            if (r <= 0) return 2.0 * std::numbers::pi;
            const double c = (r * r + r0 * r0 - R * R) / (2.0 * r * r0);
            if (c <= -1.0) return 2.0 * std::numbers::pi;
            if (c >= 1.0) return 0.0;
            return 2.0 * std::acos(c);
        };
        double total = 0.0;
        const double inner = std::max(0.0, R - r0);
        if (inner > 0) total += ball_mass(inner);
        const double lo = std::abs(R - r0), hi = std::min(R + r0, support_radius());
        if (hi > lo) {
            const auto m = quad::kronrod(
                [&](double r) { return r * radial(r) * wedge(r); }, lo, hi, 1e-11);
            total += m.value;
        }
        return total;
    }

    /// Radius beyond which J vanishes identically (+inf for full-support families).
    double support_radius() const {
        if (family_ == KernelFamily::compact_bump) return a_;
        if (family_ == KernelFamily::tabulated) return tab_.back().first;
        return std::numeric_limits<double>::infinity();
    }

    double sigma() const { return a_; }        // gaussian
    double lambda() const { return a_; }       // laplace
    double radius() const { return a_; }       // compact_bump
    double alpha() const { return a_; }        // algebraic_tail
    double core_radius() const { return b_; }  // algebraic_tail

private:
    KernelSpec(KernelFamily f, int dim) : family_(f), dim_(dim) {}

    static void require_dim(int dim) {
        if (dim != 1 && dim != 2)
            throw std::invalid_argument("kernel dimension must be 1 or 2");
    }

    double tab_interp(double r) const {
        if (r <= tab_.front().first) return tab_.front().second;
        if (r >= tab_.back().first) return 0.0;
        auto it = std::upper_bound(tab_.begin(), tab_.end(), r,
                                   [](double v, const auto& s) { return v < s.first; });
        const auto& hi = *it;
        const auto& lo = *(it - 1);
        const double w = (r - lo.first) / (hi.first - lo.first);
        return lo.second + w * (hi.second - lo.second);
    }

    /// int_0^inf r^k * profile(r) dr with exact per-segment polynomial integration.
    double tab_radial_moment(int k) const {
        double acc = 0.0;
        // leading flat piece [0, r_1]
        auto seg = [k](double a, double b, double va, double vb) {
            // linear v(r) on [a,b] against r^k
            const double s = (vb - va) / (b - a);
            const double c0 = va - s * a;
            const double bk1 = std::pow(b, k + 1), ak1 = std::pow(a, k + 1);
            const double bk2 = std::pow(b, k + 2), ak2 = std::pow(a, k + 2);
            return c0 * (bk1 - ak1) / (k + 1) + s * (bk2 - ak2) / (k + 2);
        };
        if (tab_.front().first > 0)
            acc += tab_.front().second * std::pow(tab_.front().first, k + 1) / (k + 1);
        for (std::size_t i = 0; i + 1 < tab_.size(); ++i)
            acc += seg(tab_[i].first, tab_[i + 1].first, tab_[i].second, tab_[i + 1].second);
        return acc;
    }

    /// Tabulated profiles integrate segment by segment over the table's
    /// breakpoints: each piece of the interpolant is smooth, so the adaptive
    /// rule certifies it (a single sweep could miss features narrower than
    /// its node spacing).
    double tabulated_one_minus_hat(double xi) const {
        double value = 0.0, err = 0.0;
        auto piece = [&](double a, double b) {
            if (!(b > a)) return;
            QuadResult q;
            if (dim_ == 1) {
                q = quad::kronrod(
                    [&](double r) {
                        return 2.0 * std::pow(std::sin(xi * r / 2.0), 2) * tab_interp(r);
                    },
                    a, b, 1e-11, 17);
                value += 2.0 * q.value;
                err += 2.0 * q.error;
            } else {
                q = quad::kronrod(
                    [&](double r) {
                        return r * (1.0 - std::cyl_bessel_j(0, xi * r)) * tab_interp(r);
                    },
                    a, b, 1e-11, 17);
                value += 2.0 * std::numbers::pi * q.value;
                err += 2.0 * std::numbers::pi * q.error;
            }
        };
        piece(0.0, tab_.front().first);
        for (std::size_t i = 0; i + 1 < tab_.size(); ++i)
            piece(tab_[i].first, tab_[i + 1].first);
        if (err > std::max(1e-8, 1e-5 * std::abs(value)))
            throw numerical_error(
                "tabulated kernel transform did not converge; provide more radial samples");
        return value;
    }

    /// 1 - hat J(xi) = int (1 - cos(xi . x)) J(x) dx via radial quadrature.
    ///
    /// Substituting u = xi * r keeps the oscillation count fixed; the heavy
    /// tail beyond u = K_osc is replaced by its exact mass (the neglected
    /// oscillatory remainder is O(J(K/xi)/xi), relatively ~K^{-alpha}).
    double one_minus_hat_numeric(double xi) const {
        if (family_ == KernelFamily::tabulated) return tabulated_one_minus_hat(xi);
        constexpr double k_osc = 64.0 * std::numbers::pi;
        const double rmax = support_radius();
        const double u_end = std::isfinite(rmax) ? std::min(k_osc, xi * rmax) : k_osc;
        const unsigned depth = 21;
        double band;
        if (dim_ == 1) {
            QuadResult q = quad::kronrod(
                [&](double u) {
                    const double c = 2.0 * std::pow(std::sin(u / 2.0), 2); // 1 - cos u
                    return c * radial(u / xi);
                },
                0.0, u_end, 1e-9, depth);
            band = 2.0 / xi * q.value;
        } else {
            QuadResult q = quad::kronrod(
                [&](double u) {
                    return u * (1.0 - std::cyl_bessel_j(0, u)) * radial(u / xi);
                },
                0.0, u_end, 1e-9, depth);
            band = 2.0 * std::numbers::pi / (xi * xi) * q.value;
        }
        double tail = 0.0;
        if (!std::isfinite(rmax) || xi * rmax > k_osc) tail = tail_mass(u_end / xi);
        return band + tail;
    }

    KernelFamily family_;
    int dim_;
    double a_ = 0.0;      // family-specific: sigma / lambda / radius / alpha
    double b_ = 0.0;      // algebraic_tail core radius
    double norm_ = 1.0;   // multiplies the shape so that int J = 1
    std::vector<std::pair<double, double>> tab_;
};

namespace detail {

/// Power-law fit d ~ A * xi^beta in log-log coordinates; clamps beta at 2
/// (reported via the flag, never silently).
inline FourierExpansion fit_power_law(std::span<const double> xis, std::span<const double> ds) {
    std::vector<double> lx(xis.size()), ld(ds.size());
    for (std::size_t i = 0; i < xis.size(); ++i) {
        lx[i] = std::log(xis[i]);
        ld[i] = std::log(ds[i]);
    }
    const LinearFit fit = fit_line(lx, ld);
    FourierExpansion e;
    e.beta = fit.slope;
    e.amplitude = std::exp(fit.intercept);
    if (e.beta > 2.0) {
        e.clamped = true;
        e.beta = 2.0;
        double acc = 0.0;
        for (std::size_t i = 0; i < xis.size(); ++i) acc += ld[i] - 2.0 * lx[i];
        e.amplitude = std::exp(acc / static_cast<double>(xis.size()));
    }
    double worst = 0.0;
    for (std::size_t i = 0; i < xis.size(); ++i) {
        const double pred = e.amplitude * std::pow(xis[i], e.beta);
        worst = std::max(worst, std::abs(pred / ds[i] - 1.0));
    }
    e.residual = worst;
    e.low_confidence = worst > 0.05;
    return e;
}

} // namespace detail

/// Least-squares fit of log(1 - hat J) = log A + beta log xi over the window.
inline FourierExpansion estimate_expansion(const KernelSpec& kernel,
                                           std::pair<double, double> window = {1e-3, 1e-2},
                                           int points = 16) {
    const auto [lo, hi] = window;
    if (!(0 < lo && lo < hi))
        throw std::invalid_argument("estimate_expansion: window must satisfy 0 < lo < hi");
    if (points < 3) throw std::invalid_argument("estimate_expansion: need >= 3 points");
    std::vector<double> xis(points), ds(points);
    for (int i = 0; i < points; ++i) {
        xis[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1));
        ds[i] = kernel.one_minus_hat(xis[i]);
        if (!(ds[i] > 0) || !std::isfinite(ds[i]))
            throw std::invalid_argument(
                "estimate_expansion: 1 - hat J is not positive on the window");
    }
    FourierExpansion e = detail::fit_power_law(xis, ds);
    e.window_lo = lo;
    e.window_hi = hi;
    e.second_moment = kernel.second_moment();
    if (!(e.beta > 0))
        throw numerical_error("estimate_expansion: fitted exponent is not positive");
    return e;
}

/// p_F = beta / N.
inline double fujita_exponent(const FourierExpansion& e, int dim) {
    if (dim < 1) throw std::invalid_argument("fujita_exponent: dimension >= 1");
    return e.beta / dim;
}

/// min over |xi| in [xi0, xi_max] of (1 - hat J); positive for genuine kernels.
inline double spectral_gap(const KernelSpec& kernel, double xi0, double xi_max, int samples = 400) {
    if (!(0 < xi0 && xi0 < xi_max)) throw std::invalid_argument("spectral_gap: bad range");
    double gap = std::numeric_limits<double>::infinity();
    for (int i = 0; i < samples; ++i) {
        const double xi = xi0 * std::pow(xi_max / xi0, static_cast<double>(i) / (samples - 1));
        gap = std::min(gap, kernel.one_minus_hat(xi));
    }
    return gap;
}

} // namespace nld
