#pragma once

#include "nld/grid.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

namespace nld {

/// Exact-in-time spectral propagator for the linear flow dv/dt = J*v - v.
///
/// Multiplies the spectrum of v0 by exp(t (hat J_d(xi_k) - 1)) with hat J_d the
/// discrete symbol of the grid-sampled kernel. The discrete system is a Markov
/// semigroup: mass is conserved exactly, positivity preserved, sup norm
/// nonincreasing.
class LinearPropagator {
public:
    LinearPropagator(const KernelSpec& kernel, const Grid& grid)
        : grid_(grid), dk_(discretize(kernel, grid)), symbol_(discrete_symbol(dk_)) {}

    const Grid& grid() const { return grid_; }
    const DiscreteKernel& kernel() const { return dk_; }
    const std::vector<double>& symbol() const { return symbol_; }

    Field evolve(const Field& u0, double t) const {
        if (!(u0.grid == grid_)) throw std::invalid_argument("evolve: grid mismatch");
        if (t < 0) throw std::invalid_argument("evolve: t >= 0 required");
        if (t == 0.0) return u0;
        auto data = detail::raw_spectrum(u0);
        for (std::size_t k = 0; k < data.size(); ++k)
            data[k] *= std::exp(t * (symbol_[k] - 1.0));
        detail::dft_backward(data, grid_.dim, grid_.points_per_axis);
        Field out(grid_);
        const double inv = 1.0 / static_cast<double>(grid_.total());
        for (std::size_t k = 0; k < data.size(); ++k) out.values[k] = data[k].real() * inv;
        return out;
    }

private:
    Grid grid_;
    DiscreteKernel dk_;
    std::vector<double> symbol_;
};

inline Field evolve_linear(const Field& u0, const KernelSpec& kernel, double t) {
    return LinearPropagator(kernel, u0.grid).evolve(u0, t);
}

/// P(X > K) for X ~ Poisson(t): the analytic truncation tail of the
/// exponential series. Computed by the stable forward recurrence.
inline double poisson_tail(double t, int terms) {
    if (t < 0 || terms < 0) throw std::invalid_argument("poisson_tail: t >= 0, K >= 0");
    if (t > 700) throw std::invalid_argument("poisson_tail: t too large for direct evaluation");
    double term = std::exp(-t);
    double sum = term;
    for (int k = 1; k <= terms; ++k) {
        term *= t / k;
        sum += term;
    }
    return std::max(0.0, 1.0 - sum);
}

/// Smallest K with tail(t, K) * sup0 < tol.
inline int series_terms_for(double t, double sup0, double tol) {
    if (!(tol > 0)) throw std::invalid_argument("series_terms_for: tol > 0");
    if (sup0 <= 0) return 1;
    for (int k = 1; k < 4000; ++k)
        if (poisson_tail(t, k) * sup0 < tol) return k;
    throw numerical_error("series_terms_for: truncation target not reachable");
}

struct SeriesResult {
    Field field;
    double truncation_bound = 0.0; // sup-norm bound on the dropped series tail
    int terms = 0;
};

/// Truncated exponential series e^{-t}(u0 + sum_{k=1..K} t^k/k! J^{*(k)} * u0)
/// by iterated discrete convolution. The Dirac term is kept exact as e^{-t} u0.
inline SeriesResult series_k(const Field& u0, const DiscreteKernel& dk, double t, int terms) {
    if (t < 0 || terms < 1) throw std::invalid_argument("series_k: t >= 0 and K >= 1 required");
    SeriesResult res;
    res.terms = terms;
    res.field = Field(u0.grid);
    const double e = std::exp(-t);
    Field v = u0;
    for (std::size_t i = 0; i < v.size(); ++i) res.field.values[i] = e * u0.values[i];
    double coeff = e;
    for (int k = 1; k <= terms; ++k) {
        v = convolve(dk.field, v);
        coeff *= t / k;
        for (std::size_t i = 0; i < v.size(); ++i) res.field.values[i] += coeff * v.values[i];
    }
    res.truncation_bound = poisson_tail(t, terms) * linf_norm(u0);
    return res;
}

inline SeriesResult series_k(const Field& u0, const KernelSpec& kernel, double t, int terms) {
    return series_k(u0, discretize(kernel, u0.grid), t, terms);
}

/// psi(t,.) = e^{-t} sum_{k=1..K} t^k/k! J^{*(k)} as a grid field.
inline Field psi_field(const DiscreteKernel& dk, double t, int terms) {
    if (t < 0 || terms < 1) throw std::invalid_argument("psi_field: t >= 0 and K >= 1 required");
    Field acc(dk.field.grid);
    Field jk = dk.field;
    double coeff = std::exp(-t);
    for (int k = 1; k <= terms; ++k) {
        coeff *= t / k;
        for (std::size_t i = 0; i < jk.size(); ++i) acc.values[i] += coeff * jk.values[i];
        if (k < terms) jk = convolve(dk.field, jk);
    }
    return acc;
}

/// h^N sum psi(t,.): contracts to 1 - e^{-t} within truncation + quadrature slack.
inline double psi_mass(const DiscreteKernel& dk, double t, int terms) {
    if (t == 0.0) return 0.0;
    return total_mass(psi_field(dk, t, terms));
}

inline double psi_mass(const KernelSpec& kernel, const Grid& grid, double t, int terms) {
    return psi_mass(discretize(kernel, grid), t, terms);
}

struct GaValue {
    double value = 0.0;
    double abs_error = 0.0; // quadrature estimate + certified cutoff tail
    bool converged = true;
};

/// G_A(y) = (2pi)^{-N} int e^{i y . xi} e^{-A |xi|^beta} d xi, by radial
/// quadrature with a cutoff certified by the analytic tail bound.
inline GaValue profile_g_a(double amp, double beta, double y, int dim) {
    if (!(amp > 0) || !(beta > 0) || beta > 2.0)
        throw std::invalid_argument("profile_g_a: need A > 0 and 0 < beta <= 2");
    if (dim != 1 && dim != 2) throw std::invalid_argument("profile_g_a: dim must be 1 or 2");
    y = std::abs(y);
    // cutoff with int_{|xi|>Xi} e^{-A|xi|^beta} <= 1e-10 (relative to the mass scale)
    double xi_cut = std::pow(30.0 / amp, 1.0 / beta);
    const double target = 1e-10 * quad::stretched_exponential_mass(amp, beta, dim) /
                          quad::surface_area(dim);
    while (quad::stretched_exponential_radial_tail(amp, beta, dim, xi_cut) > target)
        xi_cut *= 1.5;
    GaValue out;
    QuadResult q;
    if (dim == 1) {
        q = quad::kronrod(
            [&](double xi) { return std::cos(y * xi) * std::exp(-amp * std::pow(xi, beta)); },
            0.0, xi_cut, 1e-11, 20);
        out.value = q.value / std::numbers::pi;
        out.abs_error = q.error / std::numbers::pi;
    } else {
        q = quad::kronrod(
            [&](double xi) {
                return xi * std::cyl_bessel_j(0, y * xi) * std::exp(-amp * std::pow(xi, beta));
            },
            0.0, xi_cut, 1e-11, 20);
        out.value = q.value / (2.0 * std::numbers::pi);
        out.abs_error = q.error / (2.0 * std::numbers::pi);
    }
    const double tail = quad::surface_area(dim) *
                        quad::stretched_exponential_radial_tail(amp, beta, dim, xi_cut) /
                        std::pow(2.0 * std::numbers::pi, dim);
    out.abs_error += tail;
    out.converged = out.abs_error <= 1e-7 * std::max(std::abs(out.value), 1e-3);
    return out;
}

struct DecayFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    bool boundary_clean = true;
};

/// log-log regression of the linear flow's sup norm over [t1, t2].
/// The slope estimates -N/beta.
///
/// `subtract_mean` removes the conserved torus mean (mass/(2L)^N) before
/// taking sup norms; on a periodic box the raw sup norm saturates at that
/// mean, which is a wrap artifact of the full-space problem.
inline DecayFit decay_fit(const KernelSpec& kernel, const Field& u0, double t1, double t2,
                          int samples, bool subtract_mean = true,
                          double boundary_frac = 1e-4) {
    if (!(t1 >= 1.0) || !(t2 > t1)) throw std::invalid_argument("decay_fit: need 1 <= t1 < t2");
    if (samples < 5) throw std::invalid_argument("decay_fit: need at least 5 samples");
    LinearPropagator prop(kernel, u0.grid);
    const double mean = subtract_mean
                            ? total_mass(u0) / std::pow(2.0 * u0.grid.half_width, u0.grid.dim)
                            : 0.0;
    std::vector<double> lt(samples), ln(samples);
    DecayFit out;
    for (int i = 0; i < samples; ++i) {
        const double t = t1 * std::pow(t2 / t1, static_cast<double>(i) / (samples - 1));
        const Field v = prop.evolve(u0, t);
        double sup = 0.0;
        for (double x : v.values) sup = std::max(sup, std::abs(x - mean));
        if (!(sup > 0)) throw numerical_error("decay_fit: vanishing sup norm");
        lt[i] = std::log(t);
        ln[i] = std::log(sup);
        if (i == samples - 1)
            out.boundary_clean = boundary_mass(v) <= boundary_frac * l1_norm(v);
    }
    const auto fit = detail::fit_line(lt, ln);
    out.slope = fit.slope;
    out.intercept = fit.intercept;
    out.r2 = fit.r2;
    return out;
}

struct DecayConstant {
    double value = 0.0;       // empirical C with a 2x safety factor applied
    double safety = 2.0;
    std::vector<double> probes;
};

/// Empirical constant for the sup-norm decay bound
/// ||v(t)||_inf <= C (||v0||_1 + ||hat v0||_1) / (1+t)^{N/beta}.
/// The bound's C is non-constructive; this estimates it on a probe set.
inline DecayConstant estimate_decay_constant(const KernelSpec& kernel, const Field& u0,
                                             std::span<const double> probe_ts) {
    if (probe_ts.empty()) throw std::invalid_argument("estimate_decay_constant: no probes");
    const FourierExpansion e = estimate_expansion(kernel);
    LinearPropagator prop(kernel, u0.grid);
    const double denom = l1_norm(u0) + spectrum_l1(u0);
    if (!(denom > 0)) throw std::invalid_argument("estimate_decay_constant: trivial data");
    DecayConstant out;
    out.probes.assign(probe_ts.begin(), probe_ts.end());
    double worst = 0.0;
    for (double t : probe_ts) {
        const double sup = linf_norm(prop.evolve(u0, t));
        worst = std::max(worst, sup * std::pow(1.0 + t, u0.grid.dim / e.beta) / denom);
    }
    out.value = out.safety * worst;
    return out;
}

struct ProfileFloor {
    double gamma = 0.0; // floor level: v(t) >= gamma / t^{N/beta} on the ball below
    double m = 0.0;     // ball radius factor: |x| <= m t^{1/beta}
    double tau0 = 0.0;  // smallest probe time at which the floor was verified
};

/// Empirical (gamma, m) for the rescaled floor of the linear flow started from
/// the indicator of B_R, fitted on probe times (both constants are
/// non-constructive in closed form).
inline ProfileFloor fit_profile_floor(const KernelSpec& kernel, double R, const Grid& grid,
                                      std::span<const double> taus) {
    if (!(R > 0) || taus.empty()) throw std::invalid_argument("fit_profile_floor: bad inputs");
    const FourierExpansion e = estimate_expansion(kernel);
    LinearPropagator prop(kernel, grid);
    const Field u0 = grid.dim == 1
                         ? sample(grid, [&](double x) { return std::abs(x) <= R ? 1.0 : 0.0; })
                         : sample(grid, [&](double x, double y) {
                               return std::hypot(x, y) <= R ? 1.0 : 0.0;
                           });
    const double nb = grid.dim / e.beta;
    // rescaled center values and profiles s_tau(y) = tau^{N/beta} v(tau, y tau^{1/beta})
    const int ny = 64;
    std::vector<double> floor_y(ny, std::numeric_limits<double>::infinity());
    double center_min = std::numeric_limits<double>::infinity();
    double y_max = 0.0;
    // widest usable y so the rescaled point stays inside the box at all probes
    for (double tau : taus)
        y_max = y_max == 0.0 ? grid.half_width * 0.5 / std::pow(tau, 1.0 / e.beta)
                             : std::min(y_max, grid.half_width * 0.5 / std::pow(tau, 1.0 / e.beta));
    for (double tau : taus) {
        const Field v = prop.evolve(u0, tau);
        const double scale = std::pow(tau, nb);
        for (int iy = 0; iy < ny; ++iy) {
            const double y = y_max * iy / (ny - 1);
            const double x = y * std::pow(tau, 1.0 / e.beta);
            const int idx = static_cast<int>(std::lround((x + grid.half_width) / grid.spacing()));
            const double s = scale * (grid.dim == 1 ? v.at(idx) : v.at(idx, grid.origin_index()));
            floor_y[iy] = std::min(floor_y[iy], s);
        }
        center_min = std::min(center_min, floor_y[0]);
    }
    ProfileFloor out;
    int best = 0;
    for (int iy = 0; iy < ny; ++iy) {
        if (floor_y[iy] >= 0.5 * center_min)
            best = iy;
        else
            break;
    }
    out.m = y_max * best / (ny - 1);
    double level = std::numeric_limits<double>::infinity();
    for (int iy = 0; iy <= best; ++iy) level = std::min(level, floor_y[iy]);
    out.gamma = 0.5 * level;
    out.tau0 = *std::min_element(taus.begin(), taus.end());
    if (!(out.gamma > 0) || !(out.m > 0))
        throw numerical_error("fit_profile_floor: could not establish a positive floor");
    return out;
}

} // namespace nld
