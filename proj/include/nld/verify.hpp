#pragma once

#include "nld/diagnostics.hpp"
#include "nld/semigroup.hpp"
#include "nld/solver.hpp"

#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace nld {

struct VerifyResult {
    std::string name;
    bool pass = false;
    std::string detail;
};

namespace verify {

namespace detail_v {

inline VerifyResult make(const std::string& name, bool pass, const std::string& detail) {
    return {name, pass, detail};
}

inline std::string num(double v) {
    std::ostringstream os;
    os.precision(6);
    os << v;
    return os.str();
}

} // namespace detail_v

/// |hat J| <= 1 with equality only at 0, and a positive spectral gap away from 0.
inline VerifyResult check_hat_bounds(const KernelSpec& kernel, double xi0 = 0.05,
                                     double xi_max = 100.0) {
    double worst = -1.0;
    for (int i = 0; i < 400; ++i) {
        const double xi = xi0 * std::pow(xi_max / xi0, i / 399.0);
        const double h = kernel.hat(xi);
        if (std::abs(h) > 1.0 + 1e-12)
            return detail_v::make("hat-bounds", false, "|hat J| exceeds 1 at xi=" + detail_v::num(xi));
        worst = std::max(worst, std::abs(h));
    }
    const double gap = spectral_gap(kernel, xi0, xi_max);
    const bool pass = gap > 0.0 && kernel.hat(0.0) == 1.0;
    return detail_v::make("hat-bounds", pass,
                          "spectral gap " + detail_v::num(gap) + ", sup|hat J| away from 0 = " +
                              detail_v::num(worst));
}

/// Finite-second-moment kernels: fitted beta = 2 and A = m2/(2N).
inline VerifyResult check_expansion_m2(const KernelSpec& kernel) {
    const auto m2 = kernel.second_moment();
    if (!m2) return detail_v::make("expansion-m2", false, "expected a finite second moment");
    const FourierExpansion e = estimate_expansion(kernel);
    const double a_ref = *m2 / (2.0 * kernel.dim());
    const bool pass = std::abs(e.beta - 2.0) < 0.05 && std::abs(e.amplitude / a_ref - 1.0) < 0.03;
    return detail_v::make("expansion-m2", pass,
                          "beta=" + detail_v::num(e.beta) + " A=" + detail_v::num(e.amplitude) +
                              " m2/(2N)=" + detail_v::num(a_ref));
}

/// p_F is invariant under the rescaling J_s(x) = s^N J(s x).
inline VerifyResult check_fujita_rescale() {
    const auto base = estimate_expansion(KernelSpec::gaussian(1.0, 1));
    const auto half = estimate_expansion(KernelSpec::gaussian(2.0, 1));   // s = 1/2
    const auto twice = estimate_expansion(KernelSpec::gaussian(0.5, 1));  // s = 2
    const double pf = fujita_exponent(base, 1);
    const bool pass = std::abs(fujita_exponent(half, 1) - pf) < 0.02 &&
                      std::abs(fujita_exponent(twice, 1) - pf) < 0.02;
    return detail_v::make("fujita-rescale", pass, "p_F = " + detail_v::num(pf));
}

/// Convolution commutativity and positivity on random nonnegative fields.
inline VerifyResult check_convolution(std::uint64_t seed) {
    const Grid g(1, 10.0, 128);
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Field a(g), b(g);
    for (auto& v : a.values) v = unif(rng);
    for (auto& v : b.values) v = unif(rng);
    const Field ab = convolve(a, b);
    const Field ba = convolve(b, a);
    double sym = 0.0, neg = 0.0;
    for (std::size_t i = 0; i < ab.size(); ++i) {
        sym = std::max(sym, std::abs(ab.values[i] - ba.values[i]));
        neg = std::min(neg, ab.values[i]);
    }
    const bool pass = sym <= 1e-12 * std::max(1.0, linf_norm(ab)) && neg >= -1e-12;
    return detail_v::make("convolution", pass,
                          "commutator " + detail_v::num(sym) + ", min " + detail_v::num(neg));
}

/// Linear flow conserves mass to 1e-10 and preserves positivity.
inline VerifyResult check_linear_conservation(const KernelSpec& kernel) {
    const Grid g(kernel.dim(), 20.0, kernel.dim() == 1 ? 256 : 64);
    const Field u0 =
        kernel.dim() == 1
            ? sample(g, [](double x) { return std::exp(-x * x / 2.0); })
            : sample(g, [](double x, double y) { return std::exp(-(x * x + y * y) / 2.0); });
    LinearPropagator prop(kernel, g);
    const double m0 = l1_norm(u0);
    bool pass = true;
    double worst = 0.0, neg = 0.0;
    for (double t : {0.5, 2.0, 10.0}) {
        const Field v = prop.evolve(u0, t);
        worst = std::max(worst, std::abs(l1_norm(v) - m0));
        for (double x : v.values) neg = std::min(neg, x);
    }
    pass = worst <= 1e-10 && neg >= -1e-12;
    return detail_v::make("linear-conservation", pass,
                          "mass drift " + detail_v::num(worst) + ", min " + detail_v::num(neg));
}

/// psi mass identity h^N sum psi(t) = 1 - e^{-t}. Takes the discrete kernel
/// directly so faults (e.g. broken normalization) can be injected by tests.
inline VerifyResult check_psi_mass(const DiscreteKernel& dk, double t = 1.0) {
    const int terms = series_terms_for(t, 1.0, 1e-10);
    const double mass = psi_mass(dk, t, terms);
    const double expected = -std::expm1(-t);
    const double err = std::abs(mass - expected);
    return detail_v::make("psi-mass", err <= poisson_tail(t, terms) + 1e-8,
                          "|err| = " + detail_v::num(err) + " at t=" + detail_v::num(t));
}

/// Frequency-side and series-side functional agree (duality).
inline VerifyResult check_kaplan_duality() {
    const Grid g(1, 20.0, 256);
    const KernelSpec kernel = KernelSpec::gaussian(1.0, 1);
    const Field u0 = sample(g, [](double x) { return std::exp(-x * x / 2.0); });
    double worst = 0.0;
    for (double t : {1.0, 5.0}) {
        const double f = kaplan_f(kernel, u0, t);
        const double fd = kaplan_f_dual(kernel, u0, t, series_terms_for(t, 1.0, 1e-12));
        worst = std::max(worst, std::abs(f - fd) / std::abs(f));
    }
    return detail_v::make("kaplan-duality", worst <= 1e-4, "rel gap " + detail_v::num(worst));
}

/// Closed forms of the shifted-ball constant.
inline VerifyResult check_ball_constant() {
    const double c1 = ball_constant_c_n(1);
    const double c2 = ball_constant_c_n(2);
    const bool pass = c1 == 0.5 && std::abs(c2 - 1.0 / 3.0) <= 1e-10;
    bool inside = true;
    for (int n : {1, 2, 3, 4}) {
        const double c = ball_constant_c_n(n);
        inside = inside && c > 0.0 && c < 1.0;
    }
    return detail_v::make("ball-constant", pass && inside,
                          "C_1=" + detail_v::num(c1) + " C_2=" + detail_v::num(c2));
}

/// Shifted-ball inequality on random centers.
inline VerifyResult check_ball_shift(const KernelSpec& kernel, double R, int samples,
                                     std::uint64_t seed) {
    const auto rep = mc_ball_shift(kernel, R, samples, seed);
    return detail_v::make("ball-shift-" + family_name(kernel.family()) + "-" +
                              std::to_string(kernel.dim()) + "d",
                          rep.holds, "min margin " + detail_v::num(rep.min_margin));
}

/// G_A quadrature against its closed forms.
inline VerifyResult check_profile_closed_forms() {
    double worst = 0.0;
    for (double y : {0.0, 1.0, 3.0, 5.0}) {
        const double g2 = profile_g_a(0.5, 2.0, y, 1).value;
        const double ref2 = std::exp(-y * y / 2.0) / std::sqrt(2.0 * std::numbers::pi);
        worst = std::max(worst, std::abs(g2 - ref2));
        const double g1 = profile_g_a(1.0, 1.0, y, 1).value;
        const double ref1 = 1.0 / (std::numbers::pi * (1.0 + y * y));
        worst = std::max(worst, std::abs(g1 - ref1));
    }
    return detail_v::make("profile-closed-forms", worst <= 1e-6, "max err " + detail_v::num(worst));
}

/// Blow-up time extrapolation against the closed-form growth trajectory.
inline VerifyResult check_blowup_extrapolation() {
    // x' = a x^{1+p} - b x with a = b = 1, p = 1, x0 = 2: t* = ln 2.
    // Sample at geometric levels, as adaptive snapshots do near blow-up.
    const double t_star = std::log(2.0);
    std::vector<double> ts, xs;
    for (int i = 0; i <= 40; ++i) {
        const double x = 1.2e3 * std::pow(1e7 / 1.2e3, i / 40.0);
        const double y = 1.0 / x;
        ts.push_back(std::log((1.0 - y) / 0.5)); // invert y(t) = 1 - 0.5 e^t
        xs.push_back(x);
    }
    const auto fit = extrapolate_blowup_time(ts, xs, 1.0);
    const double rel = std::abs(fit.t_star - t_star) / t_star;
    return detail_v::make("blowup-extrapolation", fit.fitted && rel <= 0.01,
                          "t* rel err " + detail_v::num(rel));
}

/// Pointwise growth solution: value, convexity in X, singular-time reporting.
inline VerifyResult check_growth_solution() {
    bool pass = std::abs(hairtrigger_w(0.5, 1.0, 1.0, 1.0) - 2.0) <= 1e-12;
    for (int i = 1; i + 1 < 40 && pass; ++i) {
        const double h = 0.02;
        const double x = 0.1 + i * h;
        const double second = hairtrigger_w(0.3, x + h, 0.5, 1.3) -
                              2.0 * hairtrigger_w(0.3, x, 0.5, 1.3) +
                              hairtrigger_w(0.3, x - h, 0.5, 1.3);
        pass = second >= -1e-12;
    }
    bool threw = false;
    try {
        hairtrigger_w(2.0, 1.0, 1.0, 1.0);
    } catch (const singularity_error& e) {
        threw = std::abs(e.singular_time - 1.0) <= 1e-12;
    }
    return detail_v::make("growth-solution", pass && threw, "closed form, convexity, singularity");
}

/// Comparison principle on a quick pair of ordered initial data.
inline VerifyResult check_comparison(std::uint64_t /*seed*/) {
    const Grid g(1, 20.0, 128);
    const Field lo = sample(g, [](double x) { return 0.3 * std::exp(-x * x); });
    const Field hi = sample(g, [](double x) { return 0.6 * std::exp(-x * x); });
    SolverConfig cfg;
    cfg.dt_init = 0.1;
    cfg.t_max = 5.0;
    const auto rep =
        comparison_check(lo, hi, KernelSpec::gaussian(1.0, 1), Reaction::allee_logistic(1.0), cfg);
    return detail_v::make("comparison", rep.ordered,
                          "max violation " + detail_v::num(rep.max_violation));
}

/// Full standard suite (fast; a superset runs in the test binaries).
inline std::vector<VerifyResult> run_standard_suite(std::uint64_t seed) {
    std::vector<VerifyResult> out;
    const auto gauss = KernelSpec::gaussian(1.0, 1);
    const auto cauchy = KernelSpec::cauchy();
    const auto bump = KernelSpec::compact_bump(1.0, 1);
    const auto heavy = KernelSpec::algebraic_tail(2.5, 1.0, 1);
    out.push_back(check_hat_bounds(gauss));
    out.push_back(check_hat_bounds(cauchy));
    out.push_back(check_hat_bounds(heavy));
    out.push_back(check_expansion_m2(gauss));
    out.push_back(check_expansion_m2(KernelSpec::laplace(1.0, 1)));
    out.push_back(check_expansion_m2(bump));
    out.push_back(check_fujita_rescale());
    out.push_back(check_convolution(seed));
    out.push_back(check_linear_conservation(gauss));
    out.push_back(check_psi_mass(discretize(gauss, Grid(1, 20.0, 256))));
    out.push_back(check_kaplan_duality());
    out.push_back(check_ball_constant());
    out.push_back(check_ball_shift(gauss, 1.5, 200, seed));
    out.push_back(check_ball_shift(KernelSpec::gaussian(1.0, 2), 1.5, 100, seed + 1));
    out.push_back(check_profile_closed_forms());
    out.push_back(check_blowup_extrapolation());
    out.push_back(check_growth_solution());
    out.push_back(check_comparison(seed));
    return out;
}

} // namespace verify
} // namespace nld
