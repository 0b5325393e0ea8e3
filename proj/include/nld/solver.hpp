#pragma once

#include "nld/semigroup.hpp"

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nld {

/// Reaction term f(u) of du/dt = J*u - u + f(u).
class Reaction {
public:
    enum class Kind { pure_growth, allee_logistic, custom };

    /// f(u) = u^{1+p}
    static Reaction pure_growth(double p) {
        check_p(p);
        Reaction r;
        r.kind_ = Kind::pure_growth;
        r.p_ = p;
        return r;
    }

    /// f(u) = u^{1+p}(1-u)
    static Reaction allee_logistic(double p) {
        check_p(p);
        Reaction r;
        r.kind_ = Kind::allee_logistic;
        r.p_ = p;
        return r;
    }

    /// User reaction sandwiched by m u^{1+p}(1-u) <= f(u) <= M u^{1+p}(1-u)
    /// on [0,1]; verified on a 1000-point sample at construction.
    static Reaction custom(std::function<double(double)> f, double p, double m_lo, double m_hi) {
        check_p(p);
        if (!f) throw std::invalid_argument("custom reaction: missing function");
        if (!(0 < m_lo && m_lo <= m_hi))
            throw std::invalid_argument("custom reaction: need 0 < m <= M");
        constexpr int n = 1000;
        for (int i = 0; i <= n; ++i) {
            const double u = static_cast<double>(i) / n;
            const double ref = std::pow(u, 1.0 + p) * (1.0 - u);
            const double fu = f(u);
            const double slack = 1e-9 * (1.0 + std::abs(ref));
            if (!(m_lo * ref - slack <= fu && fu <= m_hi * ref + slack))
                throw std::invalid_argument(
                    "custom reaction: not sandwiched by m u^{1+p}(1-u) <= f <= M u^{1+p}(1-u)");
        }
        Reaction r;
        r.kind_ = Kind::custom;
        r.p_ = p;
        r.f_ = std::move(f);
        r.m_lo_ = m_lo;
        r.m_hi_ = m_hi;
        return r;
    }

    Kind kind() const { return kind_; }
    double exponent() const { return p_; }

    double operator()(double u) const {
        if (u <= 0.0) return 0.0;
        switch (kind_) {
            case Kind::pure_growth: return std::pow(u, 1.0 + p_);
            case Kind::allee_logistic: return std::pow(u, 1.0 + p_) * (1.0 - u);
            case Kind::custom: return f_(u);
        }
        return 0.0;
    }

    std::string name() const {
        switch (kind_) {
            case Kind::pure_growth: return "pure_growth";
            case Kind::allee_logistic: return "allee_logistic";
            case Kind::custom: return "custom";
        }
        return "?";
    }

private:
    Reaction() = default;
    static void check_p(double p) {
        if (!(p > 0)) throw std::invalid_argument("reaction: exponent p > 0 required");
    }
    Kind kind_ = Kind::pure_growth;
    double p_ = 1.0;
    std::function<double(double)> f_;
    double m_lo_ = 1.0, m_hi_ = 1.0;
};

struct SolverConfig {
    double dt_init = 0.25;
    double dt_min = 1e-7;
    double safety = 1.0;        // in (0,1]; scales the starting step
    double u_max = 1e8;         // blow-up cap
    double t_max = 100.0;
    int snapshot_stride = 1;    // diagnostics every k-th accepted step

    // outcome thresholds
    double localized_radius = 5.0;   // R for the localized-mass diagnostic
    int boundary_layers = 5;
    double boundary_frac = 1e-4;     // wrap monitor: boundary mass vs L1
    double cto_radius = 5.0;         // ConvergeToOne ball radius
    double cto_eps = 0.01;           // ConvergeToOne tolerance
    double decay_threshold = 1e-6;   // early GlobalDecay: Linf below ratio * initial
    double decay_confirm_ratio = 0.2; // decay classification at t_max needs this drop
    double decay_fit_min_r2 = 0.98;

    void validate() const {
        if (!(dt_min > 0) || !(dt_min < dt_init))
            throw std::invalid_argument("solver config: need 0 < dt_min < dt_init");
        if (!(safety > 0) || safety > 1.0)
            throw std::invalid_argument("solver config: safety in (0,1]");
        if (!(u_max > 1.0)) throw std::invalid_argument("solver config: U_max > 1");
        if (!(t_max > 0)) throw std::invalid_argument("solver config: t_max > 0");
        if (snapshot_stride < 1) throw std::invalid_argument("solver config: stride >= 1");
    }
};

// ----- outcome classification -----

struct Blowup {
    double t_star = 0.0;  // extrapolated blow-up time (power-law ansatz, heuristic)
    double t_last = 0.0;  // last resolved time
};
struct GlobalDecay {
    double slope = 0.0;   // log-log decay rate fit of the sup norm
    double r2 = 0.0;
};
struct ConvergeToOne {
    double hit_time = 0.0; // first time with inf_{B_R} u >= 1 - eps
};
struct Inconclusive {
    std::string reason;
};
using SimOutcome = std::variant<Blowup, GlobalDecay, ConvergeToOne, Inconclusive>;

inline std::string outcome_name(const SimOutcome& o) {
    if (std::holds_alternative<Blowup>(o)) return "Blowup";
    if (std::holds_alternative<GlobalDecay>(o)) return "GlobalDecay";
    if (std::holds_alternative<ConvergeToOne>(o)) return "ConvergeToOne";
    return "Inconclusive";
}

/// One diagnostics sample per recorded step.
struct DiagRow {
    double t = 0.0;
    double linf = 0.0;
    double l1 = 0.0;
    double localized = 0.0;
    double dt = 0.0;
    double mass = 0.0;              // signed h^N sum u
    double boundary = 0.0;          // wrap-monitor band mass
    double reaction_integral = 0.0; // h^N sum f(u)
};

struct BlowupSignal {
    std::size_t cell = 0;
    double value = 0.0;
};

namespace detail {

/// Pointwise nonlinear substep over dt. Returns a signal if the exact
/// pure-growth map hits its singularity inside the step.
inline std::optional<BlowupSignal> react_inplace(Field& u, const Reaction& r, double dt) {
    const double p = r.exponent();
    if (r.kind() == Reaction::Kind::pure_growth) {
        for (std::size_t i = 0; i < u.size(); ++i) {
            double& v = u.values[i];
            if (v <= 0.0) continue; // 0 is an equilibrium; tiny negatives stay put
            const double s = p * dt * std::pow(v, p);
            if (s >= 1.0) return BlowupSignal{i, v};
            v /= std::pow(1.0 - s, 1.0 / p);
        }
        return std::nullopt;
    }
    // classical 4-stage explicit step for the bounded reactions
    for (std::size_t i = 0; i < u.size(); ++i) {
        double& v = u.values[i];
        const double k1 = r(v);
        const double k2 = r(v + 0.5 * dt * k1);
        const double k3 = r(v + 0.5 * dt * k2);
        const double k4 = r(v + dt * k3);
        const double next = v + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if (!std::isfinite(next)) return BlowupSignal{i, v};
        v = next;
    }
    return std::nullopt;
}

} // namespace detail

using StepResult = std::variant<Field, BlowupSignal>;

/// One Strang step: exact linear half-step, nonlinear substep, linear half-step.
/// The pure-growth substep uses the closed-form Bernoulli map, so the stiffness
/// near blow-up lives entirely in an exact pointwise formula.
inline StepResult step(const Field& u, const LinearPropagator& prop, const Reaction& reaction,
                       double dt) {
    if (!(dt > 0)) throw std::invalid_argument("step: dt > 0 required");
    Field half = prop.evolve(u, dt / 2.0);
    if (auto sig = detail::react_inplace(half, reaction, dt)) return *sig;
    return prop.evolve(half, dt / 2.0);
}

inline StepResult step(const Field& u, const KernelSpec& kernel, const Reaction& reaction,
                       double dt) {
    return step(u, LinearPropagator(kernel, u.grid), reaction, dt);
}

struct BlowupFit {
    double t_star = 0.0;
    bool fitted = false;
};

/// Extrapolated blow-up time from the Linf history: fits Linf ~ (t*-t)^{-1/p}
/// via the linearization Linf^{-p} = a + b t on the last <= 20 samples with
/// Linf > 1e3. Falls back to the last time when the window is too short.
inline BlowupFit extrapolate_blowup_time(std::span<const double> ts,
                                         std::span<const double> linfs, double p) {
    if (ts.size() != linfs.size()) throw std::invalid_argument("extrapolate: size mismatch");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < ts.size(); ++i)
        if (linfs[i] > 1e3) {
            xs.push_back(ts[i]);
            ys.push_back(std::pow(linfs[i], -p));
        }
    BlowupFit out;
    if (xs.size() > 20) {
        xs.erase(xs.begin(), xs.end() - 20);
        ys.erase(ys.begin(), ys.end() - 20);
    }
    if (xs.size() < 5 || !(xs.back() - xs.front() > 1e-12 * std::abs(xs.back()))) {
        out.t_star = ts.empty() ? 0.0 : ts.back();
        return out;
    }
    const auto fit = detail::fit_line(xs, ys);
    if (fit.slope < 0) {
        out.t_star = -fit.intercept / fit.slope;
        out.fitted = out.t_star >= xs.back();
    }
    if (!out.fitted) out.t_star = xs.back();
    return out;
}

struct RunResult {
    SimOutcome outcome{Inconclusive{"not run"}};
    std::vector<DiagRow> diagnostics;
    Field final_state;
    double initial_linf = 0.0;
    bool boundary_contaminated = false;
    double contamination_time = -1.0;
};

namespace detail {

inline DiagRow make_row(const Field& u, double t, double dt, const Reaction& r,
                        const SolverConfig& cfg) {
    DiagRow row;
    row.t = t;
    const Norms n = norms(u);
    row.linf = n.linf;
    row.l1 = n.l1;
    row.localized = cfg.localized_radius < u.grid.half_width
                        ? localized_mass(u, cfg.localized_radius)
                        : n.l1;
    row.dt = dt;
    row.mass = total_mass(u);
    row.boundary = boundary_mass(u, cfg.boundary_layers);
    const double cell = std::pow(u.grid.spacing(), u.grid.dim);
    double ri = 0.0;
    for (double v : u.values) ri += r(v);
    row.reaction_integral = ri * cell;
    return row;
}

inline std::optional<GlobalDecay> tail_decay_fit(const std::vector<DiagRow>& rows,
                                                 const SolverConfig& cfg, double linf0) {
    if (rows.size() < 8) return std::nullopt;
    const double t_end = rows.back().t;
    std::vector<double> lt, ln, ltr, lr;
    for (const auto& r : rows)
        if (r.t >= t_end / 10.0 && r.t > 0 && r.linf > 0) {
            lt.push_back(std::log(r.t));
            ln.push_back(std::log(r.linf));
            if (r.reaction_integral > 0) {
                ltr.push_back(std::log(r.t));
                lr.push_back(std::log(r.reaction_integral));
            }
        }
    if (lt.size() < 8) return std::nullopt;
    const auto fit = detail::fit_line(lt, ln);
    if (fit.r2 < cfg.decay_fit_min_r2 || fit.slope > -0.05) return std::nullopt;
    if (!(rows.back().linf <= cfg.decay_confirm_ratio * linf0)) return std::nullopt;
    // genuine extinction needs an integrable growth integral (log-slope below
    // -1); a subcritical transient decays at the linear rate too, but keeps
    // accumulating mass and must stay unclassified
    if (ltr.size() >= lt.size() / 2 && ltr.size() >= 4) {
        const auto rfit = detail::fit_line(ltr, lr);
        if (rfit.slope > -1.0) return std::nullopt;
    }
    return GlobalDecay{fit.slope, fit.r2};
}

} // namespace detail

/// Invoked at every recorded diagnostics row (e.g. to persist field snapshots).
using SnapshotCallback = std::function<void(const Field&, double)>;

/// Adaptive time integration of du/dt = J*u - u + f(u) with outcome
/// classification (Blowup / GlobalDecay / ConvergeToOne / Inconclusive).
inline RunResult run(const Field& u0, const KernelSpec& kernel, const Reaction& reaction,
                     const SolverConfig& cfg, const SnapshotCallback& on_snapshot = {}) {
    cfg.validate();
    for (double v : u0.values)
        if (v < -1e-12 || !std::isfinite(v))
            throw std::invalid_argument("run: initial data must be nonnegative and finite");

    LinearPropagator prop(kernel, u0.grid);
    RunResult res;
    res.final_state = u0;
    res.initial_linf = linf_norm(u0);
    Field& u = res.final_state;

    // The zero field is an equilibrium; classify immediately.
    if (res.initial_linf == 0.0) {
        res.diagnostics.push_back(detail::make_row(u, 0.0, cfg.dt_init, reaction, cfg));
        res.outcome = GlobalDecay{0.0, 1.0};
        return res;
    }

    const bool allee = reaction.kind() == Reaction::Kind::allee_logistic;
    double t = 0.0;
    double dt = cfg.dt_init * cfg.safety;
    int calm_steps = 0;
    long step_count = 0;
    double prev_linf = res.initial_linf;
    res.diagnostics.push_back(detail::make_row(u, 0.0, dt, reaction, cfg));

    auto finalize_blowup = [&](double t_last) {
        std::vector<double> ts, ls;
        for (const auto& r : res.diagnostics) {
            ts.push_back(r.t);
            ls.push_back(r.linf);
        }
        const auto fit = extrapolate_blowup_time(ts, ls, reaction.exponent());
        res.outcome = Blowup{fit.t_star, t_last};
    };

    while (t < cfg.t_max) {
        // absorb the final sliver into one step so recorded spacings never collapse
        const double dt_eff = (t + 1.25 * dt >= cfg.t_max) ? (cfg.t_max - t) : dt;
        StepResult sr = step(u, prop, reaction, dt_eff);
        if (std::holds_alternative<BlowupSignal>(sr)) {
            // the pointwise growth map hit its singularity inside the step;
            // keep halving, below dt_min if needed (that exhaustion is the
            // blow-up trigger), until the step resolves
            dt /= 2.0;
            calm_steps = 0;
            if (dt < 1e-30) {
                res.outcome = Inconclusive{"step size collapsed"};
                return res;
            }
            continue;
        }
        Field& next = std::get<Field>(sr);
        const double next_linf = linf_norm(next);
        if (next_linf > 1.2 * std::max(prev_linf, 1e-300) && dt > cfg.dt_min) {
            dt = std::max(dt / 2.0, cfg.dt_min);
            calm_steps = 0;
            continue;
        }
        if (t + dt_eff == t) {
            // time no longer advances in double precision: the singularity is
            // resolved as far as it can be
            res.diagnostics.push_back(detail::make_row(u, t, dt, reaction, cfg));
            if (next_linf > cfg.u_max || linf_norm(u) > cfg.u_max) {
                finalize_blowup(t);
            } else {
                res.outcome = Inconclusive{"time step underflow"};
            }
            return res;
        }
        u = std::move(next);
        t += dt_eff;
        ++step_count;

        // gentle step recovery when the dynamics are quiet
        if (next_linf <= 1.02 * prev_linf) {
            if (++calm_steps >= 5 && dt < cfg.dt_init) {
                dt = std::min(2.0 * dt, cfg.dt_init);
                calm_steps = 0;
            }
        } else {
            calm_steps = 0;
        }
        prev_linf = next_linf;

        if (step_count % cfg.snapshot_stride == 0 || t >= cfg.t_max) {
            const DiagRow row = detail::make_row(u, t, dt, reaction, cfg);
            res.diagnostics.push_back(row);
            if (on_snapshot) on_snapshot(u, t);

            if (!res.boundary_contaminated && row.boundary > cfg.boundary_frac * row.l1 &&
                row.l1 > 0) {
                res.boundary_contaminated = true;
                res.contamination_time = t;
                // wrap contamination invalidates decay/blow-up claims from
                // here on; the local convergence-to-one classification
                // survives it, and decay established on the clean prefix
                // still counts
                if (!allee) {
                    std::vector<DiagRow> clean(res.diagnostics.begin(),
                                               res.diagnostics.end() - 1);
                    if (auto fit = detail::tail_decay_fit(clean, cfg, res.initial_linf)) {
                        res.outcome = *fit;
                    } else {
                        res.outcome = Inconclusive{"boundary contamination at t=" +
                                                   detail::format_full(t)};
                    }
                    return res;
                }
            }

            if (row.linf > cfg.u_max && dt <= cfg.dt_min) {
                finalize_blowup(t);
                return res;
            }
            if (allee && cfg.cto_radius < u.grid.half_width &&
                ball_min(u, cfg.cto_radius) >= 1.0 - cfg.cto_eps) {
                res.outcome = ConvergeToOne{t};
                return res;
            }
            if (row.linf <= cfg.decay_threshold * res.initial_linf &&
                !res.boundary_contaminated) {
                auto fit = detail::tail_decay_fit(res.diagnostics, cfg, res.initial_linf);
                res.outcome = fit ? SimOutcome{*fit} : SimOutcome{GlobalDecay{0.0, 0.0}};
                return res;
            }
        }
    }

    if (!res.boundary_contaminated) {
        if (auto fit = detail::tail_decay_fit(res.diagnostics, cfg, res.initial_linf)) {
            res.outcome = *fit;
            return res;
        }
    }
    res.outcome = Inconclusive{res.boundary_contaminated
                                   ? "boundary contamination"
                                   : "t_max reached without classification"};
    return res;
}

struct MassOdeResidual {
    double max_relative = 0.0;
    std::vector<double> per_row; // residual at each interior diagnostics row
};

/// Residual of d/dt (total mass) = h^N sum f(u) from the diagnostics series,
/// by nonuniform central differences at the recorded times.
inline MassOdeResidual mass_ode_residual(const std::vector<DiagRow>& rows,
                                         double t_lo = -std::numeric_limits<double>::infinity(),
                                         double t_hi = std::numeric_limits<double>::infinity()) {
    MassOdeResidual out;
    if (rows.size() < 3) return out;
    double scale = 0.0;
    for (const auto& r : rows)
        if (r.t >= t_lo && r.t <= t_hi) scale = std::max(scale, std::abs(r.reaction_integral));
    if (scale == 0.0) return out; // e.g. the zero solution: residual 0
    for (std::size_t k = 1; k + 1 < rows.size(); ++k) {
        if (rows[k].t < t_lo || rows[k].t > t_hi) continue;
        const double dp = rows[k + 1].t - rows[k].t;
        const double dm = rows[k].t - rows[k - 1].t;
        if (!(dp > 0) || !(dm > 0)) continue;
        const double dmdt = (dm * dm * rows[k + 1].mass - dp * dp * rows[k - 1].mass +
                             (dp * dp - dm * dm) * rows[k].mass) /
                            (dp * dm * (dp + dm));
        const double resid = std::abs(dmdt - rows[k].reaction_integral) / scale;
        out.per_row.push_back(resid);
        out.max_relative = std::max(out.max_relative, resid);
    }
    return out;
}

struct ComparisonReport {
    bool ordered = true;
    double max_violation = 0.0; // max over snapshots of max(u_low - u_high)
    double t_end = 0.0;
};

/// Runs both initial data in lockstep (shared adaptive step) and checks the
/// pointwise order u_low <= u_high + 1e-8 at every snapshot.
inline ComparisonReport comparison_check(const Field& u0_low, const Field& u0_high,
                                         const KernelSpec& kernel, const Reaction& reaction,
                                         const SolverConfig& cfg, double tol = 1e-8) {
    cfg.validate();
    if (!(u0_low.grid == u0_high.grid))
        throw std::invalid_argument("comparison_check: grids differ");
    for (std::size_t i = 0; i < u0_low.size(); ++i)
        if (u0_low.values[i] > u0_high.values[i] + 1e-14)
            throw std::invalid_argument("comparison_check: initial data not ordered");
    LinearPropagator prop(kernel, u0_low.grid);
    Field lo = u0_low, hi = u0_high;
    double t = 0.0, dt = cfg.dt_init * cfg.safety;
    ComparisonReport rep;
    long step_count = 0;
    while (t < cfg.t_max) {
        const double dt_eff = (t + 1.25 * dt >= cfg.t_max) ? (cfg.t_max - t) : dt;
        StepResult a = step(lo, prop, reaction, dt_eff);
        StepResult b = step(hi, prop, reaction, dt_eff);
        if (std::holds_alternative<BlowupSignal>(a) || std::holds_alternative<BlowupSignal>(b)) {
            dt /= 2.0;
            if (dt < cfg.dt_min) break; // one run is blowing up; ordering held to here
            continue;
        }
        const Field& na = std::get<Field>(a);
        const Field& nb = std::get<Field>(b);
        const double growth = std::max(linf_norm(na) / std::max(linf_norm(lo), 1e-300),
                                       linf_norm(nb) / std::max(linf_norm(hi), 1e-300));
        if (growth > 1.2 && dt > cfg.dt_min) {
            dt = std::max(dt / 2.0, cfg.dt_min);
            continue;
        }
        lo = std::move(std::get<Field>(a));
        hi = std::move(std::get<Field>(b));
        t += dt_eff;
        if (++step_count % cfg.snapshot_stride == 0) {
            double worst = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < lo.size(); ++i)
                worst = std::max(worst, lo.values[i] - hi.values[i]);
            rep.max_violation = std::max(rep.max_violation, worst);
            if (linf_norm(hi) > cfg.u_max) break;
        }
    }
    rep.t_end = t;
    rep.ordered = rep.max_violation <= tol;
    return rep;
}

} // namespace nld
