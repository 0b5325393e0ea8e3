#pragma once

#include "nld/config.hpp"
#include "nld/io.hpp"
#include "nld/solver.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

namespace nld {

inline constexpr const char* code_version = "0.1.0";

/// Persisted experiment result for a single (kernel, p) cell.
struct RunRecord {
    std::string config_hash;
    std::map<std::string, std::string> kernel_params;
    double p = 0.0;
    double predicted_p_f = 0.0;
    std::string outcome;
    nlohmann::json outcome_detail;
    nlohmann::json diagnostics_summary;
    nlohmann::json empirical_constants; // entries labeled EMPIRICAL
    std::string started_at;
    std::string finished_at;
    std::string version = code_version;

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["config_hash"] = config_hash;
        j["kernel"] = kernel_params;
        j["p"] = p;
        j["predicted_p_f"] = predicted_p_f;
        j["outcome"] = outcome;
        j["outcome_detail"] = outcome_detail;
        j["diagnostics_summary"] = diagnostics_summary;
        if (!empirical_constants.is_null()) j["empirical_constants"] = empirical_constants;
        j["started_at"] = started_at;
        j["finished_at"] = finished_at;
        j["version"] = version;
        return j;
    }

    static RunRecord from_json(const nlohmann::json& j) {
        RunRecord r;
        r.config_hash = j.at("config_hash").get<std::string>();
        r.kernel_params = j.at("kernel").get<std::map<std::string, std::string>>();
        r.p = j.at("p").get<double>();
        r.predicted_p_f = j.at("predicted_p_f").get<double>();
        r.outcome = j.at("outcome").get<std::string>();
        r.outcome_detail = j.at("outcome_detail");
        r.diagnostics_summary = j.at("diagnostics_summary");
        if (j.contains("empirical_constants")) r.empirical_constants = j["empirical_constants"];
        r.started_at = j.value("started_at", "");
        r.finished_at = j.value("finished_at", "");
        r.version = j.value("version", "");
        return r;
    }
};

namespace detail {

inline std::string timestamp_now() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t tt = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&tt, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

inline nlohmann::json outcome_to_json(const SimOutcome& o) {
    nlohmann::json j;
    if (const auto* b = std::get_if<Blowup>(&o)) {
        j["t_star"] = b->t_star;
        j["t_last"] = b->t_last;
        j["t_star_method"] = "power-law extrapolation (heuristic)";
    } else if (const auto* d = std::get_if<GlobalDecay>(&o)) {
        j["slope"] = d->slope;
        j["r2"] = d->r2;
    } else if (const auto* c = std::get_if<ConvergeToOne>(&o)) {
        j["hit_time"] = c->hit_time;
    } else if (const auto* i = std::get_if<Inconclusive>(&o)) {
        j["reason"] = i->reason;
    }
    return j;
}

} // namespace detail

struct SweepPlan {
    std::vector<std::string> kernel_strings;
    std::vector<double> p_values;
    int dim = 1;
    Grid grid{1, 20.0, 256};
    SolverConfig solver;
    InitialSpec initial;
    int jobs = 1;
    std::filesystem::path out_dir = "out";

    void validate() const {
        if (kernel_strings.empty()) throw config_error("sweep plan: empty kernel list");
        if (p_values.empty()) throw config_error("sweep plan: empty p list");
        for (double p : p_values)
            if (!(p > 0)) throw config_error("sweep plan: all p must be positive");
        if (jobs < 1) throw config_error("sweep plan: jobs >= 1");
    }
};

inline SweepPlan sweep_from_config(const Config& cfg) {
    SweepPlan plan;
    const std::string section = "sweep";
    if (!cfg.has(section)) throw config_error("config: missing section [sweep]");
    for (const auto& ks : detail::split(cfg.get(section, "kernels"), ';'))
        if (!ks.empty()) plan.kernel_strings.push_back(ks);
    for (const auto& ps : detail::split(cfg.get(section, "p_list"), ','))
        if (!ps.empty()) plan.p_values.push_back(std::stod(ps));
    plan.dim = cfg.get_int_or(section, "dim", 1);
    plan.grid = grid_from_config(cfg, plan.dim);
    plan.solver = solver_from_config(cfg);
    plan.initial = initial_from_config(cfg);
    plan.jobs = cfg.get_int_or(section, "jobs", 1);
    plan.validate();
    return plan;
}

/// Canonical per-cell config used for hashing and resume detection.
inline Config cell_config(const SweepPlan& plan, const KernelSpec& kernel, double p) {
    Config c;
    c.sections["kernel"] = kernel.to_params();
    c.sections["grid"]["L"] = detail::format_full(plan.grid.half_width);
    c.sections["grid"]["M"] = std::to_string(plan.grid.points_per_axis);
    c.sections["reaction"]["type"] = "pure_growth";
    c.sections["reaction"]["p"] = detail::format_full(p);
    c.sections["solver"]["dt_init"] = detail::format_full(plan.solver.dt_init);
    c.sections["solver"]["dt_min"] = detail::format_full(plan.solver.dt_min);
    c.sections["solver"]["t_max"] = detail::format_full(plan.solver.t_max);
    c.sections["solver"]["u_max"] = detail::format_full(plan.solver.u_max);
    c.sections["initial"]["type"] = plan.initial.type;
    c.sections["initial"]["amplitude"] = detail::format_full(plan.initial.amplitude);
    c.sections["initial"]["sigma"] = detail::format_full(plan.initial.sigma);
    c.sections["initial"]["radius"] = detail::format_full(plan.initial.radius);
    return c;
}

/// Executes one simulation and assembles its persisted record.
inline RunRecord run_record(const KernelSpec& kernel, double p, const Field& u0,
                            const Reaction& reaction, const SolverConfig& scfg,
                            const std::string& hash,
                            std::vector<DiagRow>* diagnostics_out = nullptr,
                            Field* final_out = nullptr,
                            const SnapshotCallback& on_snapshot = {}) {
    RunRecord rec;
    rec.config_hash = hash;
    rec.kernel_params = kernel.to_params();
    rec.p = p;
    rec.started_at = detail::timestamp_now();
    const FourierExpansion e = estimate_expansion(kernel);
    rec.predicted_p_f = fujita_exponent(e, kernel.dim());
    // the decay bound's constant is non-constructive; record the per-kernel
    // empirical estimate (with its safety factor and probe set) alongside
    try {
        const std::vector<double> probes{5.0, 20.0, 100.0};
        const auto c = estimate_decay_constant(kernel, u0, probes);
        rec.empirical_constants["decay_constant"] = {
            {"value", c.value}, {"safety_factor", c.safety}, {"probe_times", c.probes},
            {"label", "EMPIRICAL"}};
    } catch (const std::exception&) {
        // zero data or degenerate grids have no usable estimate
    }
    RunResult rr = run(u0, kernel, reaction, scfg, on_snapshot);
    rec.outcome = outcome_name(rr.outcome);
    rec.outcome_detail = detail::outcome_to_json(rr.outcome);
    rec.diagnostics_summary = {
        {"rows", rr.diagnostics.size()},
        {"t_end", rr.diagnostics.back().t},
        {"linf_end", rr.diagnostics.back().linf},
        {"l1_end", rr.diagnostics.back().l1},
        {"initial_linf", rr.initial_linf},
        {"boundary_contaminated", rr.boundary_contaminated},
        {"kernel_truncated_mass", kernel.tail_mass(u0.grid.half_width)},
    };
    rec.finished_at = detail::timestamp_now();
    if (diagnostics_out) *diagnostics_out = std::move(rr.diagnostics);
    if (final_out) *final_out = std::move(rr.final_state);
    return rec;
}

struct SweepSummary {
    std::vector<RunRecord> records; // (kernel index major, p index minor)
    int skipped_existing = 0;
    std::filesystem::path matrix_csv;
    std::filesystem::path long_csv;
    std::filesystem::path bracket_csv;
};

/// Runs the (kernel, p) matrix, up to `jobs` cells concurrently. Results are
/// aggregated in (kernel index, p index) order regardless of completion
/// order, and cells whose record file already exists are skipped (resume).
inline SweepSummary sweep_execute(const SweepPlan& plan) {
    plan.validate();
    namespace fs = std::filesystem;
    const fs::path runs_dir = plan.out_dir / "runs";
    fs::create_directories(runs_dir);

    std::vector<KernelSpec> kernels;
    for (const auto& ks : plan.kernel_strings) kernels.push_back(kernel_from_string(ks, plan.dim));

    struct Cell {
        std::size_t ik, ip;
        std::string hash;
    };
    std::vector<Cell> cells;
    for (std::size_t ik = 0; ik < kernels.size(); ++ik)
        for (std::size_t ip = 0; ip < plan.p_values.size(); ++ip)
            cells.push_back({ik, ip, cell_config(plan, kernels[ik], plan.p_values[ip]).hash()});

    std::vector<std::optional<RunRecord>> results(cells.size());
    std::atomic<std::size_t> next{0};
    std::atomic<int> skipped{0};

    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= cells.size()) return;
            const Cell& cell = cells[i];
            const fs::path record_path = runs_dir / (cell.hash + ".json");
            if (fs::exists(record_path)) {
                try {
                    std::ifstream is(record_path);
                    nlohmann::json j;
                    is >> j;
                    results[i] = RunRecord::from_json(j);
                    skipped.fetch_add(1);
                    continue;
                } catch (...) {
                    // unreadable record: recompute below
                }
            }
            const KernelSpec& kernel = kernels[cell.ik];
            const double p = plan.p_values[cell.ip];
            RunRecord rec;
            try {
                const Field u0 = make_initial(plan.initial, plan.grid);
                std::vector<DiagRow> diag;
                rec = run_record(kernel, p, u0, Reaction::pure_growth(p), plan.solver,
                                 cell.hash, &diag);
                write_diagnostics_csv(diag, runs_dir / (cell.hash + "_diagnostics.csv"));
                std::ofstream os(record_path);
                os << rec.to_json().dump(2) << '\n';
            } catch (const std::exception& e) {
                // a failed cell enters the summary but is not persisted, so a
                // resumed sweep retries it; the rest of the matrix continues
                rec.config_hash = cell.hash;
                rec.kernel_params = kernel.to_params();
                rec.p = p;
                rec.outcome = "Error";
                rec.outcome_detail = {{"message", e.what()}};
                rec.finished_at = detail::timestamp_now();
            }
            results[i] = std::move(rec);
        }
    };
    {
        std::vector<std::thread> pool;
        const int n = std::min<std::size_t>(plan.jobs, cells.size());
        for (int k = 0; k < n; ++k) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }

    SweepSummary summary;
    summary.skipped_existing = skipped.load();
    for (auto& r : results) summary.records.push_back(std::move(*r));

    // outcome matrix (rows: kernels, cols: p)
    summary.matrix_csv = plan.out_dir / "sweep_matrix.csv";
    {
        std::ofstream os(summary.matrix_csv);
        os << "kernel";
        for (double p : plan.p_values) os << ',' << detail::format_full(p);
        os << '\n';
        for (std::size_t ik = 0; ik < kernels.size(); ++ik) {
            os << plan.kernel_strings[ik];
            for (std::size_t ip = 0; ip < plan.p_values.size(); ++ip)
                os << ',' << summary.records[ik * plan.p_values.size() + ip].outcome;
            os << '\n';
        }
    }
    // long-format plot data
    summary.long_csv = plan.out_dir / "sweep_long.csv";
    {
        std::ofstream os(summary.long_csv);
        os << "kernel,p,predicted_p_f,outcome,t_star,slope,hit_time\n";
        for (std::size_t ik = 0; ik < kernels.size(); ++ik)
            for (std::size_t ip = 0; ip < plan.p_values.size(); ++ip) {
                const RunRecord& r = summary.records[ik * plan.p_values.size() + ip];
                os << plan.kernel_strings[ik] << ',' << detail::format_full(r.p) << ','
                   << detail::format_full(r.predicted_p_f) << ',' << r.outcome << ','
                   << (r.outcome_detail.contains("t_star")
                           ? detail::format_full(r.outcome_detail["t_star"].get<double>())
                           : "")
                   << ','
                   << (r.outcome_detail.contains("slope")
                           ? detail::format_full(r.outcome_detail["slope"].get<double>())
                           : "")
                   << ','
                   << (r.outcome_detail.contains("hit_time")
                           ? detail::format_full(r.outcome_detail["hit_time"].get<double>())
                           : "")
                   << '\n';
            }
    }
    // empirical critical-exponent bracket per kernel
    summary.bracket_csv = plan.out_dir / "sweep_bracket.csv";
    {
        std::ofstream os(summary.bracket_csv);
        os << "kernel,predicted_p_f,max_blowup_p,min_decay_p\n";
        for (std::size_t ik = 0; ik < kernels.size(); ++ik) {
            double max_blow = std::nan(""), min_decay = std::nan("");
            double pf = 0.0;
            for (std::size_t ip = 0; ip < plan.p_values.size(); ++ip) {
                const RunRecord& r = summary.records[ik * plan.p_values.size() + ip];
                pf = r.predicted_p_f;
                if (r.outcome == "Blowup" && (std::isnan(max_blow) || r.p > max_blow))
                    max_blow = r.p;
                if (r.outcome == "GlobalDecay" && (std::isnan(min_decay) || r.p < min_decay))
                    min_decay = r.p;
            }
            os << plan.kernel_strings[ik] << ',' << detail::format_full(pf) << ','
               << (std::isnan(max_blow) ? "" : detail::format_full(max_blow)) << ','
               << (std::isnan(min_decay) ? "" : detail::format_full(min_decay)) << '\n';
        }
    }
    return summary;
}

} // namespace nld
