#include "nld/config.hpp"
#include "nld/sweep.hpp"
#include "nld/verify.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace nld;
using Catch::Approx;
namespace fs = std::filesystem;

#ifndef NLD_CLI_PATH
#define NLD_CLI_PATH ""
#endif
#ifndef NLD_CONFIG_DIR
#define NLD_CONFIG_DIR ""
#endif

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    REQUIRE(is);
    return std::string((std::istreambuf_iterator<char>(is)), {});
}

fs::path fresh_dir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(NLD_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
}

} // namespace

TEST_CASE("config parsing") {
    const auto cfg = Config::parse_string(
        "[kernel]\nfamily = gaussian\nsigma = 1.5\ndim = 1\n\n"
        "[grid]\nL = 20\nM = 128\n\n"
        "[reaction]\ntype = pure_growth\np = 1.0\n");
    CHECK(cfg.get("kernel", "family") == "gaussian");
    CHECK(cfg.get_double("kernel", "sigma") == 1.5);
    CHECK(cfg.get_int("grid", "M") == 128);
    CHECK(cfg.get_or("grid", "missing", "x") == "x");
    CHECK_THROWS_AS(cfg.get("nope", "key"), config_error);
    CHECK_THROWS_AS(cfg.get("grid", "nope"), config_error);
    CHECK_THROWS_AS(Config::parse_string("[kernel]\nsigma = abc\n").get_double("kernel", "sigma"),
                    config_error);
}

TEST_CASE("config hash is canonical") {
    const auto a = Config::parse_string("[b]\ny = 2\n[a]\nx = 1\n");
    const auto b = Config::parse_string("[a]\nx = 1\n[b]\ny = 2\n");
    const auto c = Config::parse_string("[a]\nx = 1\n[b]\ny = 3\n");
    CHECK(a.hash() == b.hash());
    CHECK(a.hash() != c.hash());
    CHECK(a.hash().size() == 16);
}

TEST_CASE("kernel serialization round trip") {
    for (const auto& k : {KernelSpec::gaussian(1.5, 1), KernelSpec::laplace(0.7, 2),
                          KernelSpec::cauchy(), KernelSpec::algebraic_tail(2.5, 0.8, 1),
                          KernelSpec::compact_bump(2.0, 2)}) {
        const auto params = k.to_params();
        const auto back = kernel_from_params(params);
        CHECK(back.family() == k.family());
        CHECK(back.dim() == k.dim());
        for (double x : {0.0, 0.5, 1.7}) CHECK(back.radial(x) == Approx(k.radial(x)).epsilon(1e-14));

        const auto again = kernel_from_string(kernel_to_string(k));
        CHECK(again.family() == k.family());
        CHECK(again.radial(0.3) == Approx(k.radial(0.3)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(kernel_from_string("gaussian(sigma=1"), config_error);
    CHECK_THROWS_AS(kernel_from_string("mystery(x=1)"), config_error);
    CHECK_THROWS_AS(kernel_from_params({{"family", "gaussian"}}), config_error); // missing sigma
    CHECK_THROWS_AS(kernel_from_params({{"family", "cauchy"}, {"dim", "2"}}), config_error);
}

TEST_CASE("tabulated kernel loads from a two-column file") {
    const fs::path table = fs::temp_directory_path() / "nld_tab.txt";
    {
        std::ofstream os(table);
        os << "# radius value\n";
        for (int i = 0; i <= 100; ++i) {
            const double r = 5.0 * i / 100.0;
            os << r << " " << std::exp(-r) << "\n";
        }
    }
    const auto k = kernel_from_params({{"family", "tabulated"}, {"file", table.string()}, {"dim", "1"}});
    CHECK(k.family() == KernelFamily::tabulated);
    CHECK(k.hat(0.0) == 1.0);
    fs::remove(table);
}

TEST_CASE("initial data factories") {
    Grid g(1, 10.0, 64);
    const auto cfg = Config::parse_string(
        "[initial]\ntype = indicator\namplitude = 0.9\nradius = 2.0\n");
    const Field u = make_initial(initial_from_config(cfg), g);
    CHECK(linf_norm(u) == 0.9);
    CHECK(l1_norm(u) == Approx(0.9 * 4.0).margin(0.9 * 2.0 * g.spacing()));
    CHECK_THROWS_AS(initial_from_config(Config::parse_string("[initial]\ntype = wavelet\n")),
                    config_error);
}

TEST_CASE("the zero field makes a clean record") {
    Grid g(1, 20.0, 128);
    SolverConfig scfg;
    scfg.t_max = 5.0;
    const auto rec = run_record(KernelSpec::gaussian(1.0, 1), 1.0, Field(g),
                                Reaction::pure_growth(1.0), scfg, "0000000000000000");
    CHECK(rec.outcome == "GlobalDecay");
    CHECK(rec.empirical_constants.is_null()); // no usable estimate from zero data
    CHECK_NOTHROW(rec.to_json().dump());
}

TEST_CASE("run records serialize to JSON and back") {
    Grid g(1, 20.0, 128);
    const Field u0 = make_initial({.type = "gaussian_bump", .amplitude = 2.0, .sigma = 1.0}, g);
    SolverConfig scfg;
    scfg.t_max = 10.0;
    scfg.dt_init = 0.1;
    const auto rec = run_record(KernelSpec::gaussian(1.0, 1), 1.0, u0,
                                Reaction::pure_growth(1.0), scfg, "deadbeef00000000");
    CHECK(rec.outcome == "Blowup");
    CHECK(rec.predicted_p_f == Approx(2.0).epsilon(0.02));
    const auto j = rec.to_json();
    const auto back = RunRecord::from_json(j);
    CHECK(back.outcome == rec.outcome);
    CHECK(back.config_hash == rec.config_hash);
    CHECK(back.p == rec.p);
    CHECK(back.outcome_detail["t_star"].get<double>() ==
          rec.outcome_detail["t_star"].get<double>());
    CHECK(j["outcome_detail"]["t_star_method"].get<std::string>().find("heuristic") !=
          std::string::npos);
    // non-constructive constants ride along, explicitly labeled as estimates
    REQUIRE(j.contains("empirical_constants"));
    CHECK(j["empirical_constants"]["decay_constant"]["label"] == "EMPIRICAL");
    CHECK(j["empirical_constants"]["decay_constant"]["value"].get<double>() > 0.0);
}

namespace {

SweepPlan tiny_plan(const fs::path& out) {
    SweepPlan plan;
    plan.kernel_strings = {"gaussian(sigma=1)", "cauchy()"};
    plan.p_values = {0.5, 3.0};
    plan.dim = 1;
    plan.grid = Grid(1, 40.0, 256);
    plan.solver.t_max = 15.0;
    plan.solver.dt_init = 0.1;
    plan.solver.decay_confirm_ratio = 1.1; // tiny horizon: accept any drop as decay evidence
    plan.initial = {.type = "gaussian_bump", .amplitude = 1.2, .sigma = 1.0};
    plan.jobs = 2;
    plan.out_dir = out;
    return plan;
}

} // namespace

TEST_CASE("sweep execution, determinism, and resume") {
    const fs::path out1 = fresh_dir("nld_sweep_a");
    const auto plan1 = tiny_plan(out1);
    const auto s1 = sweep_execute(plan1);
    REQUIRE(s1.records.size() == 4);
    CHECK(s1.skipped_existing == 0);
    CHECK(fs::exists(s1.matrix_csv));
    CHECK(fs::exists(s1.long_csv));
    CHECK(fs::exists(s1.bracket_csv));

    SECTION("records aggregate in (kernel, p) order") {
        CHECK(s1.records[0].p == 0.5);
        CHECK(s1.records[1].p == 3.0);
        CHECK(s1.records[0].kernel_params.at("family") == "gaussian");
        CHECK(s1.records[2].kernel_params.at("family") == "cauchy");
    }
    SECTION("diagnostics CSVs are bit-identical across runs and job counts") {
        const fs::path out2 = fresh_dir("nld_sweep_b");
        auto plan2 = tiny_plan(out2);
        plan2.jobs = 1;
        const auto s2 = sweep_execute(plan2);
        for (const auto& rec : s1.records) {
            const auto a = slurp(out1 / "runs" / (rec.config_hash + "_diagnostics.csv"));
            const auto b = slurp(out2 / "runs" / (rec.config_hash + "_diagnostics.csv"));
            CHECK(a == b);
        }
        fs::remove_all(out2);
    }
    SECTION("interrupted sweeps resume from existing records") {
        // drop one record; a rerun recomputes only that cell
        const auto victim = s1.records[2].config_hash;
        fs::remove(out1 / "runs" / (victim + ".json"));
        const auto s2 = sweep_execute(plan1);
        CHECK(s2.skipped_existing == 3);
        CHECK(fs::exists(out1 / "runs" / (victim + ".json")));
    }
    SECTION("the matrix lists one row per kernel") {
        const auto matrix = slurp(s1.matrix_csv);
        CHECK(matrix.find("gaussian(sigma=1)") != std::string::npos);
        CHECK(matrix.find("cauchy()") != std::string::npos);
    }
    fs::remove_all(out1);
}

TEST_CASE("a failing cell is recorded as an error and the sweep continues") {
    const fs::path out = fresh_dir("nld_sweep_err");
    SweepPlan plan = tiny_plan(out);
    // a 2D kernel in a 1D sweep fails at discretization for that cell only
    plan.kernel_strings = {"gaussian(sigma=1,dim=2)", "gaussian(sigma=1)"};
    plan.p_values = {1.0};
    const auto s = sweep_execute(plan);
    REQUIRE(s.records.size() == 2);
    CHECK(s.records[0].outcome == "Error");
    CHECK(s.records[0].outcome_detail["message"].get<std::string>().find("dimension") !=
          std::string::npos);
    CHECK(s.records[1].outcome == "Blowup");
    // error cells are not persisted, so a resume retries them
    CHECK_FALSE(fs::exists(out / "runs" / (s.records[0].config_hash + ".json")));
    const auto s2 = sweep_execute(plan);
    CHECK(s2.skipped_existing == 1);
    fs::remove_all(out);
}

TEST_CASE("sweep plan validation") {
    SweepPlan plan;
    plan.kernel_strings = {};
    plan.p_values = {1.0};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.kernel_strings = {"cauchy()"};
    plan.p_values = {};
    CHECK_THROWS_AS(plan.validate(), config_error);
    plan.p_values = {-1.0};
    CHECK_THROWS_AS(plan.validate(), config_error);
}

TEST_CASE("verification suite passes on a healthy build") {
    const auto results = verify::run_standard_suite(20240901ull);
    for (const auto& r : results) {
        INFO(r.name << " : " << r.detail);
        CHECK(r.pass);
    }
}

TEST_CASE("verification detects an injected normalization fault") {
    Grid g(1, 20.0, 256);
    DiscreteKernel dk = discretize(KernelSpec::gaussian(1.0, 1), g);
    CHECK(verify::check_psi_mass(dk).pass);
    for (double& v : dk.field.values) v *= 1.01;
    CHECK_FALSE(verify::check_psi_mass(dk).pass);
}

TEST_CASE("command-line interface") {
    REQUIRE(fs::exists(NLD_CLI_PATH));
    const fs::path cfgdir = NLD_CONFIG_DIR;
    const fs::path out = fresh_dir("nld_cli_out");

    SECTION("classify-kernel on the Cauchy config reports p_F = 1") {
        const int rc = run_cli("--config " + (cfgdir / "classify_cauchy.ini").string() +
                               " --out-dir " + out.string() + " classify-kernel");
        CHECK(rc == 0);
        // one classification json lands in the output directory
        bool found = false;
        for (const auto& e : fs::directory_iterator(out)) {
            if (e.path().filename().string().starts_with("classification_")) {
                const auto j = nlohmann::json::parse(slurp(e.path()));
                CHECK(j["beta"].get<double>() == Approx(1.0).epsilon(0.02));
                CHECK(j["amplitude"].get<double>() == Approx(1.0).epsilon(0.02));
                CHECK(j["predicted_p_f"].get<double>() == Approx(1.0).epsilon(0.02));
                CHECK(j["second_moment"] == "infinite");
                found = true;
            }
        }
        CHECK(found);
    }
    SECTION("simulate persists a record, diagnostics, and a snapshot") {
        const int rc = run_cli("--config " + (cfgdir / "simulate_decay.ini").string() +
                               " --out-dir " + out.string() + " simulate");
        CHECK(rc == 0);
        bool have_record = false, have_diag = false, have_final = false;
        for (const auto& e : fs::directory_iterator(out / "runs")) {
            const auto name = e.path().filename().string();
            have_record |= name.ends_with(".json");
            have_diag |= name.ends_with("_diagnostics.csv");
            have_final |= name.ends_with("_final.bin");
        }
        CHECK(have_record);
        CHECK(have_diag);
        CHECK(have_final);
    }
    SECTION("missing config is a usage error (exit 2)") {
        CHECK(run_cli("classify-kernel") == 2);
        CHECK(run_cli("--config /nonexistent.ini classify-kernel") == 2);
    }
    SECTION("malformed config is a usage error (exit 2)") {
        const fs::path bad = out / "bad.ini";
        std::ofstream(bad) << "[kernel]\nfamily = gaussian\nsigma = oops\n";
        CHECK(run_cli("--config " + bad.string() + " classify-kernel") == 2);
    }
    SECTION("threshold emits a lambda_min table") {
        const int rc = run_cli("--config " + (cfgdir / "threshold_gaussian.ini").string() +
                               " --out-dir " + out.string() + " threshold");
        CHECK(rc == 0);
        bool found = false;
        for (const auto& e : fs::directory_iterator(out))
            if (e.path().filename().string().starts_with("threshold_")) {
                CHECK(slurp(e.path()).find("R,ball_mass,lambda_min") != std::string::npos);
                found = true;
            }
        CHECK(found);
    }
    SECTION("kaplan emits the table plus a JSON sidecar") {
        const int rc = run_cli("--config " + (cfgdir / "kaplan_gaussian.ini").string() +
                               " --out-dir " + out.string() + " kaplan");
        CHECK(rc == 0);
        bool csv = false, sidecar = false;
        for (const auto& e : fs::directory_iterator(out)) {
            const auto name = e.path().filename().string();
            if (name.starts_with("kaplan_") && name.ends_with(".csv")) csv = true;
            if (name.starts_with("kaplan_") && name.ends_with(".json")) sidecar = true;
        }
        CHECK(csv);
        CHECK(sidecar);
    }
    fs::remove_all(out);
}
