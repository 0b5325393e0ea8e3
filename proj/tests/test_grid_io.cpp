#include "nld/grid.hpp"
#include "nld/io.hpp"

#include "oracles.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

using namespace nld;
using Catch::Approx;

TEST_CASE("grid construction and geometry") {
    Grid g(1, 20.0, 256);
    CHECK(g.spacing() == Approx(40.0 / 256));
    CHECK(g.coord(g.origin_index()) == 0.0);
    CHECK(g.total() == 256);
    CHECK(Grid(2, 10.0, 64).total() == 64u * 64u);

    CHECK_THROWS_AS(Grid(3, 10.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1, -1.0, 64), std::invalid_argument);
    CHECK_THROWS_AS(Grid(1, 10.0, 63), std::invalid_argument);  // odd
    CHECK_THROWS_AS(Grid(2, 10.0, 8192), std::invalid_argument); // memory cap
}

TEST_CASE("sampling") {
    Grid g(1, 1.0, 4);
    SECTION("constants") {
        const Field one = sample(g, [](double) { return 1.0; });
        for (double v : one.values) CHECK(v == 1.0);
        CHECK(l1_norm(one) == Approx(2.0)); // box volume in 1D
        const Field one2 = sample(Grid(2, 1.0, 4), [](double, double) { return 1.0; });
        CHECK(l1_norm(one2) == Approx(4.0)); // 2^N
    }
    SECTION("indicator support count") {
        Grid gg(1, 10.0, 128);
        const double R = 3.0;
        const Field ind = sample(gg, [&](double x) { return std::abs(x) <= R ? 1.0 : 0.0; });
        long nz = 0;
        for (double v : ind.values) nz += v != 0.0;
        const long expect = static_cast<long>(2.0 * R / gg.spacing());
        CHECK(std::abs(nz - expect) <= 1);
    }
    SECTION("Gaussian mass to 1e-8 on a wide box") {
        Grid gg(1, 10.0, 512); // L = 10 sigma
        const Field gau = sample(gg, [](double x) {
            return std::exp(-x * x / 2.0) / std::sqrt(2.0 * std::numbers::pi);
        });
        CHECK(l1_norm(gau) == Approx(1.0).margin(1e-8));
    }
    SECTION("non-finite sample is a construction error") {
        CHECK_THROWS_AS(sample(g, [](double x) { return 1.0 / x; }), std::invalid_argument);
    }
}

TEST_CASE("norms and localized mass") {
    Grid g(1, 10.0, 128);
    const Field u = sample(g, [](double x) { return std::abs(x) <= 2.0 ? 1.5 : 0.0; });
    const Norms n = norms(u);
    CHECK(n.linf == 1.5);
    CHECK(n.l1 == Approx(1.5 * 4.0).margin(1.5 * g.spacing()));
    CHECK(n.l1 >= std::pow(g.spacing(), 1) * n.linf); // single-cell lower bound

    CHECK(localized_mass(u, 2.0 + g.spacing()) == Approx(n.l1).margin(1e-12));
    CHECK(localized_mass(u, 1.0) <= n.l1);
    CHECK_THROWS_AS(localized_mass(u, 10.0), std::domain_error);
    // approaches L1 as R -> L
    CHECK(localized_mass(u, 9.99) == Approx(n.l1).margin(1e-12));
}

TEST_CASE("convolution") {
    Grid g(1, 20.0, 512);
    const auto kernel = KernelSpec::gaussian(1.0, 1);
    const DiscreteKernel dk = discretize(kernel, g);

    SECTION("unit-mass kernel preserves constants") {
        const Field one = sample(g, [](double) { return 1.0; });
        const Field r = convolve(dk.field, one);
        for (double v : r.values) CHECK(v == Approx(1.0).margin(1e-13));
    }
    SECTION("convolution with a delta column reproduces the kernel") {
        Field delta(g);
        delta.at(g.origin_index()) = 1.0;
        const Field r = convolve(dk.field, delta);
        const double h = g.spacing();
        for (std::size_t i = 0; i < r.size(); ++i)
            CHECK(r.values[i] == Approx(h * dk.field.values[i]).margin(1e-13));
    }
    SECTION("Gaussian * Gaussian has spread sqrt(2) (closed form, sup <= 1e-6)") {
        const Field a = sample(g, [](double x) { return std::exp(-x * x / 2.0); });
        const Field r = convolve(a, a);
        // masses multiply; variance adds
        double worst = 0.0;
        for (int i = 0; i < g.points_per_axis; ++i) {
            const double x = g.coord(i);
            const double expect = std::sqrt(std::numbers::pi) * std::exp(-x * x / 4.0);
            worst = std::max(worst, std::abs(r.at(i) - expect));
        }
        CHECK(worst <= 1e-6);
    }
    SECTION("commutativity and positivity on random fields") {
        std::mt19937_64 rng(42);
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        Field a(g), b(g);
        for (auto& v : a.values) v = u01(rng);
        for (auto& v : b.values) v = u01(rng);
        const Field ab = convolve(a, b);
        const Field ba = convolve(b, a);
        double worst = 0.0, neg = 0.0;
        for (std::size_t i = 0; i < ab.size(); ++i) {
            worst = std::max(worst, std::abs(ab.values[i] - ba.values[i]));
            neg = std::min(neg, ab.values[i]);
        }
        CHECK(worst <= 1e-12 * linf_norm(ab));
        CHECK(neg >= -1e-12);
    }
    SECTION("mass multiplies exactly") {
        const Field a = sample(g, [](double x) { return std::exp(-x * x); });
        const Field b = sample(g, [](double x) { return std::exp(-x * x / 3.0); });
        CHECK(total_mass(convolve(a, b)) == Approx(total_mass(a) * total_mass(b)).epsilon(1e-13));
    }
    SECTION("self-convergence under grid refinement") {
        Grid g2(1, 20.0, 1024);
        const auto mk = [](const Grid& gg) {
            return sample(gg, [](double x) { return std::exp(-x * x / 2.0); });
        };
        const Field c1 = convolve(discretize(kernel, g).field, mk(g));
        const Field c2 = convolve(discretize(kernel, g2).field, mk(g2));
        double worst = 0.0;
        for (int i = 0; i < g.points_per_axis; ++i)
            worst = std::max(worst, std::abs(c1.at(i) - c2.at(2 * i)));
        CHECK(worst <= 1e-10);
    }
    SECTION("grid mismatch and integrity errors") {
        Grid g2(1, 20.0, 256);
        CHECK_THROWS_AS(convolve(dk.field, Field(g2)), std::invalid_argument);
        Field bad(g);
        bad.values[3] = std::numeric_limits<double>::quiet_NaN();
        CHECK_THROWS_AS(convolve(dk.field, bad), numerical_error);
    }
    SECTION("2D convolution keeps constants and masses") {
        Grid gg(2, 10.0, 64);
        const DiscreteKernel dk2 = discretize(KernelSpec::gaussian(1.0, 2), gg);
        const Field one = sample(gg, [](double, double) { return 1.0; });
        const Field r = convolve(dk2.field, one);
        for (double v : r.values) CHECK(v == Approx(1.0).margin(1e-12));
    }
}

TEST_CASE("discrete kernels") {
    Grid g(1, 20.0, 256);
    SECTION("renormalized to unit discrete mass") {
        for (const auto& k : {KernelSpec::gaussian(1.0, 1), KernelSpec::cauchy(),
                              KernelSpec::algebraic_tail(2.5, 1.0, 1)}) {
            const DiscreteKernel dk = discretize(k, g);
            CHECK(total_mass(dk.field) == Approx(1.0).margin(1e-14));
        }
    }
    SECTION("truncated-out mass metadata for heavy tails") {
        const DiscreteKernel dk = discretize(KernelSpec::cauchy(), g);
        // int_{|x|>20} of the Cauchy density = 1 - (2/pi) atan(20)
        CHECK(dk.truncated_mass ==
              Approx(1.0 - 2.0 / std::numbers::pi * std::atan(20.0)).epsilon(1e-12));
        CHECK(dk.truncated_mass > 0.03);
        const DiscreteKernel dg = discretize(KernelSpec::gaussian(1.0, 1), g);
        CHECK(dg.truncated_mass < 1e-15);
    }
    SECTION("discrete symbol is 1 at frequency zero and bounded by one") {
        const DiscreteKernel dk = discretize(KernelSpec::gaussian(1.0, 1), g);
        const auto sym = discrete_symbol(dk);
        CHECK(sym[0] == Approx(1.0).margin(1e-14));
        for (double s : sym) CHECK(std::abs(s) <= 1.0 + 1e-13);
    }
}

TEST_CASE("boundary monitor") {
    Grid g(1, 10.0, 128);
    const Field centered = sample(g, [](double x) { return std::exp(-x * x); });
    const Field shifted = sample(g, [](double x) { return std::exp(-(x - 9.5) * (x - 9.5)); });
    CHECK(boundary_mass(centered) < 1e-4 * l1_norm(centered));
    CHECK(boundary_mass(shifted) > 0.2 * l1_norm(shifted));
}

TEST_CASE("field snapshots round-trip through the binary format") {
    namespace fs = std::filesystem;
    const fs::path tmp = fs::temp_directory_path() / "nld_field_test.bin";
    Grid g(1, 5.0, 64);
    const Field u = sample(g, [](double x) { return std::sin(x) + 2.0; });
    write_field_bin(u, tmp, 3.25);
    const FieldSnapshot snap = read_field_bin(tmp);
    CHECK(snap.time == 3.25);
    CHECK(snap.field.grid == g);
    for (std::size_t i = 0; i < u.size(); ++i) CHECK(snap.field.values[i] == u.values[i]);

    // header layout: dim u32 | M u32 | L f64 | time f64, little endian
    std::ifstream is(tmp, std::ios::binary);
    std::uint32_t dim = 0, m = 0;
    is.read(reinterpret_cast<char*>(&dim), 4);
    is.read(reinterpret_cast<char*>(&m), 4);
    CHECK(dim == 1);
    CHECK(m == 64);
    fs::remove(tmp);
}

TEST_CASE("csv emitters are deterministic") {
    namespace fs = std::filesystem;
    Grid g(1, 2.0, 8);
    const Field u = sample(g, [](double x) { return x * x; });
    const fs::path a = fs::temp_directory_path() / "nld_csv_a.csv";
    const fs::path b = fs::temp_directory_path() / "nld_csv_b.csv";
    write_field_csv(u, a);
    write_field_csv(u, b);
    std::ifstream fa(a), fb(b);
    std::string sa((std::istreambuf_iterator<char>(fa)), {});
    std::string sb((std::istreambuf_iterator<char>(fb)), {});
    CHECK(sa == sb);
    CHECK(sa.find("x,value") == 0);
    fs::remove(a);
    fs::remove(b);
}
