#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>

#include "latscat/lattice.hpp"

using namespace latscat;

TEST_CASE("presets are self-adjoint and have the advertised symbols") {
    for (auto& name : preset_names()) CHECK_NOTHROW(preset_kernel(name));

    auto sq = preset_kernel("square1d");
    CHECK(sq.symbol_at({0.7, 0, 0})(0, 0).real() == doctest::Approx(2.0 * std::cos(0.7)));
    CHECK(std::abs(sq.symbol_at({0.7, 0, 0})(0, 0).imag()) < 1e-15);

    auto sq2 = preset_kernel("square");
    CHECK(sq2.symbol_at({0.4, -1.1, 0})(0, 0).real() ==
          doctest::Approx(2.0 * std::cos(0.4) + 2.0 * std::cos(1.1)));

    auto tri = preset_kernel("triangular");
    CHECK(tri.symbol_at({0.4, 0.9, 0})(0, 0).real() ==
          doctest::Approx(2.0 * std::cos(0.4) + 2.0 * std::cos(0.9) + 2.0 * std::cos(1.3)));

    auto hex = preset_kernel("hexagonal");
    auto h = hex.symbol_at({0.3, -0.8, 0});
    cplx g = 1.0 + std::exp(cplx(0, -0.3)) + std::exp(cplx(0, 0.8));
    CHECK(std::abs(h(0, 1) - g) < 1e-14);
    CHECK(std::abs(h(1, 0) - std::conj(g)) < 1e-14);
    CHECK(std::abs(h(0, 0)) < 1e-15);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(hex.symbol_at({0, 0, 0}));
    CHECK(es.eigenvalues()[0] == doctest::Approx(-3.0));
    CHECK(es.eigenvalues()[1] == doctest::Approx(3.0));

    auto kag = preset_kernel("kagome");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ek(kag.symbol_at({0, 0, 0}));
    CHECK(ek.eigenvalues()[0] == doctest::Approx(-2.0));
    CHECK(ek.eigenvalues()[1] == doctest::Approx(-2.0));
    CHECK(ek.eigenvalues()[2] == doctest::Approx(4.0));
    // flat band at -2 away from the zone center too
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> ek2(kag.symbol_at({1.1, -0.4, 0}));
    CHECK(ek2.eigenvalues()[0] == doctest::Approx(-2.0));
}

TEST_CASE("a non-self-adjoint kernel is rejected") {
    HoppingKernel k;
    k.d = 1;
    k.n = 1;
    k.terms = {{{1, 0, 0}, Eigen::MatrixXcd::Ones(1, 1)}};  // missing the -1 term
    CHECK_THROWS_AS(validate_selfadjoint(k), std::invalid_argument);

    HoppingKernel k2;
    k2.d = 1;
    k2.n = 1;
    Eigen::MatrixXcd a(1, 1), b(1, 1);
    a << cplx(0, 1.0);
    b << cplx(0, 1.0);  // should be -i
    k2.terms = {{{1, 0, 0}, a}, {{-1, 0, 0}, b}};
    CHECK_THROWS_AS(validate_selfadjoint(k2), std::invalid_argument);
}

TEST_CASE("kernel json roundtrip") {
    auto kag = preset_kernel("kagome");
    auto text = kernel_to_json(kag);
    auto back = kernel_from_json(text);
    CHECK(back.d == 2);
    CHECK(back.n == 3);
    RVec xi{0.7, -1.2, 0};
    CHECK((back.symbol_at(xi) - kag.symbol_at(xi)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(kernel_from_json("{\"preset\":\"square\"}").d == 2);
    CHECK_THROWS(kernel_from_json("{\"d\":1}"));
}

TEST_CASE("symbol derivatives match finite differences") {
    auto hex = preset_kernel("hexagonal");
    RVec xi{0.9, 0.2, 0};
    double h = 1e-6;
    for (int j = 0; j < 2; ++j) {
        RVec xp = xi, xm = xi;
        xp[j] += h;
        xm[j] -= h;
        Eigen::MatrixXcd fd = (hex.symbol_at(xp) - hex.symbol_at(xm)) / (2 * h);
        CHECK((fd - hex.dsymbol_at(xi, j)).cwiseAbs().maxCoeff() < 1e-8);
        Eigen::MatrixXcd fd2 =
            (hex.symbol_at(xp) - 2.0 * hex.symbol_at(xi) + hex.symbol_at(xm)) / (h * h);
        CHECK((fd2 - hex.d2symbol_at(xi, j, j)).cwiseAbs().maxCoeff() < 1e-3);
    }
}

TEST_CASE("long-range potential: closed form values and decay validation") {
    PotentialParams p;
    p.c = 1.0;
    p.rho = 0.5;
    auto v = build_potential(1, 1, p);
    CHECK(std::abs(v.long_range(IVec{10, 0, 0}) - v.long_range(IVec{9, 0, 0})) ==
          doctest::Approx(0.016870291).epsilon(1e-7));
    CHECK(v.long_range(0.0) == 1.0);

    PotentialParams bad;
    bad.rho = -0.3;
    CHECK_THROWS_AS(build_potential(1, 1, bad), std::invalid_argument);

    // a tabulated profile with a jump fails the difference-decay check
    PotentialParams tab;
    tab.rho = 0.5;
    tab.radial_table.assign(200, 0.0);
    for (int k = 0; k < 200; ++k) tab.radial_table[k] = std::pow(1.0 + k * k, -0.25);
    tab.radial_table[100] += 0.5;
    CHECK_THROWS_AS(build_potential(1, 1, tab), std::invalid_argument);
    tab.radial_table[100] -= 0.5;
    CHECK_NOTHROW(build_potential(1, 1, tab));
}

TEST_CASE("short-range potential modes") {
    PotentialParams p;
    p.c = 0.2;
    p.rho = 0.5;
    p.short_kind = "alternating";
    p.cs = 0.3;
    auto v = build_potential(1, 1, p);
    CHECK(v.p.rho_s == doctest::Approx(1.5));
    double v4 = v.short_range(IVec{4, 0, 0})(0, 0).real();
    double v5 = v.short_range(IVec{5, 0, 0})(0, 0).real();
    CHECK(v4 == doctest::Approx(0.3 * std::pow(17.0, -0.75)));
    CHECK(v5 < 0);

    PotentialParams q = p;
    q.rho_s = 1.2;  // slower than 1 + rho
    CHECK_THROWS_AS(build_potential(1, 1, q), std::invalid_argument);

    PotentialParams r;
    r.c = 0.1;
    r.rho = 0.8;
    r.short_kind = "random";
    r.cs = 0.25;
    r.seed = 9;
    auto vr = build_potential(2, 2, r);
    auto m = vr.short_range(IVec{3, -2, 0});
    CHECK((m - m.adjoint()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(m.operatorNorm() <= 0.25 * std::pow(jbracket(std::sqrt(13.0)), -1.8) + 1e-14);
    // deterministic in the seed
    auto vr2 = build_potential(2, 2, r);
    CHECK((vr2.short_range(IVec{3, -2, 0}) - m).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("smooth extension, closed form") {
    PotentialParams p;
    p.c = 0.2;
    p.rho = 0.5;
    auto e = smooth_extension(build_potential(1, 1, p));
    CHECK(e.eval(3.0) == doctest::Approx(0.2 * std::pow(10.0, -0.25)).epsilon(1e-14));
    double h = 1e-6;
    CHECK(e.deriv(3.0) ==
          doctest::Approx((e.eval(3.0 + h) - e.eval(3.0 - h)) / (2 * h)).epsilon(1e-8));
}

TEST_CASE("smooth extension, mollified table") {
    PotentialParams p;
    p.rho = 1.0;
    p.radial_table.resize(200);
    for (int k = 0; k < 200; ++k) p.radial_table[k] = std::pow(1.0 + k * k, -0.5);
    auto e = smooth_extension(build_potential(1, 1, p));
    CHECK(e.eval(5.5) == doctest::Approx(0.180257561).epsilon(1e-6));
    // independent cross-check: Simpson quadrature of the same mollified integral
    auto lin = [&](double y) {
        y = std::abs(y);
        int k = int(std::floor(y));
        double f = y - k;
        return (1 - f) * p.radial_table[k] + f * p.radial_table[k + 1];
    };
    auto bump = [](double s) {
        double q = 1.0 - 4.0 * s * s;
        return q > 0 ? std::exp(-1.0 / q) : 0.0;
    };
    int M = 4096;
    double hq = 1.0 / M, num = 0, den = 0;
    for (int i = 0; i < M; ++i) {
        double s0 = -0.5 + i * hq, s1 = s0 + hq, sm = 0.5 * (s0 + s1);
        den += bump(s0) + 4 * bump(sm) + bump(s1);
        num += bump(s0) * lin(5.5 - s0) + 4 * bump(sm) * lin(5.5 - sm) +
               bump(s1) * lin(5.5 - s1);
    }
    CHECK(e.eval(5.5) == doctest::Approx(num / den).epsilon(1e-7));
    // stays near the table on the lattice itself
    CHECK(std::abs(e.eval(5.0) - p.radial_table[5]) < 0.01);
}

TEST_CASE("state io and diagnostics") {
    Box b{1, 40};
    std::mt19937_64 rng(5);
    auto u = random_state(b, 2, 10, rng);
    CHECK(u.boundary_mass() == 0.0);
    u.at(0, IVec{39, 0, 0}) = 3.0;
    CHECK(u.boundary_mass() > 0.0);

    u.save("state_roundtrip.bin");
    auto v = LatticeState::load("state_roundtrip.bin");
    CHECK(v.box.L == 40);
    CHECK(v.n == 2);
    CHECK((v.a - u.a).norm() == 0.0);
    std::remove("state_roundtrip.bin");

    auto g = gaussian_packet(Box{1, 100}, 1, {20, 0, 0}, {-PI / 3, 0, 0}, 8.0);
    CHECK(std::abs(g.at(0, IVec{20, 0, 0})) == doctest::Approx(1.0));
    CHECK(std::abs(g.at(0, IVec{28, 0, 0})) == doctest::Approx(std::exp(-0.25)));
}

TEST_CASE("potential diagonal assembly") {
    PotentialParams p;
    p.c = 0.2;
    p.rho = 0.5;
    auto v = build_potential(1, 1, p);
    Box b{1, 8};
    auto diag = v.diagonal(b);
    CHECK(diag.size() == 17);
    CHECK(diag[b.index(IVec{0, 0, 0})].real() == doctest::Approx(0.2));
    CHECK(diag[b.index(IVec{4, 0, 0})].real() ==
          doctest::Approx(0.2 * std::pow(17.0, -0.25)));
}
