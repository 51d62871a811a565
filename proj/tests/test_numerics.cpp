#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "latscat/numerics.hpp"

using namespace latscat;

TEST_CASE("smooth step endpoints and symmetry") {
    CHECK(smooth_step(-0.2) == 0.0);
    CHECK(smooth_step(0.0) == 0.0);
    CHECK(smooth_step(1.0) == 1.0);
    CHECK(smooth_step(2.5) == 1.0);
    CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-14));
    for (double t : {0.1, 0.3, 0.45, 0.8})
        CHECK(smooth_step(t) + smooth_step(1.0 - t) == doctest::Approx(1.0).epsilon(1e-14));
    // monotone
    double prev = -1;
    for (int i = 0; i <= 100; ++i) {
        double v = smooth_step(i / 100.0);
        CHECK(v >= prev);
        prev = v;
    }
}

TEST_CASE("sigma pair is an exact quadratic partition") {
    for (double th : {-1.0, -0.5, -0.2, 0.0, 0.3, 0.5, 1.0}) {
        auto [sp, sm] = sigma_pair(th);
        CHECK(sp * sp + sm * sm == doctest::Approx(1.0).epsilon(1e-15));
    }
    CHECK(sigma_pair(0.6).first == 1.0);
    CHECK(sigma_pair(0.6).second == 0.0);
    CHECK(sigma_pair(-0.6).first == 0.0);
    CHECK(sigma_pair(-0.6).second == 1.0);
    CHECK(sigma_pair(1.0).first == 1.0);
    CHECK(sigma_pair(-1.0).second == 1.0);
}

TEST_CASE("radial cutoff plateaus") {
    double R = 6.0;
    CHECK(radial_cutoff(0.0, R) == 0.0);
    CHECK(radial_cutoff(6.0, R) == 0.0);
    CHECK(radial_cutoff(12.0, R) == 1.0);
    CHECK(radial_cutoff(30.0, R) == 1.0);
    CHECK(radial_cutoff(9.0, R) == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("plateau window support and flat top") {
    auto chi = plateau_window(0.5, 1.5, 0.25);
    CHECK(chi(0.5) == 1.0);
    CHECK(chi(1.0) == 1.0);
    CHECK(chi(1.5) == 1.0);
    CHECK(chi(0.25) == 0.0);
    CHECK(chi(1.75) == 0.0);
    CHECK(chi(0.4) > 0.0);
    CHECK(chi(0.4) < 1.0);
    // a slightly wider plateau is identically 1 on the support of chi
    auto wide = plateau_window(0.25, 1.75, 0.125);
    for (double l = 0.26; l < 1.75; l += 0.01)
        if (chi(l) > 0) CHECK(wide(l) == 1.0);
}

TEST_CASE("bump window") {
    auto psi = bump_window(0.5, 1.5);
    CHECK(psi(1.0) == 1.0);
    CHECK(psi(0.5) == 0.0);
    CHECK(psi(1.5) == 0.0);
    CHECK(psi(0.45) == 0.0);
    CHECK(psi(1.2) > 0.0);
    auto ind = sharp_window(0.5, 1.5);
    CHECK(ind(0.7) == 1.0);
    CHECK(ind(1.51) == 0.0);
}

TEST_CASE("log-log slope recovers a power law") {
    std::vector<double> x, y;
    for (int k = 1; k <= 20; ++k) {
        x.push_back(2.0 * k);
        y.push_back(3.7 * std::pow(2.0 * k, -2.5));
    }
    CHECK(loglog_slope(x, y) == doctest::Approx(-2.5).epsilon(1e-12));
}

TEST_CASE("trapezoid") {
    std::vector<double> y;
    for (int i = 0; i <= 100; ++i) y.push_back(double(i) / 100.0);
    CHECK(trapezoid(y, 0.01) == doctest::Approx(0.5).epsilon(1e-13));
}

TEST_CASE("Bessel J by Miller recurrence") {
    auto j1 = bessel_j_array(1.0, 8);
    CHECK(j1[0] == doctest::Approx(0.7651976865579666).epsilon(1e-13));
    CHECK(j1[1] == doctest::Approx(0.4400505857449335).epsilon(1e-13));
    auto j10 = bessel_j_array(10.0, 30);
    CHECK(j10[0] == doctest::Approx(-0.2459357644513483).epsilon(1e-12));
    CHECK(j10[4] == doctest::Approx(-0.21960268610200854).epsilon(1e-12));
    auto j2 = bessel_j_array(2.0, 12);
    CHECK(j2[5] == doctest::Approx(0.007039629755871685).epsilon(1e-11));
    // Parseval-type identity J_0^2 + 2 sum_{k>=1} J_k^2 = 1
    auto jlong = bessel_j_array(10.0, 60);
    double s = jlong[0] * jlong[0];
    for (int k = 1; k <= 60; ++k) s += 2.0 * jlong[k] * jlong[k];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("Nelder-Mead finds a smooth minimum") {
    auto f = [](const Eigen::VectorXd& p) {
        double a = p[0] - 1.3, b = p[1] + 0.4;
        return a * a + 2.0 * b * b;
    };
    Eigen::VectorXd start(2);
    start << 0.0, 0.0;
    auto m = nelder_mead(f, start, 0.5, 500, 1e-14);
    CHECK(m[0] == doctest::Approx(1.3).epsilon(1e-5));
    CHECK(m[1] == doctest::Approx(-0.4).epsilon(1e-5));
}

TEST_CASE("power iteration on a diagonal operator") {
    Eigen::VectorXcd dvals(6);
    dvals << 0.3, 1.7, -2.4, 0.9, 2.2, -1.1;
    auto apply = [&](const Eigen::VectorXcd& z) -> Eigen::VectorXcd {
        return dvals.array() * z.array();
    };
    double nrm = power_opnorm(apply, apply, 6, 77);
    CHECK(nrm == doctest::Approx(2.4).epsilon(1e-3));
}

TEST_CASE("seed derivation is deterministic and label-sensitive") {
    CHECK(derive_seed(42, "cook") == derive_seed(42, "cook"));
    CHECK(derive_seed(42, "cook") != derive_seed(42, "mourre"));
    CHECK(derive_seed(42, "cook") != derive_seed(43, "cook"));
}
