#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <latscat/eikonal.hpp>
#include <latscat/propagation.hpp>

using namespace latscat;

namespace {

Eigen::VectorXd chain_potential(const Box& box, double c, double rho) {
    Eigen::VectorXd vd(box.nodes());
    for (std::int64_t i = 0; i < box.nodes(); ++i)
        vd[i] = c * std::pow(jbracket(norm2(box.site(i), box.d)), -rho);
    return vd;
}

// everything the chain scattering runs share: kernel, dual grid, cutoffs, and
// modifiers with either the solved phase or the flat x.xi one
struct ChainRig {
    HoppingKernel k = preset_kernel("square1d");
    Box box;
    TorusGrid grid;
    BandData bands;
    CutoffSet cut;

    explicit ChainRig(int L) {
        box = Box{1, L};
        grid = dual_grid(box);
        bands = compute_bands(k, grid);
        BandChart chart(k);
        cut = build_cutoffs(6.0, window_margin(bands, chart, 0.5, 1.5), bands);
    }

    std::vector<std::int64_t> nodes() const {
        std::vector<std::int64_t> out;
        for (std::int64_t m = 0; m < grid.nodes(); ++m)
            if (cut.chi(bands.lambda(m, 0)) > 1e-14) out.push_back(m);
        return out;
    }

    Modifier modifier(int sign, bool with_phase) const {
        PhaseFunction ph;
        if (with_phase) {
            SmoothExtension vt;
            vt.c = 0.2;
            vt.rho = 0.5;
            PhaseOptions opt;
            opt.tol = 1e-10;
            ph = solve_phase(k, 0, vt, ConeRegion{sign, cut.R}, box.L, nodes(), grid, opt);
        } else {
            ph.sign = sign;
            ph.R = cut.R;
        }
        return build_modifier(0, sign, ph, cut, bands);
    }
};

LatticeState window_packet(const EvolutionEngine& e, double x0, double sigma,
                           bool full_filter) {
    LatticeState pk =
        gaussian_packet(e.box, 1, RVec{x0, 0, 0}, RVec{-PI / 3, 0, 0}, sigma);
    LatticeState u = full_filter ? filter_full(e, bump_window(0.5, 1.5), pk)
                                 : filter_free(e, bump_window(0.5, 1.5), pk);
    u.a /= u.a.norm();
    return u;
}

}  // namespace

TEST_CASE("conjugate operator is symmetric on interior probes") {
    {
        HoppingKernel k = preset_kernel("square1d");
        Box box{1, 100};
        auto e = build_engine(k, box, chain_potential(box, 0.2, 0.5), "eigen");
        BandChart chart(k);
        EnergyWindow win = window_margin(e.bands, chart, 0.5, 1.5);
        auto A = build_conjugate(e, plateau_window(0.5, 1.5, win.margin / 2));
        std::mt19937_64 rng(derive_seed(99, "conj"));
        double worst = 0;
        for (int t = 0; t < 10; ++t) {
            LatticeState u = random_state(box, 1, 40, rng);
            LatticeState v = random_state(box, 1, 40, rng);
            u.a /= u.a.norm();
            v.a /= v.a.norm();
            const cplx lhs = conjugate_apply(A, u).a.dot(v.a);
            const cplx rhs = u.a.dot(conjugate_apply(A, v).a);
            worst = std::max(worst, std::abs(lhs - rhs));
        }
        CHECK(worst < 1e-10);
    }
    {
        HoppingKernel k = preset_kernel("hexagonal");
        Box box{2, 8};
        auto e = build_engine(k, box, Eigen::VectorXd(), "chebyshev");
        auto A = build_conjugate(e, plateau_window(1.5, 2.5, 0.25));
        std::mt19937_64 rng(derive_seed(99, "conj2"));
        double worst = 0;
        for (int t = 0; t < 6; ++t) {
            LatticeState u = random_state(box, 2, 3, rng);
            LatticeState v = random_state(box, 2, 3, rng);
            const cplx lhs = conjugate_apply(A, u).a.dot(v.a);
            const cplx rhs = u.a.dot(conjugate_apply(A, v).a);
            worst = std::max(worst, std::abs(lhs - rhs) / (u.norm() * v.norm()));
        }
        CHECK(worst < 1e-10);
    }
}

TEST_CASE("commutator positivity constant over the energy window") {
    // chain: the refined crossing at the upper edge gives the exact minimum
    // 2|grad lambda|^2 = 8 - 2 lambda^2 at lambda = 1.5
    {
        HoppingKernel k = preset_kernel("square1d");
        TorusGrid g = dual_grid(Box{1, 512});
        BandData bands = compute_bands(k, g);
        BandChart chart(k);
        MourreReport r = mourre_check(bands, chart, 0.5, 1.5, sharp_window(0.5, 1.5));
        CHECK(r.cstar == doctest::Approx(3.5).epsilon(1e-6));

        auto zero = [](double) { return 0.0; };
        CHECK(mourre_check(bands, chart, 0.5, 1.5, zero).cstar == 0.0);

        // window touching a band edge has no admissible margin
        CHECK_THROWS_AS(mourre_check(bands, chart, 1.9, 2.1, sharp_window(1.9, 2.1)),
                        std::invalid_argument);
    }
    {
        HoppingKernel k = preset_kernel("hexagonal");
        TorusGrid g = uniform_grid(2, 255);
        BandData bands = compute_bands(k, g);
        BandChart chart(k);
        MourreReport r = mourre_check(bands, chart, 1.5, 2.5, sharp_window(1.5, 2.5));
        CHECK(r.cstar == doctest::Approx(0.57767482).epsilon(1e-6));
        CHECK(r.cstar > 0.5);
    }
}

TEST_CASE("localized commutator form is positive apart from the wrap pair") {
    // x against periodic hopping breaks one bond at the seam; that injects a
    // rank-two negative pair growing linearly with L, everything else is
    // nonnegative to roundoff
    HoppingKernel k = preset_kernel("square1d");
    BandChart chart(k);
    auto psi = bump_window(0.5, 1.5);

    auto lows = [&](int L, bool with_pot) {
        Box box{1, L};
        Eigen::VectorXd vd =
            with_pot ? chain_potential(box, 0.2, 0.5) : Eigen::VectorXd();
        auto e = build_engine(k, box, vd, "eigen");
        BandData bands = compute_bands(k, dual_grid(box));
        return mourre_check(bands, chart, 0.5, 1.5, psi, &e, 4).low;
    };

    auto f40 = lows(40, false);
    CHECK(f40[0] == doctest::Approx(-11.604808).epsilon(1e-5));
    CHECK(f40[1] == doctest::Approx(-11.600071).epsilon(1e-5));
    CHECK(f40[2] > -1e-10);
    CHECK(f40[3] > -1e-10);

    auto v40 = lows(40, true);
    CHECK(v40[0] == doctest::Approx(-11.625688).epsilon(1e-5));
    CHECK(v40[1] == doctest::Approx(-11.602491).epsilon(1e-5));
    CHECK(v40[2] > -1e-10);

    auto f60 = lows(60, false);
    CHECK(f60[0] == doctest::Approx(-19.462781).epsilon(1e-5));
    CHECK(f60[1] == doctest::Approx(-19.452670).epsilon(1e-5));
    CHECK(f60[2] > -1e-10);

    auto v60 = lows(60, true);
    CHECK(v60[0] == doctest::Approx(-19.589411).epsilon(1e-5));
    CHECK(v60[1] == doctest::Approx(-19.556267).epsilon(1e-5));

    // the artifact scales with the box, the clean part does not
    CHECK(std::abs(f60[0]) > std::abs(f40[0]));

    Box small{1, 32};
    auto cheb = build_engine(k, small, Eigen::VectorXd(), "chebyshev");
    BandData bsmall = compute_bands(k, dual_grid(small));
    CHECK_THROWS_WITH_AS(mourre_check(bsmall, chart, 0.5, 1.5, psi, &cheb, 4),
                         doctest::Contains("eigen-method"), std::invalid_argument);
}

TEST_CASE("intertwining defect decays along the free flow and the limits close") {
    ChainRig rig(1024);
    Modifier Jp = rig.modifier(+1, true);
    Modifier Jm = rig.modifier(-1, true);
    auto ev = build_engine(rig.k, rig.box, chain_potential(rig.box, 0.2, 0.5),
                           "chebyshev");
    LatticeState u = window_packet(ev, 50.0, 12.0, false);

    std::vector<double> ts;
    for (int t = 10; t <= 100; t += 5) ts.push_back(t);
    DecayCurve cook = cook_curve(ev, Jp, u, ts);
    CHECK(cook.slope == doctest::Approx(-1.532618).epsilon(1e-5));
    CHECK(cook.slope < -1.2);
    CHECK(cook.vals.front() == doctest::Approx(7.690466e-04).epsilon(1e-5));
    CHECK(cook.vals.back() == doctest::Approx(8.612125e-06).epsilon(1e-5));

    // without a potential the flat modifier intertwines exactly up to cutoff
    // tails, so the defect decays much faster
    auto e0 = build_engine(rig.k, rig.box, Eigen::VectorXd(), "chebyshev");
    Modifier Jp0 = rig.modifier(+1, false);
    std::vector<double> tsf;
    for (int t = 20; t <= 80; t += 5) tsf.push_back(t);
    DecayCurve cook0 = cook_curve(e0, Jp0, u, tsf);
    CHECK(cook0.slope == doctest::Approx(-5.089302).epsilon(1e-5));
    CHECK(cook0.vals.front() == doctest::Approx(1.560192e-05).epsilon(1e-5));
    CHECK(cook0.vals.back() == doctest::Approx(5.986996e-09).epsilon(1e-5));

    // a state filtered below the window is annihilated by the cutoffs
    LatticeState plow =
        gaussian_packet(rig.box, 1, RVec{50, 0, 0}, RVec{2 * PI / 3, 0, 0}, 12.0);
    LatticeState ulow = filter_free(ev, bump_window(-1.5, -0.5), plow);
    ulow.a /= ulow.a.norm();
    DecayCurve dis = cook_curve(ev, Jp, ulow, {10.0, 40.0});
    CHECK(dis.vals[0] < 1e-10);
    CHECK(dis.vals[1] < 1e-10);

    // incoming modifier against the outgoing packet
    DecayCurve mis =
        mismatch_decay(ev, Jm, u, {0, 20, 30, 40, 50, 60, 70, 80, 90, 100});
    CHECK(mis.vals[0] == doctest::Approx(0.001234).epsilon(1e-3));
    CHECK(mis.vals[1] == doctest::Approx(1.703807e-06).epsilon(1e-5));
    CHECK(mis.vals.back() == doctest::Approx(3.464398e-09).epsilon(1e-5));
    DecayCurve mist =
        mismatch_decay(ev, Jm, u, {20, 30, 40, 50, 60, 70, 80, 90, 100});
    CHECK(mist.slope == doctest::Approx(-3.884484).epsilon(1e-5));
    CHECK(mist.slope < -3.0);

    // Cauchy gaps shrink, the limit is near-isometric, and both signs
    // decompose the window state
    WaveOpReport w = wave_operator_estimate(ev, Jp, u, {25, 50, 75, 100});
    REQUIRE(w.gaps.size() == 3);
    CHECK(w.gaps[0] == doctest::Approx(6.080884e-04).epsilon(1e-5));
    CHECK(w.gaps[1] == doctest::Approx(3.667936e-04).epsilon(1e-5));
    CHECK(w.gaps[2] == doctest::Approx(2.529570e-04).epsilon(1e-5));
    CHECK(w.gaps[0] > w.gaps[1]);
    CHECK(w.gaps[1] > w.gaps[2]);
    CHECK(w.isometry == doctest::Approx(1.00221823).epsilon(1e-6));
    CHECK(std::abs(w.isometry - 1.0) < 0.02);
    CHECK(w.defect == doctest::Approx(8.612125e-06).epsilon(1e-5));
    CHECK(w.defect < 5 * w.gaps.back());
    CHECK(w.last.norm() == doctest::Approx(w.isometry).epsilon(1e-9));

    WaveOpReport wm = wave_operator_estimate(ev, Jm, u, {100});
    const double dec = w.isometry * w.isometry + wm.isometry * wm.isometry;
    CHECK(dec == doctest::Approx(1.00444138).epsilon(1e-6));
    CHECK(std::abs(dec - 1.0) < 0.02);

    // with V = 0 the two flat signs partition the state exactly
    Modifier Jm0 = rig.modifier(-1, false);
    WaveOpReport p0 = wave_operator_estimate(e0, Jp0, u, {40});
    WaveOpReport m0 = wave_operator_estimate(e0, Jm0, u, {40});
    CHECK(p0.isometry * p0.isometry + m0.isometry * m0.isometry ==
          doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("inverse comparison converges on a full-dynamics window state") {
    ChainRig rig(256);
    Modifier Jp = rig.modifier(+1, true);
    auto e = build_engine(rig.k, rig.box, chain_potential(rig.box, 0.2, 0.5),
                          "eigen");
    LatticeState u = window_packet(e, 20.0, 8.0, true);

    WaveOpReport r = inverse_wave_estimate(e, Jp, u, {15, 30, 45, 60});
    REQUIRE(r.gaps.size() == 3);
    CHECK(r.gaps[0] == doctest::Approx(8.513127e-03).epsilon(1e-5));
    CHECK(r.gaps[1] == doctest::Approx(8.742057e-04).epsilon(1e-5));
    CHECK(r.gaps[2] == doctest::Approx(4.166673e-04).epsilon(1e-5));
    CHECK(r.gaps[0] > r.gaps[1]);
    CHECK(r.gaps[1] > r.gaps[2]);
    CHECK(r.norms.back() == doctest::Approx(1.00317917).epsilon(1e-6));
    CHECK(std::abs(r.norms.back() - 1.0) < 0.01);
    CHECK(r.defect == doctest::Approx(2.380473e-05).epsilon(1e-5));
}

TEST_CASE("plain comparison closes for short-range scattering") {
    HoppingKernel k = preset_kernel("square1d");
    Box box{1, 512};
    Eigen::VectorXd vd(box.nodes());
    for (std::int64_t i = 0; i < box.nodes(); ++i) {
        const int x = box.site(i)[0];
        const double sgn = (std::abs(x) % 2 == 0) ? 1.0 : -1.0;
        vd[i] = 0.3 * sgn * std::pow(jbracket(double(x)), -1.5);
    }
    auto e = build_engine(k, box, vd, "chebyshev");
    LatticeState u = window_packet(e, 50.0, 12.0, false);

    WaveOpReport r = wave_operator_plain(e, u, {25, 50, 75, 100});
    CHECK(r.gaps[0] == doctest::Approx(2.031668e-04).epsilon(1e-5));
    CHECK(r.gaps[1] == doctest::Approx(1.159887e-04).epsilon(1e-5));
    CHECK(r.gaps[2] == doctest::Approx(7.815136e-05).epsilon(1e-5));
    CHECK(r.gaps[0] > r.gaps[1]);
    CHECK(r.gaps[1] > r.gaps[2]);
    // J = Id and unitary free flow make the comparison exactly norm-preserving
    CHECK(r.isometry == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.defect == doctest::Approx(9.108798e-05).epsilon(1e-5));
    CHECK(r.defect < 5 * r.gaps.back());

    // and with no potential at all the comparison is the identity
    auto e0 = build_engine(k, box, Eigen::VectorXd(), "chebyshev");
    WaveOpReport r0 = wave_operator_plain(e0, u, {25, 50});
    CHECK(r0.gaps[0] < 1e-12);
    CHECK(r0.isometry == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r0.defect < 1e-14);
}

TEST_CASE("radiation integral drops between successive time windows") {
    HoppingKernel k = preset_kernel("square1d");
    Box box{1, 512};
    auto e = build_engine(k, box, chain_potential(box, 0.2, 0.5), "eigen");
    LatticeState pk =
        gaussian_packet(box, 1, RVec{50, 0, 0}, RVec{-PI / 3, 0, 0}, 12.0);

    auto psi = bump_window(0.5, 1.5);
    auto chi = plateau_window(0.5, 1.5, 0.25);
    RadiationReport r = radiation_integral(e, psi, chi, 0, pk, 80.0, 0.5);
    CHECK(r.ts.front() == 0.0);
    CHECK(r.ts.back() == doctest::Approx(80.0));
    CHECK(r.ts.size() == 161);
    CHECK(r.first == doctest::Approx(9.756876e-09).epsilon(1e-5));
    CHECK(r.second == doctest::Approx(2.083407e-09).epsilon(1e-5));
    CHECK(r.ratio == doctest::Approx(0.213532).epsilon(1e-5));
    CHECK(r.ratio < 0.7);
    for (double v : r.vals) CHECK(v >= 0.0);

    // input with no mass in the window contributes nothing
    LatticeState lo(box, 1);
    lo.at(0, IVec{0, 0, 0}) = 1.0;
    LatticeState q = filter_full(e, bump_window(-1.9, -1.2), lo);
    RadiationReport rq = radiation_integral(e, psi, chi, 0, q, 10.0, 0.5);
    double mx = 0;
    for (double v : rq.vals) mx = std::max(mx, v);
    CHECK(mx < 1e-20);

    Box small{1, 64};
    auto cheb = build_engine(k, small, Eigen::VectorXd(), "chebyshev");
    CHECK_THROWS_AS(radiation_integral(cheb, psi, chi, 0, pk, 10.0, 0.5),
                    std::invalid_argument);
}

TEST_CASE("radiation defect singles out motion across the rays") {
    // free square-lattice packet moving in +x: an offset along the motion axis
    // stays nearly radial, a transverse offset does not
    HoppingKernel k = preset_kernel("square");
    Box box{2, 128};
    auto e = build_engine(k, box, Eigen::VectorXd(), "chebyshev");
    auto chi = plateau_window(1.0, 3.0, 0.25);

    auto defect_at = [&](double x, double y) {
        LatticeState u =
            gaussian_packet(box, 1, RVec{x, y, 0}, RVec{-PI / 2, 0, 0}, 6.0);
        u.a /= u.a.norm();
        LatticeState ut = evolve_free(e, u, 20.0);
        return radiation_defect(*e.ft, e.bands, 0, chi, ut);
    };

    const double al20 = defect_at(20.0, 0.0), tr20 = defect_at(0.0, 20.0);
    CHECK(al20 == doctest::Approx(7.155037e-04).epsilon(1e-5));
    CHECK(tr20 == doctest::Approx(1.908361e-02).epsilon(1e-5));
    CHECK(tr20 / al20 > 10.0);

    const double al30 = defect_at(30.0, 0.0), tr30 = defect_at(0.0, 30.0);
    CHECK(al30 == doctest::Approx(4.885943e-04).epsilon(1e-5));
    CHECK(tr30 == doctest::Approx(2.950411e-02).epsilon(1e-5));
    CHECK(tr30 / al30 > tr20 / al20);
}

TEST_CASE("weighted resolvent norm stays level into the window") {
    HoppingKernel k = preset_kernel("square1d");
    Box box{1, 256};
    Eigen::VectorXd vd = chain_potential(box, 0.2, 0.5);

    LapReport r = lap_scan(k, box, vd, {1.0}, {0.1, 0.05}, 1.0);
    REQUIRE(r.table.size() == 2);
    CHECK(r.table[0].norm == doctest::Approx(1.10165594).epsilon(1e-6));
    CHECK(r.table[1].norm == doctest::Approx(1.17122966).epsilon(1e-6));
    CHECK(r.flatness == doctest::Approx(1.063154).epsilon(1e-5));
    CHECK(r.skipped.empty());

    // free route through the multiplier agrees with the sparse solver
    LapReport rf = lap_scan(k, box, Eigen::VectorXd(), {1.0}, {0.05}, 1.0);
    const double ff = lap_free_point(k, box, 1.0, 0.05, 1.0);
    CHECK(rf.table[0].norm == doctest::Approx(1.2583144811).epsilon(1e-8));
    CHECK(ff == doctest::Approx(1.2583155823).epsilon(1e-8));
    CHECK(std::abs(rf.table[0].norm - ff) / ff < 1e-5);
}

TEST_CASE("weighted resolvent matches the dense oracle far from the spectrum") {
    HoppingKernel k = preset_kernel("square1d");
    Box box{1, 40};
    Eigen::VectorXd vd = chain_potential(box, 0.2, 0.5);
    LapReport r = lap_scan(k, box, vd, {5.0}, {1.0}, 1.0);
    CHECK(r.table[0].norm == doctest::Approx(0.23874510).epsilon(1e-6));

    const std::int64_t dim = box.nodes();
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    for (std::int64_t i = 0; i < dim; ++i) {
        H(i, (i + 1) % dim) += 1.0;
        H((i + 1) % dim, i) += 1.0;
        H(i, i) += vd[i];
    }
    Eigen::MatrixXcd A =
        H - cplx(5.0, 1.0) * Eigen::MatrixXcd::Identity(dim, dim);
    Eigen::VectorXd W(dim);
    for (std::int64_t i = 0; i < dim; ++i)
        W[i] = 1.0 / jbracket(norm2(box.site(i), 1));
    Eigen::MatrixXcd M = W.asDiagonal() * A.inverse() * W.asDiagonal();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    CHECK(std::abs(r.table[0].norm - svd.singularValues()[0]) /
              svd.singularValues()[0] <
          1e-10);

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H);
    double dist = 1e300;
    for (std::int64_t i = 0; i < dim; ++i)
        dist = std::min(dist, std::hypot(es.eigenvalues()[i] - 5.0, 1.0));
    CHECK(r.table[0].norm <= 1.0 / dist);
}

TEST_CASE("resolvent scan rejects bad parameters and guards point spectrum") {
    HoppingKernel k = preset_kernel("square1d");
    Box box{1, 100};
    CHECK_THROWS_AS(lap_scan(k, box, Eigen::VectorXd(), {1.0}, {0.05}, 1.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(lap_scan(k, box, Eigen::VectorXd(), {1.0}, {0.2}, 0.5),
                    std::invalid_argument);

    LapReport g =
        lap_scan(k, box, Eigen::VectorXd(), {1.0, 1.015}, {0.2}, 1.0, 30, {1.01});
    CHECK(g.skipped.size() == 2);
    CHECK(g.table.empty());
}
