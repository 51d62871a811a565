#include "latscat/eikonal.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <ostream>
#include <stdexcept>

#include "latscat/numerics.hpp"

namespace latscat {

namespace {

// scalar dispersion as a finite trig sum; avoids per-point matrix assembly
// in the hot Picard loops. Multi-band kernels fall back to the chart.
struct BandEval {
    bool scalar = true;
    int d = 1;
    std::vector<std::pair<RVec, cplx>> terms;  // (z, f(z)), scalar case
    std::shared_ptr<BandChart> chart;
    int band = 0;

    double lam(const RVec& q) const {
        if (!scalar) return chart->lambda(band, q);
        double out = 0;
        for (const auto& [z, f] : terms) {
            double ph = 0;
            for (int j = 0; j < d; ++j) ph += z[j] * q[j];
            out += (f * std::exp(cplx(0, -ph))).real();
        }
        return out;
    }
    RVec grad(const RVec& q) const {
        RVec out{};
        if (!scalar) {
            Eigen::VectorXd g = chart->velocity(band, q);
            for (int j = 0; j < d; ++j) out[j] = g[j];
            return out;
        }
        for (const auto& [z, f] : terms) {
            double ph = 0;
            for (int j = 0; j < d; ++j) ph += z[j] * q[j];
            const cplx e = f * std::exp(cplx(0, -ph));
            for (int j = 0; j < d; ++j) out[j] += (cplx(0, -z[j]) * e).real();
        }
        return out;
    }
};

BandEval make_eval(const HoppingKernel& k, int band) {
    if (band < 0 || band >= k.n) throw std::invalid_argument("band index out of range");
    BandEval be;
    be.d = k.d;
    be.band = band;
    be.scalar = (k.n == 1);
    if (be.scalar) {
        for (const auto& [z, m] : k.terms) {
            RVec zr{};
            for (int j = 0; j < k.d; ++j) zr[j] = double(z[j]);
            be.terms.emplace_back(zr, m(0, 0));
        }
    } else {
        be.chart = std::make_shared<BandChart>(k);
    }
    return be;
}

RVec radial_grad(const SmoothExtension& vt, const RVec& x, int d) {
    double r2 = 0;
    for (int j = 0; j < d; ++j) r2 += x[j] * x[j];
    RVec g{};
    if (r2 == 0) return g;
    const double r = std::sqrt(r2);
    const double dr = vt.deriv(r);
    for (int j = 0; j < d; ++j) g[j] = dr * x[j] / r;
    return g;
}

}  // namespace

double PhaseFunction::u_at(std::int64_t m, std::int64_t x) const {
    auto it = columns.find(m);
    if (it == columns.end()) return 0.0;
    const PhaseColumn& c = it->second;
    if (x != 0 && (x > 0 ? +1 : -1) != c.side) return 0.0;
    const std::int64_t t = std::llabs(x);
    if (t >= c.u.size()) throw std::out_of_range("PhaseFunction::u_at");
    return c.u[t];
}

double PhaseFunction::g_at(std::int64_t m, std::int64_t x) const {
    auto it = columns.find(m);
    if (it == columns.end()) return 0.0;
    const PhaseColumn& c = it->second;
    if (x != 0 && (x > 0 ? +1 : -1) != c.side) return 0.0;
    const std::int64_t t = std::llabs(x);
    if (t >= c.g.size()) throw std::out_of_range("PhaseFunction::g_at");
    return c.g[t];
}

PhaseFunction solve_phase(const HoppingKernel& kernel, int band,
                          const SmoothExtension& vt, const ConeRegion& region,
                          std::int64_t L, const std::vector<std::int64_t>& nodes,
                          const TorusGrid& grid, const PhaseOptions& opt) {
    if (kernel.d != 1 || grid.d != 1)
        throw std::invalid_argument("solve_phase: 1d tables only (use solve_phase_patch)");
    if (L < 2) throw std::invalid_argument("solve_phase: L too small");
    const double h = opt.fine_step;
    const auto per = std::int64_t(std::llround(1.0 / h));
    if (per < 1 || std::abs(per * h - 1.0) > 1e-12)
        throw std::invalid_argument("solve_phase: fine_step must divide 1");
    const std::int64_t nf = L * per + 1;
    const int rung_max = 32;  // candidate cone radii for automatic R

    const BandEval be = make_eval(kernel, band);
    auto lam1 = [&](double q) { return be.lam(RVec{q, 0, 0}); };

    Eigen::VectorXd Vf(nf);
    for (std::int64_t i = 0; i < nf; ++i) Vf[i] = vt.eval(i * h);

    PhaseFunction out;
    out.d = 1;
    out.sign = region.sign;

    Eigen::VectorXd g(nf), res(nf), suf(nf), u(nf);
    for (std::int64_t m : nodes) {
        const double xi = grid.xi(m)[0];
        const double v = be.grad(RVec{xi, 0, 0})[0];
        if (std::abs(v) < 1e-12) continue;
        const double lam0 = lam1(xi);

        PhaseColumn col;
        col.xi = xi;
        col.v = v;
        col.side = region.sign * (v > 0 ? +1 : -1);
        col.cone_sweeps.assign(rung_max + 1, 0);

        g.setZero();
        bool ok = false;
        while (col.sweeps < opt.max_iter) {
            for (std::int64_t i = 0; i < nf; ++i) {
                const double q = lam1(xi + g[i]) - lam0 - v * g[i];
                g[i] = -(Vf[i] + q) / v;
            }
            for (std::int64_t i = 0; i < nf; ++i)
                res[i] = std::abs(lam1(xi + g[i]) + Vf[i] - lam0);
            suf[nf - 1] = res[nf - 1];
            for (std::int64_t i = nf - 2; i >= 0; --i) suf[i] = std::max(res[i], suf[i + 1]);
            ++col.sweeps;
            col.history.push_back(suf[0]);
            for (int r = 1; r <= rung_max; ++r) {
                const std::int64_t i0 = std::min<std::int64_t>(r * per + 1, nf - 1);
                if (col.cone_sweeps[r] == 0 && suf[i0] < opt.tol) col.cone_sweeps[r] = col.sweeps;
            }
            if (suf[0] < opt.tol) {
                ok = true;
                break;
            }
        }
        col.residual = col.history.back();
        if (!ok && region.R > 0) {
            const int r = std::min<int>(rung_max, int(std::ceil(region.R)));
            ok = col.cone_sweeps[r] != 0;  // converged on the requested cone
        }
        if (!ok && opt.require_converged)
            throw std::runtime_error("solve_phase: no convergence at xi = " + std::to_string(xi) +
                                     ", residual " + std::to_string(col.residual));

        u[0] = 0;
        for (std::int64_t i = 1; i < nf; ++i) u[i] = u[i - 1] + 0.5 * h * (g[i] + g[i - 1]);
        if (vt.rho > 1.0 && vt.c != 0.0) {
            // anchor u(+inf) = 0: two-term power tail of the ray integral
            const double X = double(L);
            const double tail_v = vt.c * (std::pow(X, 1.0 - vt.rho) / (vt.rho - 1.0) -
                                          0.5 * vt.rho * std::pow(X, -1.0 - vt.rho) / (vt.rho + 1.0));
            const double shift = u[nf - 1] - tail_v / v;
            for (std::int64_t i = 0; i < nf; ++i) u[i] -= shift;
        }
        col.u.resize(L + 1);
        col.g.resize(L + 1);
        for (std::int64_t t = 0; t <= L; ++t) {
            col.u[t] = col.side * u[t * per];
            col.g[t] = g[t * per];
        }
        out.columns.emplace(m, std::move(col));
    }

    if (region.R > 0) {
        out.R = region.R;
    } else {
        int chosen = 0;
        for (int r = 1; r <= rung_max && chosen == 0; ++r) {
            bool all = !out.columns.empty();
            for (const auto& [mm, c] : out.columns) {
                if (c.cone_sweeps[r] == 0 || c.cone_sweeps[r] > 20) {
                    all = false;
                    break;
                }
            }
            if (all) chosen = r;
        }
        if (chosen == 0 && opt.require_converged && !out.columns.empty())
            throw std::runtime_error("solve_phase: no cone radius <= 32 converges within 20 sweeps");
        out.R = chosen;
    }
    return out;
}

double phase_gradient_at(const HoppingKernel& kernel, int band,
                         const SmoothExtension& vt, double xi, double x, double tol,
                         int max_iter) {
    const BandEval be = make_eval(kernel, band);
    auto lam1 = [&](double q) { return be.lam(RVec{q, 0, 0}); };
    const double v = be.grad(RVec{xi, 0, 0})[0];
    if (std::abs(v) < 1e-12)
        throw std::invalid_argument("phase_gradient_at: vanishing group velocity");
    const double lam0 = lam1(xi);
    const double Vx = vt.eval(std::abs(x));
    double gg = 0;
    for (int it = 0; it < max_iter; ++it) {
        const double q = lam1(xi + gg) - lam0 - v * gg;
        gg = -(Vx + q) / v;
        if (std::abs(lam1(xi + gg) + Vx - lam0) < tol) return gg;
    }
    throw std::runtime_error("phase_gradient_at: no convergence");
}

PhaseReport verify_phase(const HoppingKernel& kernel, int band,
                         const SmoothExtension& vt, const PhaseFunction& phase) {
    if (phase.d != 1) throw std::invalid_argument("verify_phase: 1d tables only");
    const BandEval be = make_eval(kernel, band);
    auto lam1 = [&](double q) { return be.lam(RVec{q, 0, 0}); };
    auto vel1 = [&](double q) { return be.grad(RVec{q, 0, 0})[0]; };

    PhaseReport rep;
    rep.R = phase.R;
    for (const auto& [m, c] : phase.columns) {
        rep.sweeps = std::max(rep.sweeps, c.sweeps);
        double worst = c.residual;
        const double lam0 = lam1(c.xi);
        double dev = 0;
        for (std::int64_t t = 0; t < c.g.size(); ++t) {
            worst = std::max(worst, std::abs(lam1(c.xi + c.g[t]) + vt.eval(double(t)) - lam0));
            dev = std::max(dev, std::abs(c.v / vel1(c.xi + c.g[t]) - 1.0));
        }
        if (worst > rep.residual) {
            rep.residual = worst;
            rep.worst_column = m;
        }
        rep.hessian_dev = std::max(rep.hessian_dev, dev);
    }

    if (!phase.columns.empty()) {
        std::vector<std::int64_t> keys;
        keys.reserve(phase.columns.size());
        for (const auto& [m, c] : phase.columns) keys.push_back(m);
        const PhaseColumn& c = phase.columns.at(keys[keys.size() / 4]);
        std::vector<double> ts, au, ag;
        for (std::int64_t t = 20; t < std::min<std::int64_t>(320, c.u.size()); ++t) {
            ts.push_back(double(t));
            au.push_back(std::abs(c.u[t]));
            ag.push_back(std::abs(c.g[t]));
        }
        auto usable = [](const std::vector<double>& y) {
            int n = 0;
            for (double q : y)
                if (q > 0) ++n;
            return n >= 2;
        };
        if (usable(au)) rep.u_exponent = loglog_slope(ts, au, 0.0);
        if (usable(ag)) rep.g_exponent = loglog_slope(ts, ag, 0.0);
    }
    return rep;
}

PhasePatch solve_phase_patch(const HoppingKernel& kernel, int band,
                             const SmoothExtension& vt, const ConeRegion& region,
                             const RVec& xi0, const PhaseOptions& opt) {
    if (kernel.d != 2) throw std::invalid_argument("solve_phase_patch: d == 2 only");
    if (region.R <= 0)
        throw std::invalid_argument("solve_phase_patch: explicit R > 0 required");
    const BandEval be = make_eval(kernel, band);
    const double lam0 = be.lam(xi0);
    const RVec v = be.grad(xi0);
    const double vn = std::hypot(v[0], v[1]);
    if (vn < 1e-12) throw std::invalid_argument("solve_phase_patch: vanishing velocity");
    const double sgn = double(region.sign);

    const int P = opt.patch_half;
    const int W = 2 * P + 1;
    Eigen::MatrixXd rad(W, W);
    std::vector<std::pair<int, int>> active, inner;
    for (int i = 0; i < W; ++i)
        for (int j = 0; j < W; ++j) {
            const double x1 = i - P, x2 = j - P;
            const double r = std::hypot(x1, x2);
            const double c = (x1 * v[0] + x2 * v[1]) / (std::max(r, 1e-14) * vn);
            rad(i, j) = r;
            if (r > region.R && sgn * c > region.cos_floor) active.emplace_back(i, j);
            if (r > region.R && r <= 32.0 && sgn * c > 0.0) inner.emplace_back(i, j);
        }

    auto bil = [P](const Eigen::MatrixXd& gc, double y1, double y2) -> double {
        const double i = y1 + P, j = y2 + P;
        if (i < 0 || j < 0 || i > 2.0 * P - 1 || j > 2.0 * P - 1) return 0.0;
        int i0 = int(std::floor(i)), j0 = int(std::floor(j));
        if (i0 >= 2 * P) i0 = 2 * P - 1;
        if (j0 >= 2 * P) j0 = 2 * P - 1;
        const double ti = i - i0, tj = j - j0;
        return (1 - ti) * (1 - tj) * gc(i0, j0) + ti * (1 - tj) * gc(i0 + 1, j0) +
               (1 - ti) * tj * gc(i0, j0 + 1) + ti * tj * gc(i0 + 1, j0 + 1);
    };
    auto central = [W](const Eigen::MatrixXd& gc, Eigen::MatrixXd& d1, Eigen::MatrixXd& d2) {
        d1.setZero(W, W);
        d2.setZero(W, W);
        for (int i = 1; i < W - 1; ++i)
            for (int j = 0; j < W; ++j) d1(i, j) = 0.5 * (gc(i + 1, j) - gc(i - 1, j));
        for (int i = 0; i < W; ++i)
            for (int j = 1; j < W - 1; ++j) d2(i, j) = 0.5 * (gc(i, j + 1) - gc(i, j - 1));
    };

    const double hs = opt.ray_step;
    const double smax = (2.0 * std::sqrt(2.0) * P + 10.0) / vn;
    const int ns = int(std::floor(smax / hs)) + 1;
    const double sv1 = sgn * v[0], sv2 = sgn * v[1];

    PhasePatch patch;
    patch.xi = xi0;
    patch.v = v;
    patch.half = P;
    Eigen::MatrixXd g1 = Eigen::MatrixXd::Zero(W, W), g2 = g1;
    Eigen::MatrixXd d11, d12, d21, d22, ng1(W, W), ng2(W, W);
    for (int sweep = 0; sweep < opt.max_iter; ++sweep) {
        central(g1, d11, d12);
        central(g2, d21, d22);
        ng1.setZero();
        ng2.setZero();
        for (const auto& [i, j] : active) {
            const double x1 = i - P, x2 = j - P;
            double a1 = 0, a2 = 0, p1 = 0, p2 = 0;
            for (int k = 0; k < ns; ++k) {
                const double s = k * hs;
                const double y1 = x1 + s * sv1, y2 = x2 + s * sv2;
                const double gv1 = bil(g1, y1, y2), gv2 = bil(g2, y1, y2);
                const RVec gl = be.grad(RVec{xi0[0] + gv1, xi0[1] + gv2, 0});
                const double e1 = gl[0] - v[0], e2 = gl[1] - v[1];
                const RVec w = radial_grad(vt, RVec{y1, y2, 0}, 2);
                const double c1 = w[0] + bil(d11, y1, y2) * e1 + bil(d21, y1, y2) * e2;
                const double c2v = w[1] + bil(d12, y1, y2) * e1 + bil(d22, y1, y2) * e2;
                if (k > 0) {
                    a1 += 0.5 * hs * (p1 + c1);
                    a2 += 0.5 * hs * (p2 + c2v);
                }
                p1 = c1;
                p2 = c2v;
            }
            // tail of the grad Vt ray integral on a geometric s-grid
            double s = (ns - 1) * hs;
            for (;;) {
                const double ds = 0.05 * std::max(s, 1.0);
                const double y1 = x1 + (s + 0.5 * ds) * sv1, y2 = x2 + (s + 0.5 * ds) * sv2;
                if (std::hypot(y1, y2) > 2e5) break;
                const RVec w = radial_grad(vt, RVec{y1, y2, 0}, 2);
                a1 += ds * w[0];
                a2 += ds * w[1];
                s += ds;
            }
            ng1(i, j) = a1;
            ng2(i, j) = a2;
        }
        g1.swap(ng1);
        g2.swap(ng2);
        ++patch.sweeps;
        double resid = 0;
        for (const auto& [i, j] : inner) {
            const double l = be.lam(RVec{xi0[0] + g1(i, j), xi0[1] + g2(i, j), 0});
            resid = std::max(resid, std::abs(l + vt.eval(rad(i, j)) - lam0));
        }
        patch.residual = resid;
        if (sweep >= 2 && resid < opt.tol) break;
    }
    patch.g1 = std::move(g1);
    patch.g2 = std::move(g2);
    if (opt.require_converged && patch.residual >= opt.tol)
        throw std::runtime_error("solve_phase_patch: residual " +
                                 std::to_string(patch.residual) + " above tol");
    return patch;
}

std::vector<FlowSample> hamilton_flow(const HoppingKernel& kernel, int band,
                                      const SmoothExtension& vt, const RVec& x0,
                                      const RVec& xi0, double T, double step) {
    if (step <= 0 || T < 0) throw std::invalid_argument("hamilton_flow: bad time span");
    const BandEval be = make_eval(kernel, band);
    const int d = kernel.d;

    RVec x = x0, xi = xi0;
    auto energy = [&]() {
        double r2 = 0;
        for (int j = 0; j < d; ++j) r2 += x[j] * x[j];
        return be.lam(xi) + vt.eval(std::sqrt(r2));
    };
    const auto nsteps = std::int64_t(std::llround(T / step));
    std::vector<FlowSample> path;
    path.reserve(nsteps + 1);
    path.push_back({0.0, x, xi, energy()});
    for (std::int64_t i = 0; i < nsteps; ++i) {
        RVec k = radial_grad(vt, x, d);
        for (int j = 0; j < d; ++j) xi[j] -= 0.5 * step * k[j];
        const RVec vl = be.grad(xi);
        for (int j = 0; j < d; ++j) x[j] += step * vl[j];
        k = radial_grad(vt, x, d);
        for (int j = 0; j < d; ++j) {
            xi[j] -= 0.5 * step * k[j];
            if (std::abs(xi[j]) > PI) xi[j] = std::remainder(xi[j], 2 * PI);
        }
        if (!be.scalar && be.chart->cluster_gap(band, xi) < 1e-9)
            throw std::runtime_error("hamilton_flow: degenerate band point reached");
        path.push_back({double(i + 1) * step, x, xi, energy()});
    }
    return path;
}

void phase_csv(const PhaseFunction& phase, std::ostream& os) {
    os.precision(17);
    os << "xi,x,u,du,residual\n";
    for (const auto& [m, c] : phase.columns)
        for (std::int64_t t = 0; t < c.u.size(); ++t)
            os << c.xi << ',' << c.side * t << ',' << c.u[t] << ',' << c.g[t] << ','
               << c.residual << '\n';
}

}  // namespace latscat
