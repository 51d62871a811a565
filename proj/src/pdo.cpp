#include "latscat/pdo.hpp"

#include <stdexcept>

namespace latscat {

cplx SymbolField::eval(const IVec& x, const RVec& xi) const {
    if (f) return f(x, xi);
    cplx s = 0;
    for (auto& t : sep) s += t.w(x) * t.m(xi);
    return s;
}

cplx SymbolField::dxi_eval(const IVec& x, const RVec& xi, const IVec& alpha) const {
    int total = 0;
    for (int j = 0; j < d; ++j) total += alpha[j];
    if (total == 0) return eval(x, xi);
    if (dxi) return dxi(x, xi, alpha);
    // peel one derivative and recurse with central differences
    for (int j = 0; j < d; ++j)
        if (alpha[j] > 0) {
            IVec al = alpha;
            al[j] -= 1;
            const double h = 1e-3;
            RVec xp = xi, xm = xi;
            xp[j] += h;
            xm[j] -= h;
            return (dxi_eval(x, xp, al) - dxi_eval(x, xm, al)) / (2.0 * h);
        }
    return 0;
}

SymbolField multiplier_symbol(int d, const std::function<cplx(const RVec&)>& m) {
    SymbolField a;
    a.d = d;
    a.f = [m](const IVec&, const RVec& xi) { return m(xi); };
    a.sep.push_back({[](const IVec&) { return cplx(1, 0); }, m});
    return a;
}

SymbolField position_symbol(int d, const std::function<cplx(const IVec&)>& w) {
    SymbolField a;
    a.d = d;
    a.f = [w](const IVec& x, const RVec&) { return w(x); };
    a.sep.push_back({w, [](const RVec&) { return cplx(1, 0); }});
    return a;
}

Eigen::VectorXcd quantize(const FourierTransform& ft, const SymbolField& a,
                          const Eigen::VectorXcd& u) {
    const Box& box = ft.box();
    if (a.d != box.d) throw std::invalid_argument("quantize: dimension mismatch");
    if (u.size() != box.nodes()) throw std::invalid_argument("quantize: scalar only");
    const std::int64_t S = box.nodes();
    const TorusGrid& g = ft.grid();

    if (!a.sep.empty()) {
        Eigen::VectorXcd out = Eigen::VectorXcd::Zero(S);
        auto uh = ft.forward(u);
        for (auto& t : a.sep) {
            Eigen::VectorXcd spec = uh;
            for (std::int64_t m = 0; m < S; ++m) spec[m] *= t.m(g.xi(m));
            Eigen::VectorXcd piece = ft.inverse(spec);
            for (std::int64_t s = 0; s < S; ++s) out[s] += t.w(box.site(s)) * piece[s];
        }
        return out;
    }

    Eigen::VectorXcd uh = ft.forward(u);
    const double c2w = std::pow(2.0 * PI, -0.5 * box.d) * ft.weight();
    const int N = box.side();
    Eigen::VectorXcd out(S);
    // e^{i x_j xi} tables per dimension, rebuilt for each x
    std::vector<Eigen::VectorXcd> ph(box.d, Eigen::VectorXcd(N));
    for (std::int64_t s = 0; s < S; ++s) {
        IVec x = box.site(s);
        for (int j = 0; j < box.d; ++j) {
            const cplx step = std::polar(1.0, 2.0 * PI * x[j] / N);
            cplx cur = std::polar(1.0, -PI * x[j]);
            for (int m = 0; m < N; ++m) {
                if (m % 256 == 0) cur = std::polar(1.0, x[j] * (-PI + 2.0 * PI * m / N));
                ph[j][m] = cur;
                cur *= step;
            }
        }
        cplx acc = 0;
        for (std::int64_t m = 0; m < S; ++m) {
            IVec mm = g.multi(m);
            cplx e = ph[0][mm[0]];
            for (int j = 1; j < box.d; ++j) e *= ph[j][mm[j]];
            acc += a.eval(x, g.xi(m)) * e * uh[m];
        }
        out[s] = c2w * acc;
    }
    return out;
}

cplx backward_diff(const SymbolField& b, const IVec& x, const RVec& xi,
                   const IVec& alpha) {
    // product over dims of (1 - shift)^{alpha_j} via binomial expansion
    cplx sum = 0;
    IVec k{0, 0, 0};
    std::function<void(int, double, IVec)> rec = [&](int j, double coef, IVec shift) {
        if (j == b.d) {
            IVec xs = x;
            for (int q = 0; q < b.d; ++q) xs[q] -= shift[q];
            sum += coef * b.eval(xs, xi);
            return;
        }
        double binom = 1.0;
        for (int i = 0; i <= alpha[j]; ++i) {
            IVec s2 = shift;
            s2[j] = i;
            rec(j + 1, coef * ((i % 2 == 0) ? binom : -binom), s2);
            binom = binom * (alpha[j] - i) / (i + 1);
        }
    };
    rec(0, 1.0, k);
    return sum;
}

static void for_multi_indices(int d, int M, const std::function<void(const IVec&)>& fn) {
    IVec a{0, 0, 0};
    std::function<void(int, int)> rec = [&](int j, int left) {
        if (j == d - 1) {
            for (int i = 0; i <= left; ++i) {
                a[j] = i;
                fn(a);
            }
            return;
        }
        for (int i = 0; i <= left; ++i) {
            a[j] = i;
            rec(j + 1, left - i);
        }
    };
    rec(0, M);
}

static double factorial(int n) {
    double f = 1;
    for (int i = 2; i <= n; ++i) f *= i;
    return f;
}

SymbolField compose_symbols(const SymbolField& a, const SymbolField& b, int M) {
    if (a.d != b.d) throw std::invalid_argument("compose: dimension mismatch");
    SymbolField c;
    c.d = a.d;
    c.order = a.order + b.order;
    const int d = a.d;
    c.f = [a, b, M, d](const IVec& x, const RVec& xi) {
        cplx sum = 0;
        for_multi_indices(d, M, [&](const IVec& al) {
            int tot = 0;
            double fact = 1;
            for (int j = 0; j < d; ++j) {
                tot += al[j];
                fact *= factorial(al[j]);
            }
            // (-i)^{|alpha|}
            cplx pw = 1;
            for (int i = 0; i < tot; ++i) pw *= cplx(0, -1);
            sum += pw / fact * a.dxi_eval(x, xi, al) * backward_diff(b, x, xi, al);
        });
        return sum;
    };
    return c;
}

SymbolField adjoint_symbol(const SymbolField& a, int M) {
    SymbolField conj_a;
    conj_a.d = a.d;
    conj_a.f = [a](const IVec& x, const RVec& xi) { return std::conj(a.eval(x, xi)); };
    conj_a.dxi = [a](const IVec& x, const RVec& xi, const IVec& al) {
        return std::conj(a.dxi_eval(x, xi, al));  // xi is real
    };
    const int d = a.d;
    SymbolField c;
    c.d = d;
    c.order = a.order;
    c.f = [conj_a, M, d](const IVec& x, const RVec& xi) {
        cplx sum = 0;
        for_multi_indices(d, M, [&](const IVec& al) {
            int tot = 0;
            double fact = 1;
            for (int j = 0; j < d; ++j) {
                tot += al[j];
                fact *= factorial(al[j]);
            }
            cplx pw = 1;
            for (int i = 0; i < tot; ++i) pw *= cplx(0, -1);
            // d_xi^alpha dbar_x^alpha conj(a): differences first, then the
            // xi-derivative falls on the same shifted evaluations
            SymbolField dal;
            dal.d = d;
            dal.f = [conj_a, al](const IVec& y, const RVec& eta) {
                return conj_a.dxi_eval(y, eta, al);
            };
            sum += pw / fact * backward_diff(dal, x, xi, al);
        });
        return sum;
    };
    return c;
}

SymbolField sharp_multiplier_product(const HoppingKernel& k, const SymbolField& b) {
    if (k.n != 1) throw std::invalid_argument("sharp product is scalar only");
    SymbolField c;
    c.d = b.d;
    c.order = b.order;
    c.f = [k, b](const IVec& x, const RVec& xi) {
        cplx sum = 0;
        for (auto& [z, m] : k.terms) {
            double ph = 0;
            IVec xs = x;
            for (int j = 0; j < b.d; ++j) {
                ph += z[j] * xi[j];
                xs[j] -= z[j];
            }
            sum += m(0, 0) * std::exp(cplx(0, -ph)) * b.eval(xs, xi);
        }
        return sum;
    };
    return c;
}

double probe_opnorm(const FourierTransform& ft, const SymbolField& a, int nprobes,
                    int radius, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double best = 0;
    for (int p = 0; p < nprobes; ++p) {
        auto u = random_state(ft.box(), 1, radius, rng);
        double nu = u.norm();
        if (nu == 0) continue;
        best = std::max(best, quantize(ft, a, u.a).norm() / nu);
    }
    return best;
}

std::vector<double> kato_curve(const FourierTransform& ft,
                               const Eigen::VectorXcd& dispersion,
                               const Eigen::VectorXd& weight,
                               const Eigen::VectorXcd& u, double T, double dt) {
    const std::int64_t S = ft.box().nodes();
    if (dispersion.size() != S || weight.size() != S || u.size() != S)
        throw std::invalid_argument("kato_curve: size mismatch");
    Eigen::VectorXcd phase(S), spec = ft.forward(u);
    for (std::int64_t m = 0; m < S; ++m)
        phase[m] = std::exp(cplx(0, -dt * dispersion[m].real()));
    const int steps = int(std::llround(T / dt));
    std::vector<double> samples;
    samples.reserve(steps + 1);
    for (int it = 0; it <= steps; ++it) {
        Eigen::VectorXcd ut = ft.inverse(spec);
        samples.push_back((weight.array() * ut.array()).matrix().squaredNorm());
        if (it < steps) spec.array() *= phase.array();
    }
    std::vector<double> curve(samples.size(), 0.0);
    for (size_t i = 1; i < samples.size(); ++i)
        curve[i] = curve[i - 1] + 0.5 * dt * (samples[i - 1] + samples[i]);
    return curve;
}

}  // namespace latscat
