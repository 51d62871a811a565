#include "latscat/modifiers.hpp"

#include <cmath>
#include <stdexcept>

#include "latscat/numerics.hpp"

namespace latscat {

namespace {

double bump_exp(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

// d/dt of the smooth step B(t)/(B(t)+B(1-t)) on (0,1)
double smooth_step_deriv(double t) {
    if (t <= 0.0 || t >= 1.0) return 0.0;
    const double b = bump_exp(t), c = bump_exp(1.0 - t);
    const double db = b / (t * t), dc = c / ((1.0 - t) * (1.0 - t));
    const double s = b + c;
    return (db * c + b * dc) / (s * s);
}

cplx czero() { return cplx(0.0, 0.0); }

void check_state(const Modifier& J, const LatticeState& u) {
    if (u.box.d != J.box.d || u.box.L != J.box.L || u.n != J.n)
        throw std::invalid_argument("modifier: state box mismatch");
}

void check_transform(const Modifier& J, const FourierTransform& ft) {
    if (ft.box().d != J.box.d || ft.box().L != J.box.L || ft.ncomp() != J.n)
        throw std::invalid_argument("modifier: transform box mismatch");
}

double c2_factor(int d) { return std::pow(2.0 * PI, -0.5 * d); }

// site coordinates and radii of a 2d box, cached per apply
struct SiteTable {
    std::vector<double> x0, x1, r;
    explicit SiteTable(const Box& box) {
        const std::int64_t S = box.nodes();
        x0.resize(S);
        x1.resize(S);
        r.resize(S);
        for (std::int64_t i = 0; i < S; ++i) {
            IVec x = box.site(i);
            x0[i] = x[0];
            x1[i] = x[1];
            r[i] = std::hypot(x0[i], x1[i]);
        }
    }
};

}  // namespace

double direction_cutoff(int sign, double theta) {
    auto [sp, sm] = sigma_pair(theta);
    return sign > 0 ? sp : sm;
}

double direction_cutoff_deriv(int sign, double theta) {
    const double g = smooth_step(theta + 0.5);
    if (g <= 0.0 || g >= 1.0) return 0.0;
    const double dg = 0.5 * PI * smooth_step_deriv(theta + 0.5);
    return sign > 0 ? std::cos(0.5 * PI * g) * dg : -std::sin(0.5 * PI * g) * dg;
}

CutoffSet build_cutoffs(double R, const EnergyWindow& window, const BandData& bands) {
    if (R <= 0) throw std::invalid_argument("build_cutoffs: R must be positive");
    const double m = 0.5 * window.margin;
    if (!(m > 0)) throw std::invalid_argument("build_cutoffs: window has no margin");
    CutoffSet cut;
    cut.R = R;
    cut.window = window;
    cut.chi = plateau_window(window.a, window.b, m);
    cut.chi_wide = plateau_window(window.a - m, window.b + m, 0.5 * m);
    const std::int64_t S = bands.grid.nodes();
    for (std::int64_t s = 0; s < S; ++s)
        for (int k = 0; k < bands.n; ++k)
            if (cut.chi(bands.lambda(s, k)) > 1e-14 && bands.deg[size_t(s) * bands.n + k])
                throw std::invalid_argument(
                    "build_cutoffs: window support touches a degenerate band node");
    return cut;
}

Modifier build_modifier(int band, int sign, const PhaseFunction& phase,
                        const CutoffSet& cut, const BandData& bands) {
    if (sign != 1 && sign != -1) throw std::invalid_argument("build_modifier: sign");
    if (band < 0 || band >= bands.n) throw std::invalid_argument("build_modifier: band");
    Modifier J;
    J.band = band;
    J.sign = sign;
    J.d = bands.grid.d;
    J.n = bands.n;
    J.grid = bands.grid;
    J.cut = cut;
    const int N = bands.grid.res[0];
    for (int j = 1; j < J.d; ++j)
        if (bands.grid.res[j] != N)
            throw std::invalid_argument("build_modifier: anisotropic grid");
    if (N % 2 == 0) throw std::invalid_argument("build_modifier: grid must be odd");
    J.box = Box{J.d, (N - 1) / 2};

    const bool flat = phase.columns.empty();
    if (!flat) {
        if (J.d != 1 || J.n != 1)
            throw std::invalid_argument("build_modifier: phase tables are 1d scalar");
        if (phase.sign != sign)
            throw std::invalid_argument("build_modifier: phase sign mismatch");
        if (phase.R != cut.R)
            throw std::invalid_argument("build_modifier: cone radius mismatch");
    }

    const std::int64_t S = bands.grid.nodes();
    const std::int64_t L = J.box.L;
    for (std::int64_t s = 0; s < S; ++s) {
        const double lamv = bands.lambda(s, band);
        const double chiv = cut.chi(lamv);
        if (chiv <= 1e-14) continue;
        if (bands.speed(s, band) < 1e-12) continue;
        Modifier::Column col;
        col.node = s;
        col.lam = lamv;
        col.chi = chiv;
        col.xi = bands.grid.xi(s);
        for (int j = 0; j < J.d; ++j) col.v[j] = bands.velocity(s, band, j);
        if (J.n > 1) col.proj = bands.proj[size_t(s) * bands.n + band];
        if (J.d == 1) {
            col.side = sign * (col.v[0] > 0 ? 1 : -1);
            col.amp = Eigen::VectorXcd::Zero(L + 1);
            if (flat) {
                for (std::int64_t t = 0; t <= L; ++t) col.amp[t] = cut.eta(double(t)) * chiv;
            } else {
                auto it = phase.columns.find(s);
                if (it == phase.columns.end())
                    throw std::invalid_argument(
                        "build_modifier: phase tables do not cover the symbol support");
                const PhaseColumn& pc = it->second;
                if (std::abs(pc.xi - col.xi[0]) > 1e-12)
                    throw std::invalid_argument("build_modifier: phase grid mismatch");
                if (pc.side != col.side)
                    throw std::invalid_argument("build_modifier: phase side mismatch");
                if (pc.u.size() != L + 1)
                    throw std::invalid_argument("build_modifier: phase table length mismatch");
                for (std::int64_t t = 0; t <= L; ++t)
                    col.amp[t] = std::polar(cut.eta(double(t)) * chiv, pc.u[t]);
            }
        }
        J.columns.push_back(std::move(col));
    }
    return J;
}

ModifierSum build_sum(std::vector<Modifier> parts) {
    if (parts.empty()) throw std::invalid_argument("build_sum: empty");
    for (size_t i = 1; i < parts.size(); ++i)
        if (parts[i].box.L != parts[0].box.L || parts[i].box.d != parts[0].box.d ||
            parts[i].n != parts[0].n || parts[i].sign != parts[0].sign)
            throw std::invalid_argument("build_sum: incompatible parts");
    ModifierSum sum;
    sum.parts = std::move(parts);
    return sum;
}

LatticeState apply_modifier(const Modifier& J, const FourierTransform& ft,
                            const LatticeState& u) {
    check_state(J, u);
    check_transform(J, ft);
    const std::int64_t S = J.box.nodes();
    const double c2w = c2_factor(J.d) * J.grid.weight();
    LatticeState out(J.box, J.n);

    if (J.d == 1) {
        const Eigen::VectorXcd uh = ft.forward(u.a);
        const std::int64_t L = J.box.L;
        for (const auto& col : J.columns) {
            const cplx uc = uh[col.node];
            const double xi = col.xi[0];
            for (std::int64_t t = 1; t <= L; ++t) {
                const cplx a = col.amp[t];
                if (a == czero()) continue;
                const double x = col.side * double(t);
                out.a[std::int64_t(x) + L] += a * std::polar(1.0, x * xi) * uc;
            }
        }
        out.a *= c2w;
        return out;
    }

    const LatticeState spec = ft.forward_state(u);
    const SiteTable sites(J.box);
    Eigen::VectorXcd uv(J.n);
    for (const auto& col : J.columns) {
        for (int c = 0; c < J.n; ++c) uv[c] = spec.a[c * S + col.node];
        if (J.n > 1) uv = col.proj * uv;
        const double vn = std::hypot(col.v[0], col.v[1]);
        for (std::int64_t i = 0; i < S; ++i) {
            const double ev = J.cut.eta(sites.r[i]);
            if (ev == 0.0) continue;
            const double den = sites.r[i] * vn;
            const double cth =
                den < 1e-14 ? 0.0 : (sites.x0[i] * col.v[0] + sites.x1[i] * col.v[1]) / den;
            const double sval = direction_cutoff(J.sign, cth);
            if (sval == 0.0) continue;
            const cplx ph = std::polar(ev * sval * col.chi,
                                       sites.x0[i] * col.xi[0] + sites.x1[i] * col.xi[1]);
            for (int c = 0; c < J.n; ++c) out.a[c * S + i] += ph * uv[c];
        }
    }
    out.a *= c2w;
    return out;
}

LatticeState apply_modifier_adjoint(const Modifier& J, const FourierTransform& ft,
                                    const LatticeState& z) {
    check_state(J, z);
    check_transform(J, ft);
    const std::int64_t S = J.box.nodes();
    const double c2 = c2_factor(J.d);

    if (J.d == 1) {
        const std::int64_t L = J.box.L;
        Eigen::VectorXcd gh = Eigen::VectorXcd::Zero(S);
        for (const auto& col : J.columns) {
            const double xi = col.xi[0];
            cplx acc = czero();
            for (std::int64_t t = 1; t <= L; ++t) {
                const cplx a = col.amp[t];
                if (a == czero()) continue;
                const double x = col.side * double(t);
                acc += std::conj(a * std::polar(1.0, x * xi)) * z.a[std::int64_t(x) + L];
            }
            gh[col.node] = c2 * acc;
        }
        LatticeState out(J.box, 1);
        out.a = ft.inverse(gh);
        return out;
    }

    const SiteTable sites(J.box);
    LatticeState gh(J.box, J.n);
    Eigen::VectorXcd acc(J.n);
    for (const auto& col : J.columns) {
        acc.setZero();
        const double vn = std::hypot(col.v[0], col.v[1]);
        for (std::int64_t i = 0; i < S; ++i) {
            const double ev = J.cut.eta(sites.r[i]);
            if (ev == 0.0) continue;
            const double den = sites.r[i] * vn;
            const double cth =
                den < 1e-14 ? 0.0 : (sites.x0[i] * col.v[0] + sites.x1[i] * col.v[1]) / den;
            const double sval = direction_cutoff(J.sign, cth);
            if (sval == 0.0) continue;
            const cplx ph = std::conj(std::polar(
                ev * sval * col.chi, sites.x0[i] * col.xi[0] + sites.x1[i] * col.xi[1]));
            for (int c = 0; c < J.n; ++c) acc[c] += ph * z.a[c * S + i];
        }
        if (J.n > 1) acc = col.proj * acc;
        for (int c = 0; c < J.n; ++c) gh.a[c * S + col.node] = c2 * acc[c];
    }
    return ft.inverse_state(gh);
}

LatticeState apply_modifier(const ModifierSum& J, const FourierTransform& ft,
                            const LatticeState& u) {
    LatticeState out = apply_modifier(J.parts[0], ft, u);
    for (size_t i = 1; i < J.parts.size(); ++i)
        out.a += apply_modifier(J.parts[i], ft, u).a;
    return out;
}

LatticeState apply_modifier_adjoint(const ModifierSum& J, const FourierTransform& ft,
                                    const LatticeState& z) {
    LatticeState out = apply_modifier_adjoint(J.parts[0], ft, z);
    for (size_t i = 1; i < J.parts.size(); ++i)
        out.a += apply_modifier_adjoint(J.parts[i], ft, z).a;
    return out;
}

SymbolField modifier_symbol(const Modifier& J, const HoppingKernel& kernel) {
    if (J.d != 1 || J.n != 1)
        throw std::invalid_argument("modifier_symbol: 1d scalar only");
    const CutoffSet cut = J.cut;
    const int sign = J.sign;
    SymbolField s;
    s.d = 1;
    s.order = 0;
    s.f = [cut, sign, kernel](const IVec& x, const RVec& xi) {
        const double ev = cut.eta(std::abs(double(x[0])));
        if (ev == 0.0) return czero();
        const double chiv = cut.chi(kernel.symbol_at(xi)(0, 0).real());
        if (chiv <= 1e-14) return czero();
        const double v = kernel.dsymbol_at(xi, 0)(0, 0).real();
        double cth = 0.0;
        if (x[0] != 0 && std::abs(v) >= 1e-14)
            cth = (x[0] > 0 ? 1.0 : -1.0) * (v > 0 ? 1.0 : -1.0);
        return cplx(ev * direction_cutoff(sign, cth) * chiv, 0.0);
    };
    return s;
}

Modifier strip_phase(const Modifier& J) {
    Modifier out = J;
    for (auto& col : out.columns)
        for (std::int64_t t = 0; t < col.amp.size(); ++t)
            col.amp[t] = cplx(std::abs(col.amp[t]), 0.0);
    return out;
}

namespace {

Eigen::VectorXcd full_box_probe(std::int64_t dim, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Eigen::VectorXcd u(dim);
    for (std::int64_t i = 0; i < dim; ++i) u[i] = cplx(nd(rng), nd(rng));
    u /= u.norm();
    return u;
}

Eigen::VectorXd bracket_weight(const Box& box, double expo) {
    const std::int64_t S = box.nodes();
    Eigen::VectorXd w(S);
    for (std::int64_t i = 0; i < S; ++i) {
        IVec x = box.site(i);
        double q = 1.0;
        for (int j = 0; j < box.d; ++j) q += double(x[j]) * double(x[j]);
        w[i] = std::pow(q, 0.5 * expo);
    }
    return w;
}

}  // namespace

double squares_defect(const Modifier& J, const FourierTransform& ft, double rho,
                      int trials, std::uint64_t seed) {
    const Modifier Js = strip_phase(J);
    const Eigen::VectorXd wp = bracket_weight(J.box, rho);
    std::mt19937_64 rng(seed);
    double best = 0;
    for (int tr = 0; tr < trials; ++tr) {
        LatticeState u = random_state(J.box, J.n, 64, rng);
        u.a /= u.a.norm();
        LatticeState jj = apply_modifier_adjoint(J, ft, apply_modifier(J, ft, u));
        LatticeState oo = apply_modifier_adjoint(Js, ft, apply_modifier(Js, ft, u));
        const Eigen::VectorXcd diff = jj.a - oo.a;
        double q = 0;
        const std::int64_t S = J.box.nodes();
        for (int c = 0; c < J.n; ++c)
            for (std::int64_t i = 0; i < S; ++i)
                q += std::norm(wp[i] * diff[c * S + i]);
        best = std::max(best, std::sqrt(q));
    }
    return best;
}

double weight_sandwich(const Modifier& J, const FourierTransform& ft, double p,
                       int trials, std::uint64_t seed) {
    const Eigen::VectorXd wup = bracket_weight(J.box, p);
    const Eigen::VectorXd wdn = bracket_weight(J.box, -p);
    const std::int64_t S = J.box.nodes();
    std::mt19937_64 rng(seed);
    double best = 0;
    for (int tr = 0; tr < trials; ++tr) {
        LatticeState u = random_state(J.box, J.n, 64, rng);
        const double un = u.norm();
        LatticeState v = u;
        for (int c = 0; c < J.n; ++c)
            for (std::int64_t i = 0; i < S; ++i) v.a[c * S + i] *= wup[i];
        LatticeState jv = apply_modifier(J, ft, v);
        double q = 0;
        for (int c = 0; c < J.n; ++c)
            for (std::int64_t i = 0; i < S; ++i) q += std::norm(wdn[i] * jv.a[c * S + i]);
        best = std::max(best, std::sqrt(q) / un);
    }
    return best;
}

double filter_commutator(const Modifier& J, const FourierTransform& ft, double rho,
                         int trials, std::uint64_t seed) {
    const ScalarWindow psi = bump_window(J.cut.window.a, J.cut.window.b);
    const Eigen::VectorXd wp = bracket_weight(J.box, rho);
    const std::int64_t S = J.box.nodes();
    if (J.n != 1) throw std::invalid_argument("filter_commutator: scalar only");
    auto filter = [&](const Eigen::VectorXcd& a) {
        Eigen::VectorXcd gh = Eigen::VectorXcd::Zero(S);
        const Eigen::VectorXcd ah = ft.forward(a);
        for (const auto& col : J.columns) gh[col.node] = psi(col.lam) * ah[col.node];
        return ft.inverse(gh);
    };
    std::mt19937_64 rng(seed);
    double best = 0;
    for (int tr = 0; tr < trials; ++tr) {
        LatticeState u = random_state(J.box, 1, 64, rng);
        const double un = u.norm();
        LatticeState pu(J.box, 1);
        pu.a = filter(u.a);
        const Eigen::VectorXcd jpu = apply_modifier(J, ft, pu).a;
        const Eigen::VectorXcd pju = filter(apply_modifier(J, ft, u).a);
        double q = 0;
        for (std::int64_t i = 0; i < S; ++i) q += std::norm(wp[i] * (jpu[i] - pju[i]));
        best = std::max(best, std::sqrt(q) / un);
    }
    return best;
}

double cross_band(const Modifier& Jk, const Modifier& Jl, const FourierTransform& ft,
                  int trials, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    double best = 0;
    for (int tr = 0; tr < trials; ++tr) {
        LatticeState z(Jk.box, Jk.n);
        z.a = full_box_probe(z.a.size(), rng);
        LatticeState w = apply_modifier(Jk, ft, apply_modifier_adjoint(Jl, ft, z));
        best = std::max(best, w.norm());
    }
    return best;
}

LatticeState commutator_apply(const Modifier& J, const FourierTransform& ft,
                              const HoppingKernel& kernel,
                              const Eigen::VectorXd& vdiag, const LatticeState& u) {
    const std::int64_t S = J.box.nodes();
    if (vdiag.size() != 0 && vdiag.size() != S)
        throw std::invalid_argument("commutator_apply: vdiag length");
    LatticeState ju = apply_modifier(J, ft, u);
    LatticeState hju = hop_apply(kernel, ju);
    if (vdiag.size() == S)
        for (int c = 0; c < J.n; ++c)
            for (std::int64_t i = 0; i < S; ++i) hju.a[c * S + i] += vdiag[i] * ju.a[c * S + i];
    LatticeState jh0u = apply_modifier(J, ft, hop_apply(kernel, u));
    hju.a -= jh0u.a;
    return hju;
}

DefectReport leading_symbol_defect(const Modifier& J, const FourierTransform& ft,
                                   const HoppingKernel& kernel,
                                   const Eigen::VectorXd& vdiag,
                                   const std::vector<double>& x0s) {
    if (J.d != 1 || J.n != 1)
        throw std::invalid_argument("leading_symbol_defect: 1d scalar only");
    const ScalarWindow psi = bump_window(J.cut.window.a, J.cut.window.b);
    const std::int64_t S = J.box.nodes();
    DefectReport rep;
    rep.x0 = x0s;
    for (double x0 : x0s) {
        const std::int64_t site = std::llround(x0);
        if (std::abs(site) > J.box.L)
            throw std::invalid_argument("leading_symbol_defect: x0 outside the box");
        Eigen::VectorXcd d = Eigen::VectorXcd::Zero(S);
        d[site + J.box.L] = 1.0;
        const Eigen::VectorXcd dh = ft.forward(d);
        Eigen::VectorXcd gh = Eigen::VectorXcd::Zero(S);
        for (const auto& col : J.columns) gh[col.node] = psi(col.lam) * dh[col.node];
        LatticeState p(J.box, 1);
        p.a = ft.inverse(gh);
        p.a /= p.a.norm();
        rep.vals.push_back(commutator_apply(J, ft, kernel, vdiag, p).norm());
    }
    rep.slope = loglog_slope(rep.x0, rep.vals);
    return rep;
}

}  // namespace latscat
