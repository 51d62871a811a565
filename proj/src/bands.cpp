#include "latscat/bands.hpp"

#include <algorithm>
#include <set>
#include <stdexcept>

namespace latscat {

Eigen::VectorXd BandChart::lambdas(const RVec& xi) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k_.symbol_at(xi),
                                                       Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

double BandChart::cluster_gap(int band, const RVec& xi) const {
    auto l = lambdas(xi);
    double g = std::numeric_limits<double>::infinity();
    if (band > 0) g = std::min(g, l[band] - l[band - 1]);
    if (band + 1 < k_.n) g = std::min(g, l[band + 1] - l[band]);
    return g;
}

bool BandChart::degenerate(int band, const RVec& xi, double tol) const {
    return cluster_gap(band, xi) < tol;
}

// indices of the eigencluster containing `band` at chain tolerance ctol
static std::pair<int, int> cluster_range(const Eigen::VectorXd& l, int band,
                                         double ctol) {
    int lo = band, hi = band;
    while (lo > 0 && l[lo] - l[lo - 1] < ctol) --lo;
    while (hi + 1 < l.size() && l[hi + 1] - l[hi] < ctol) ++hi;
    return {lo, hi};
}

Eigen::VectorXd BandChart::velocity(int band, const RVec& xi) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k_.symbol_at(xi));
    auto [lo, hi] = cluster_range(es.eigenvalues(), band, 1e-9);
    int mult = hi - lo + 1;
    Eigen::MatrixXcd P = es.eigenvectors().middleCols(lo, mult) *
                         es.eigenvectors().middleCols(lo, mult).adjoint();
    Eigen::VectorXd v(k_.d);
    for (int j = 0; j < k_.d; ++j)
        v[j] = (P * k_.dsymbol_at(xi, j)).trace().real() / mult;
    return v;
}

Eigen::MatrixXcd BandChart::projector(int band, const RVec& xi, double ctol) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k_.symbol_at(xi));
    auto [lo, hi] = cluster_range(es.eigenvalues(), band, ctol);
    int mult = hi - lo + 1;
    return es.eigenvectors().middleCols(lo, mult) *
           es.eigenvectors().middleCols(lo, mult).adjoint();
}

Eigen::MatrixXd BandChart::hessian(int band, const RVec& xi) const {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k_.symbol_at(xi));
    const auto& l = es.eigenvalues();
    auto [lo, hi] = cluster_range(l, band, 1e-9);
    if (lo != hi) throw std::runtime_error("hessian needs a simple band");
    Eigen::VectorXcd psi = es.eigenvectors().col(band);
    Eigen::MatrixXd h(k_.d, k_.d);
    std::vector<Eigen::VectorXcd> dpsi(k_.d);  // (dH) psi, reused below
    for (int j = 0; j < k_.d; ++j) dpsi[j] = k_.dsymbol_at(xi, j) * psi;
    for (int j = 0; j < k_.d; ++j)
        for (int m = j; m < k_.d; ++m) {
            cplx first = psi.dot(k_.d2symbol_at(xi, j, m) * psi);
            cplx second = 0;
            for (int q = 0; q < k_.n; ++q) {
                if (q == band) continue;
                cplx aj = es.eigenvectors().col(q).dot(dpsi[j]);
                cplx am = es.eigenvectors().col(q).dot(dpsi[m]);
                second += std::conj(aj) * am / (l[band] - l[q]);
            }
            h(j, m) = h(m, j) = (first + 2.0 * second).real();
        }
    return h;
}

BandData compute_bands(const HoppingKernel& k, const TorusGrid& g) {
    if (g.d != k.d) throw std::invalid_argument("grid/kernel dimension mismatch");
    BandData b;
    b.grid = g;
    b.n = k.n;
    const std::int64_t S = g.nodes();
    b.lam.resize(S * k.n);
    b.vel.resize(S * k.n * k.d);
    b.proj.resize(size_t(S) * k.n);
    b.deg.assign(size_t(S) * k.n, 0);
    for (std::int64_t s = 0; s < S; ++s) {
        RVec xi = g.xi(s);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(k.symbol_at(xi));
        const auto& l = es.eigenvalues();
        for (int kk = 0; kk < k.n; ++kk) {
            b.lam[s * k.n + kk] = l[kk];
            auto [lo, hi] = cluster_range(l, kk, 1e-6);
            int mult = hi - lo + 1;
            Eigen::MatrixXcd P = es.eigenvectors().middleCols(lo, mult) *
                                 es.eigenvectors().middleCols(lo, mult).adjoint();
            b.proj[size_t(s) * k.n + kk] = P;
            b.deg[size_t(s) * k.n + kk] = mult > 1 ? 1 : 0;
            for (int j = 0; j < k.d; ++j)
                b.vel[(s * k.n + kk) * k.d + j] =
                    (P * k.dsymbol_at(xi, j)).trace().real() / mult;
        }
    }
    return b;
}

static std::vector<std::int64_t> grid_neighbors(const TorusGrid& g, std::int64_t s) {
    std::vector<std::int64_t> out;
    IVec m = g.multi(s);
    for (int j = 0; j < g.d; ++j)
        for (int dir : {-1, 1}) {
            IVec m2 = m;
            m2[j] = (m[j] + dir + g.res[j]) % g.res[j];
            out.push_back(g.index(m2));
        }
    return out;
}

// damped Newton iteration on grad lambda = 0 for a simple band
static bool refine_critical(const BandChart& chart, int band, RVec& xi,
                            double tol) {
    Eigen::VectorXd g = chart.velocity(band, xi);
    double gn = g.norm();
    for (int it = 0; it < 60 && gn > tol; ++it) {
        if (chart.degenerate(band, xi)) return false;
        Eigen::MatrixXd h = chart.hessian(band, xi);
        Eigen::VectorXd step = h.fullPivLu().solve(g);
        if (!step.allFinite() || step.norm() > 1.0) step = g / std::max(gn, 1e-12);
        double damp = 1.0;
        for (int half = 0; half < 20; ++half) {
            RVec trial = xi;
            for (int j = 0; j < chart.dim(); ++j) trial[j] = xi[j] - damp * step[j];
            Eigen::VectorXd g2 = chart.velocity(band, trial);
            if (g2.norm() < gn) {
                xi = trial;
                g = g2;
                gn = g2.norm();
                break;
            }
            damp *= 0.5;
            if (half == 19) return false;
        }
    }
    return gn <= tol;
}

std::vector<double> detect_thresholds(const BandData& bands, const BandChart& chart,
                                      const ThresholdOptions& opt) {
    const TorusGrid& g = bands.grid;
    const std::int64_t S = g.nodes();
    const int n = bands.n;
    std::vector<double> found;

    // critical values: local minima of |grad lambda| over the grid
    for (int k = 0; k < n; ++k) {
        for (std::int64_t s = 0; s < S; ++s) {
            double sp = bands.speed(s, k);
            bool locmin = true;
            for (auto nb : grid_neighbors(g, s))
                if (bands.speed(nb, k) < sp) locmin = false;
            if (!locmin) continue;
            RVec xi = g.xi(s);
            if (sp <= opt.newton_tol) {
                found.push_back(bands.lambda(s, k));  // flat band or exact node hit
                continue;
            }
            if (bands.deg[size_t(s) * n + k]) continue;  // touching handled below
            if (refine_critical(chart, k, xi, opt.newton_tol))
                found.push_back(chart.lambda(k, xi));
        }
    }

    // band touchings: local minima of the gap between adjacent bands
    for (int k = 0; k + 1 < n; ++k) {
        for (std::int64_t s = 0; s < S; ++s) {
            double gap = bands.lambda(s, k + 1) - bands.lambda(s, k);
            bool locmin = true;
            for (auto nb : grid_neighbors(g, s))
                if (bands.lambda(nb, k + 1) - bands.lambda(nb, k) < gap) locmin = false;
            if (!locmin) continue;
            RVec xi0 = g.xi(s);
            auto gapf = [&](const Eigen::VectorXd& p) {
                RVec xi{0, 0, 0};
                for (int j = 0; j < g.d; ++j) xi[j] = p[j];
                auto l = chart.lambdas(xi);
                return l[k + 1] - l[k];
            };
            Eigen::VectorXd start(g.d);
            for (int j = 0; j < g.d; ++j) start[j] = xi0[j];
            double h0 = 2.0 * PI / g.res[0];
            Eigen::VectorXd best = nelder_mead(gapf, start, h0, 400, 1e-15);
            if (gapf(best) < opt.crossing_gap) {
                RVec xi{0, 0, 0};
                for (int j = 0; j < g.d; ++j) xi[j] = best[j];
                auto l = chart.lambdas(xi);
                found.push_back(0.5 * (l[k] + l[k + 1]));
            }
        }
    }

    std::sort(found.begin(), found.end());
    std::vector<double> out;
    for (double e : found)
        if (out.empty() || e - out.back() > opt.dedupe) out.push_back(e);
    return out;
}

std::vector<FermiPoint> fermi_surface(const BandData& bands, const BandChart& chart,
                                      double E) {
    const TorusGrid& g = bands.grid;
    const std::int64_t S = g.nodes();
    std::vector<FermiPoint> out;
    for (int k = 0; k < bands.n; ++k) {
        for (std::int64_t s = 0; s < S; ++s) {
            IVec m = g.multi(s);
            for (int j = 0; j < g.d; ++j) {
                IVec m2 = m;
                m2[j] = (m[j] + 1) % g.res[j];
                std::int64_t s2 = g.index(m2);
                double fa = bands.lambda(s, k) - E, fb = bands.lambda(s2, k) - E;
                if (fa == 0.0 && m[j] == 0) continue;  // counted from the left edge
                if (fa * fb > 0 || (fa != 0 && fb == 0)) continue;
                RVec xa = g.xi(s);
                double step = 2.0 * PI / g.res[j];
                // secant along the edge in arclength t
                double ta = 0, tb = step, va = fa, vb = fb;
                for (int it = 0; it < 80 && std::abs(vb) > 1e-13; ++it) {
                    if (vb == va) break;
                    double tn = tb - vb * (tb - ta) / (vb - va);
                    tn = std::clamp(tn, 0.0, step);
                    ta = tb;
                    va = vb;
                    tb = tn;
                    RVec xi = xa;
                    xi[j] += tn;
                    vb = chart.lambda(k, xi) - E;
                }
                FermiPoint p;
                p.xi = xa;
                p.xi[j] += tb;
                if (p.xi[j] >= PI) p.xi[j] -= 2.0 * PI;
                p.band = k;
                p.speed = chart.velocity(k, p.xi).norm();
                out.push_back(p);
            }
        }
    }
    return out;
}

EnergyWindow window_margin(const BandData& bands, const BandChart& chart, double a,
                           double b) {
    if (!(a < b)) throw std::invalid_argument("window needs a < b");
    auto th = detect_thresholds(bands, chart);
    EnergyWindow w;
    w.a = a;
    w.b = b;
    w.margin = std::numeric_limits<double>::infinity();
    for (double e : th) {
        if (e >= a && e <= b)
            throw std::invalid_argument("energy window contains a threshold");
        w.margin = std::min(w.margin, e < a ? a - e : e - b);
    }
    double vmin = std::numeric_limits<double>::infinity();
    bool hit = false;
    for (int k = 0; k < bands.n; ++k)
        for (std::int64_t s = 0; s < bands.grid.nodes(); ++s)
            if (bands.lambda(s, k) >= a && bands.lambda(s, k) <= b) {
                vmin = std::min(vmin, bands.speed(s, k));
                hit = true;
            }
    // the minimum tends to sit on the level sets of the endpoints, so
    // refine there rather than trusting grid nodes alone
    for (double E : {a, b})
        for (auto& p : fermi_surface(bands, chart, E)) {
            vmin = std::min(vmin, p.speed);
            hit = true;
        }
    if (!hit) throw std::invalid_argument("energy window misses the spectrum");
    w.v_min = vmin;
    return w;
}

MultiplierField spectral_filter(const BandData& bands,
                                const std::function<double(double)>& psi) {
    MultiplierField m;
    m.grid = bands.grid;
    m.n = bands.n;
    const std::int64_t S = bands.grid.nodes();
    if (bands.n == 1) {
        m.diag.resize(S);
        for (std::int64_t s = 0; s < S; ++s) m.diag[s] = psi(bands.lambda(s, 0));
        return m;
    }
    m.blocks.assign(size_t(S), Eigen::MatrixXcd());
    for (std::int64_t s = 0; s < S; ++s) {
        Eigen::MatrixXcd f = Eigen::MatrixXcd::Zero(bands.n, bands.n);
        int k = 0;
        while (k < bands.n) {
            // one cluster contributes a single projector
            auto [lo, hi] = cluster_range(
                bands.lam.segment(s * bands.n, bands.n), k, 1e-6);
            f += psi(bands.lambda(s, k)) * bands.proj[size_t(s) * bands.n + k];
            k = hi + 1;
        }
        m.blocks[size_t(s)] = f;
    }
    return m;
}

}  // namespace latscat
