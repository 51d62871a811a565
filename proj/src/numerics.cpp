#include "latscat/numerics.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace latscat {

static double bexp(double t) { return t > 0 ? std::exp(-1.0 / t) : 0.0; }

double smooth_step(double t) {
    if (t <= 0) return 0.0;
    if (t >= 1) return 1.0;
    double a = bexp(t);
    return a / (a + bexp(1.0 - t));
}

std::pair<double, double> sigma_pair(double theta) {
    double g = smooth_step(theta + 0.5);
    if (g == 0.0) return {0.0, 1.0};
    if (g == 1.0) return {1.0, 0.0};
    return {std::sin(0.5 * PI * g), std::cos(0.5 * PI * g)};
}

double radial_cutoff(double r, double R) { return smooth_step((r - R) / R); }

double ScalarWindow::operator()(double lam) const {
    switch (kind) {
        case Sharp:
            return (lam >= a && lam <= b) ? 1.0 : 0.0;
        case Plateau: {
            double w = margin;
            return smooth_step((lam - a + w) / w) * smooth_step((b + w - lam) / w);
        }
        case Bump: {
            double t = (2.0 * lam - a - b) / (b - a);
            double s = 1.0 - t * t;
            if (s <= 0) return 0.0;
            return std::exp(1.0 - 1.0 / (s * s));
        }
    }
    return 0.0;
}

ScalarWindow bump_window(double a, double b) { return {ScalarWindow::Bump, a, b, 0}; }
ScalarWindow plateau_window(double a, double b, double margin) {
    return {ScalarWindow::Plateau, a, b, margin};
}
ScalarWindow sharp_window(double a, double b) { return {ScalarWindow::Sharp, a, b, 0}; }

double loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double floor) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (size_t i = 0; i < x.size(); ++i) {
        double yi = std::abs(y[i]);
        if (yi <= floor || x[i] <= 0) continue;
        double lx = std::log(x[i]), ly = std::log(yi);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
        ++n;
    }
    if (n < 2) throw std::runtime_error("loglog_slope: fewer than two usable points");
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double trapezoid(const std::vector<double>& y, double dx) {
    if (y.size() < 2) return 0.0;
    double s = 0.5 * (y.front() + y.back());
    for (size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
    return s * dx;
}

std::vector<double> bessel_j_array(double x, int kmax) {
    std::vector<double> out(kmax + 1, 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return out;
    }
    int start = kmax + 20 + int(std::sqrt(40.0 * kmax));
    start = std::max(start, int(std::abs(x)) + 40);
    double jp = 0.0, jc = 1e-30;
    double norm = 0.0;
    for (int k = start; k >= 0; --k) {
        double jm = 2.0 * (k + 1) / x * jc - jp;
        jp = jc;
        jc = jm;
        if (std::abs(jc) > 1e250) {  // rescale to dodge overflow
            jc *= 1e-250;
            jp *= 1e-250;
            for (auto& v : out) v *= 1e-250;
            norm *= 1e-250;
        }
        if (k <= kmax) out[k] = jc;
        if (k % 2 == 0) norm += (k == 0 ? 1.0 : 2.0) * jc;
    }
    // J_0(x) + 2 sum_k J_2k(x) = 1
    double scale = 1.0 / norm;
    for (auto& v : out) v *= scale;
    return out;
}

Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd start, double scale, int max_eval,
                            double tol) {
    const int d = int(start.size());
    std::vector<Eigen::VectorXd> pts(d + 1, start);
    std::vector<double> val(d + 1);
    for (int i = 0; i < d; ++i) pts[i + 1][i] += scale;
    for (int i = 0; i <= d; ++i) val[i] = f(pts[i]);
    int evals = d + 1;

    auto order = [&] {
        std::vector<int> idx(d + 1);
        for (int i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return val[a] < val[b]; });
        std::vector<Eigen::VectorXd> p2;
        std::vector<double> v2;
        for (int i : idx) {
            p2.push_back(pts[i]);
            v2.push_back(val[i]);
        }
        pts = p2;
        val = v2;
    };

    while (evals < max_eval) {
        order();
        if (std::abs(val[d] - val[0]) < tol * (std::abs(val[0]) + tol)) break;
        Eigen::VectorXd cen = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) cen += pts[i];
        cen /= d;
        Eigen::VectorXd xr = cen + (cen - pts[d]);
        double fr = f(xr);
        ++evals;
        if (fr < val[0]) {
            Eigen::VectorXd xe = cen + 2.0 * (cen - pts[d]);
            double fe = f(xe);
            ++evals;
            if (fe < fr) {
                pts[d] = xe;
                val[d] = fe;
            } else {
                pts[d] = xr;
                val[d] = fr;
            }
        } else if (fr < val[d - 1]) {
            pts[d] = xr;
            val[d] = fr;
        } else {
            Eigen::VectorXd xc = cen + 0.5 * (pts[d] - cen);
            double fc = f(xc);
            ++evals;
            if (fc < val[d]) {
                pts[d] = xc;
                val[d] = fc;
            } else {
                for (int i = 1; i <= d; ++i) {
                    pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
                    val[i] = f(pts[i]);
                    ++evals;
                }
            }
        }
    }
    order();
    return pts[0];
}

double power_opnorm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply_adj,
                    Eigen::Index dim, std::uint64_t seed, int iters) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd;
    Eigen::VectorXcd z(dim);
    for (Eigen::Index i = 0; i < dim; ++i) z[i] = cplx(nd(rng), nd(rng));
    z /= z.norm();
    double nrm = 0.0;
    for (int it = 0; it < iters; ++it) {
        z = apply_adj(apply(z));
        nrm = z.norm();
        if (nrm == 0.0) return 0.0;
        z /= nrm;
    }
    return std::sqrt(nrm);
}

std::uint64_t derive_seed(std::uint64_t base, const std::string& label) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : label) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return base ^ h;
}

}  // namespace latscat
