#include "latscat/evolution.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <stdexcept>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

namespace latscat {

namespace {

// dense Hamiltonian on the box, component-major, periodic wraparound
Eigen::MatrixXcd assemble_dense(const HoppingKernel& k, const Box& box,
                                const Eigen::VectorXd& vdiag) {
    const std::int64_t S = box.nodes();
    const std::int64_t dim = S * k.n;
    Eigen::MatrixXcd H = Eigen::MatrixXcd::Zero(dim, dim);
    IVec y{0, 0, 0};
    for (std::int64_t i = 0; i < S; ++i) {
        const IVec x = box.site(i);
        for (const auto& [z, f] : k.terms) {
            for (int j = 0; j < k.d; ++j) {
                int v = x[j] - z[j];
                const int N = 2 * box.L + 1;
                while (v > box.L) v -= N;
                while (v < -box.L) v += N;
                y[j] = v;
            }
            const std::int64_t iy = box.index(y);
            for (int c = 0; c < k.n; ++c)
                for (int cc = 0; cc < k.n; ++cc)
                    H(c * S + i, cc * S + iy) += f(c, cc);
        }
    }
    if (vdiag.size() == S) {
        for (int c = 0; c < k.n; ++c)
            for (std::int64_t i = 0; i < S; ++i) H(c * S + i, c * S + i) += vdiag[i];
    } else if (vdiag.size() == dim) {
        for (std::int64_t i = 0; i < dim; ++i) H(i, i) += vdiag[i];
    }
    return H;
}

bool kernel_is_real(const HoppingKernel& k) {
    for (const auto& [z, f] : k.terms)
        if (f.imag().cwiseAbs().maxCoeff() > 0) return false;
    return true;
}

void solve_spectrum(EvolutionEngine& e) {
    const std::int64_t dim = e.dim();
    Eigen::MatrixXcd H = assemble_dense(e.kernel, e.box, e.vdiag);
    e.spec.eval.resize(dim);
    if (kernel_is_real(e.kernel)) {
        Eigen::MatrixXd A = H.real();
        int info = LAPACKE_dsyevd(LAPACK_COL_MAJOR, 'V', 'L', int(dim), A.data(),
                                 int(dim), e.spec.eval.data());
        if (info != 0) throw std::runtime_error("build_engine: dsyevd failed");
        e.spec.evec_r = std::move(A);
    } else {
        int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'V', 'L', int(dim), H.data(),
                                 int(dim), e.spec.eval.data());
        if (info != 0) throw std::runtime_error("build_engine: zheevd failed");
        e.spec.evec_c = std::move(H);
    }
}

// X = (H - c) / r applied to u
LatticeState scaled_apply(const EvolutionEngine& e, const LatticeState& u, double c,
                          double r) {
    LatticeState w = hamiltonian_apply(e, u);
    w.a -= c * u.a;
    w.a /= r;
    return w;
}

LatticeState chebyshev_full(const EvolutionEngine& e, const LatticeState& u,
                            double t) {
    const double c = 0.5 * (e.emax + e.emin);
    const double r = 0.5 * (e.emax - e.emin);
    const double x = std::abs(t) * r;
    const cplx rot(0.0, t >= 0 ? -1.0 : 1.0); // (-i sgn t)^m tracked by rotation

    LatticeState t0 = u;
    LatticeState t1 = scaled_apply(e, u, c, r);
    LatticeState out(u.box, u.n);
    out.a = u.a * (x == 0.0 ? 1.0 : std::cyl_bessel_j(0, x));

    cplx f = 2.0 * rot;
    LatticeState t2(u.box, u.n);
    for (int m = 1;; ++m) {
        double jm = (x == 0.0) ? 0.0 : std::cyl_bessel_j(double(m), x);
        out.a += (f * jm) * t1.a;
        if (std::abs(jm) < 1e-18 && double(m) > x + 10) break;
        t2 = scaled_apply(e, t1, c, r);
        t2.a = 2.0 * t2.a - t0.a;
        std::swap(t0, t1);
        std::swap(t1, t2);
        f *= rot;
    }
    out.a *= std::polar(1.0, -t * c);
    return out;
}

} // namespace

EvolutionEngine build_engine(const HoppingKernel& kernel, const Box& box,
                             const Eigen::VectorXd& vdiag, const std::string& method,
                             std::int64_t eigen_cap) {
    EvolutionEngine e;
    e.kernel = kernel;
    e.box = box;
    e.n = kernel.n;
    if (box.d != kernel.d)
        throw std::invalid_argument("build_engine: box dimension mismatch");
    const std::int64_t S = box.nodes();
    const std::int64_t dim = S * kernel.n;
    if (vdiag.size() != 0 && vdiag.size() != S && vdiag.size() != dim)
        throw std::invalid_argument("build_engine: potential diagonal size mismatch");
    e.vdiag = vdiag;

    e.ft = std::make_unique<FourierTransform>(box, kernel.n);
    e.bands = compute_bands(kernel, e.ft->grid());

    const double b0 = kernel.symbol_bound();
    double vmin = 0, vmax = 0;
    if (vdiag.size() > 0) {
        vmin = vdiag.minCoeff();
        vmax = vdiag.maxCoeff();
    }
    e.emin = -b0 + std::min(vmin, 0.0);
    e.emax = b0 + std::max(vmax, 0.0);

    if (method == "auto")
        e.method = dim <= eigen_cap ? "eigen" : "chebyshev";
    else if (method == "eigen" || method == "chebyshev")
        e.method = method;
    else
        throw std::invalid_argument("build_engine: unknown method " + method);

    if (e.method == "eigen") {
        if (dim > eigen_cap)
            throw std::invalid_argument("build_engine: box too large for eigen method");
        solve_spectrum(e);
    }
    return e;
}

LatticeState hamiltonian_apply(const EvolutionEngine& e, const LatticeState& u) {
    LatticeState w = hop_apply(e.kernel, u);
    const std::int64_t S = e.box.nodes();
    if (e.vdiag.size() == S) {
        for (int c = 0; c < e.n; ++c)
            w.a.segment(c * S, S) += e.vdiag.cwiseProduct(u.a.segment(c * S, S));
    } else if (e.vdiag.size() == S * e.n) {
        w.a += e.vdiag.cwiseProduct(u.a);
    }
    return w;
}

LatticeState evolve_free(const EvolutionEngine& e, const LatticeState& u, double t) {
    Eigen::VectorXcd uh = e.ft->forward(u.a);
    const std::int64_t S = e.ft->grid().nodes();
    if (e.n == 1) {
        for (std::int64_t s = 0; s < S; ++s)
            uh[s] *= std::polar(1.0, -t * e.bands.lambda(s, 0));
    } else {
        Eigen::VectorXcd v(e.n), acc(e.n);
        for (std::int64_t s = 0; s < S; ++s) {
            for (int c = 0; c < e.n; ++c) v[c] = uh[c * S + s];
            acc.setZero();
            for (int k = 0; k < e.n; ++k)
                acc += std::polar(1.0, -t * e.bands.lambda(s, k)) *
                       (e.bands.proj[s * e.n + k] * v);
            for (int c = 0; c < e.n; ++c) uh[c * S + s] = acc[c];
        }
    }
    LatticeState out(u.box, u.n);
    out.a = e.ft->inverse(uh);
    return out;
}

LatticeState evolve_full(const EvolutionEngine& e, const LatticeState& u, double t) {
    if (e.vdiag.size() == 0 && e.method != "eigen") return evolve_free(e, u, t);
    if (e.method == "eigen") {
        if (e.spec.real()) {
            Eigen::VectorXd cr = e.spec.evec_r.transpose() * u.a.real();
            Eigen::VectorXd ci = e.spec.evec_r.transpose() * u.a.imag();
            Eigen::VectorXcd co(cr.size());
            for (std::int64_t j = 0; j < co.size(); ++j)
                co[j] = cplx(cr[j], ci[j]) * std::polar(1.0, -t * e.spec.eval[j]);
            Eigen::VectorXd wr = co.real(), wi = co.imag();
            LatticeState out(u.box, u.n);
            out.a = (e.spec.evec_r * wr) + cplx(0.0, 1.0) * (e.spec.evec_r * wi);
            return out;
        }
        Eigen::VectorXcd co = e.spec.evec_c.adjoint() * u.a;
        for (std::int64_t j = 0; j < co.size(); ++j)
            co[j] *= std::polar(1.0, -t * e.spec.eval[j]);
        LatticeState out(u.box, u.n);
        out.a = e.spec.evec_c * co;
        return out;
    }
    return chebyshev_full(e, u, t);
}

LatticeState filter_free(const EvolutionEngine& e,
                         const std::function<double(double)>& psi,
                         const LatticeState& u) {
    Eigen::VectorXcd uh = e.ft->forward(u.a);
    const std::int64_t S = e.ft->grid().nodes();
    if (e.n == 1) {
        for (std::int64_t s = 0; s < S; ++s) uh[s] *= psi(e.bands.lambda(s, 0));
    } else {
        Eigen::VectorXcd v(e.n), acc(e.n);
        for (std::int64_t s = 0; s < S; ++s) {
            for (int c = 0; c < e.n; ++c) v[c] = uh[c * S + s];
            acc.setZero();
            for (int k = 0; k < e.n; ++k)
                acc += psi(e.bands.lambda(s, k)) * (e.bands.proj[s * e.n + k] * v);
            for (int c = 0; c < e.n; ++c) uh[c * S + s] = acc[c];
        }
    }
    LatticeState out(u.box, u.n);
    out.a = e.ft->inverse(uh);
    return out;
}

LatticeState filter_full(const EvolutionEngine& e,
                         const std::function<double(double)>& psi,
                         const LatticeState& u) {
    if (e.spec.empty())
        throw std::runtime_error("filter_full: engine has no small-box spectrum");
    if (e.spec.real()) {
        Eigen::VectorXd cr = e.spec.evec_r.transpose() * u.a.real();
        Eigen::VectorXd ci = e.spec.evec_r.transpose() * u.a.imag();
        for (std::int64_t j = 0; j < cr.size(); ++j) {
            const double w = psi(e.spec.eval[j]);
            cr[j] *= w;
            ci[j] *= w;
        }
        LatticeState out(u.box, u.n);
        out.a = (e.spec.evec_r * cr) + cplx(0.0, 1.0) * (e.spec.evec_r * ci);
        return out;
    }
    Eigen::VectorXcd co = e.spec.evec_c.adjoint() * u.a;
    for (std::int64_t j = 0; j < co.size(); ++j) co[j] *= psi(e.spec.eval[j]);
    LatticeState out(u.box, u.n);
    out.a = e.spec.evec_c * co;
    return out;
}

std::vector<double> spectrum_in(const EvolutionEngine& e, double a, double b) {
    if (e.spec.empty())
        throw std::runtime_error("spectrum_in: engine has no small-box spectrum");
    std::vector<double> out;
    for (std::int64_t j = 0; j < e.spec.eval.size(); ++j)
        if (e.spec.eval[j] >= a && e.spec.eval[j] <= b) out.push_back(e.spec.eval[j]);
    return out;
}

void require_clean(const EvolutionEngine& e, const LatticeState& u) {
    const double frac = u.boundary_mass();
    if (frac > e.alarm) {
        char buf[128];
        std::snprintf(buf, sizeof(buf),
                      "boundary alarm: outer shell holds %.3e of the state", frac);
        throw std::runtime_error(buf);
    }
}

} // namespace latscat
