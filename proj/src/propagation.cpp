#include "latscat/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include "latscat/bands.hpp"

namespace latscat {

namespace {

Eigen::VectorXd site_weight(const Box& box, double s) {
    Eigen::VectorXd w(box.nodes());
    for (std::int64_t i = 0; i < box.nodes(); ++i)
        w[i] = std::pow(jbracket(norm2(box.site(i), box.d)), -s);
    return w;
}

// multiplier chi(lambda_k) P_k on a spectral vector, one band
void band_multiplier(const BandData& bands, int band,
                     const std::function<double(double)>& chi,
                     const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    const std::int64_t S = bands.grid.nodes();
    const int n = bands.n;
    out.setZero(in.size());
    if (n == 1) {
        for (std::int64_t s = 0; s < S; ++s)
            out[s] = chi(bands.lambda(s, 0)) * in[s];
        return;
    }
    Eigen::VectorXcd v(n), pv(n);
    for (std::int64_t s = 0; s < S; ++s) {
        const double c = chi(bands.lambda(s, band));
        if (c == 0.0) continue;
        for (int cc = 0; cc < n; ++cc) v[cc] = in[cc * S + s];
        pv = bands.proj[s * n + band] * v;
        for (int cc = 0; cc < n; ++cc) out[cc * S + s] = c * pv[cc];
    }
}

// scalar multiplier field of one band's velocity component on a spectral vector
void velocity_multiplier(const BandData& bands, int band, int j,
                         const Eigen::VectorXcd& in, Eigen::VectorXcd& out) {
    const std::int64_t S = bands.grid.nodes();
    const int n = bands.n;
    out.resize(in.size());
    for (std::int64_t s = 0; s < S; ++s) {
        const double v = bands.velocity(s, band, j);
        for (int c = 0; c < n; ++c) out[c * S + s] = v * in[c * S + s];
    }
}

Eigen::VectorXcd position_multiply(const Box& box, int n, int j,
                                  const Eigen::VectorXcd& u) {
    const std::int64_t S = box.nodes();
    Eigen::VectorXcd out(u.size());
    for (std::int64_t i = 0; i < S; ++i) {
        const double xj = box.site(i)[j];
        for (int c = 0; c < n; ++c) out[c * S + i] = xj * u[c * S + i];
    }
    return out;
}

Eigen::VectorXd persite_vdiag(const EvolutionEngine& e) {
    if (e.vdiag.size() == 0 || e.vdiag.size() == e.box.nodes()) return e.vdiag;
    throw std::invalid_argument("propagation: component-resolved potentials are not supported here");
}

// sparse assembly of H = hop + diag(vdiag) with periodic wraparound
Eigen::SparseMatrix<cplx> assemble_sparse(const HoppingKernel& k, const Box& box,
                                          const Eigen::VectorXd& vdiag) {
    const std::int64_t S = box.nodes();
    const std::int64_t dim = S * k.n;
    std::vector<Eigen::Triplet<cplx>> trip;
    trip.reserve(std::size_t(dim) * (k.terms.size() * k.n + 1));
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
                    if (f(c, cc) != 0.0)
                        trip.emplace_back(int(c * S + i), int(cc * S + iy), f(c, cc));
        }
    }
    if (vdiag.size() == S) {
        for (int c = 0; c < k.n; ++c)
            for (std::int64_t i = 0; i < S; ++i)
                trip.emplace_back(int(c * S + i), int(c * S + i), cplx(vdiag[i], 0.0));
    } else if (vdiag.size() == dim) {
        for (std::int64_t i = 0; i < dim; ++i)
            trip.emplace_back(int(i), int(i), cplx(vdiag[i], 0.0));
    }
    Eigen::SparseMatrix<cplx> H(dim, dim);
    H.setFromTriplets(trip.begin(), trip.end());
    return H;
}

Eigen::VectorXcd power_start(std::int64_t dim) {
    std::mt19937_64 rng(derive_seed(42, "lap-power"));
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::VectorXcd z(dim);
    for (std::int64_t i = 0; i < dim; ++i) z[i] = cplx(gauss(rng), gauss(rng));
    z /= z.norm();
    return z;
}

} // namespace

ConjugateOperator build_conjugate(const EvolutionEngine& e,
                                  std::function<double(double)> chi) {
    ConjugateOperator A;
    A.engine = &e;
    A.chi = std::move(chi);
    return A;
}

LatticeState conjugate_apply(const ConjugateOperator& A, const LatticeState& u) {
    const EvolutionEngine& e = *A.engine;
    const FourierTransform& ft = *e.ft;
    const std::int64_t S = e.box.nodes();
    LatticeState out(u.box, u.n);
    Eigen::VectorXcd uh = ft.forward(u.a);
    Eigen::VectorXcd g(uh.size()), tmp(uh.size()), mid(u.a.size());
    for (int k = 0; k < e.n; ++k) {
        band_multiplier(e.bands, k, A.chi, uh, g);
        Eigen::VectorXcd w = ft.inverse(g);
        mid.setZero();
        for (int j = 0; j < e.box.d; ++j) {
            // x_j (v_j(D) w)
            velocity_multiplier(e.bands, k, j, g, tmp);
            mid += position_multiply(e.box, e.n, j, ft.inverse(tmp));
            // v_j(D) (x_j w)
            Eigen::VectorXcd xw = ft.forward(position_multiply(e.box, e.n, j, w));
            velocity_multiplier(e.bands, k, j, xw, tmp);
            mid += ft.inverse(tmp);
        }
        band_multiplier(e.bands, k, A.chi, ft.forward(mid), g);
        out.a += ft.inverse(g);
    }
    return out;
}

DecayCurve cook_curve(const EvolutionEngine& e, const Modifier& J,
                      const LatticeState& u, const std::vector<double>& ts) {
    const Eigen::VectorXd vd = persite_vdiag(e);
    DecayCurve c;
    c.ts = ts;
    for (double t : ts) {
        LatticeState w = evolve_free(e, u, t);
        require_clean(e, w);
        c.vals.push_back(commutator_apply(J, *e.ft, e.kernel, vd, w).norm());
    }
    c.slope = loglog_slope(c.ts, c.vals);
    return c;
}

DecayCurve mismatch_decay(const EvolutionEngine& e, const Modifier& J,
                          const LatticeState& u, const std::vector<double>& ts) {
    DecayCurve c;
    c.ts = ts;
    for (double t : ts) {
        LatticeState w = evolve_free(e, u, t);
        require_clean(e, w);
        c.vals.push_back(apply_modifier(J, *e.ft, w).norm());
    }
    c.slope = loglog_slope(c.ts, c.vals);
    return c;
}

WaveOpReport wave_operator_estimate(const EvolutionEngine& e, const Modifier& J,
                                    const LatticeState& u,
                                    const std::vector<double>& Ts) {
    WaveOpReport r;
    r.Ts = Ts;
    LatticeState prev;
    for (double T : Ts) {
        LatticeState uT = evolve_free(e, u, T);
        require_clean(e, uT);
        LatticeState z = apply_modifier(J, *e.ft, uT);
        LatticeState w = evolve_full(e, z, -T);
        require_clean(e, w);
        r.norms.push_back(z.norm());
        if (prev.a.size() > 0) r.gaps.push_back((w.a - prev.a).norm());
        prev = std::move(w);
    }
    r.isometry = r.norms.back() / u.norm();
    const Eigen::VectorXd vd = persite_vdiag(e);
    LatticeState uT = evolve_free(e, u, Ts.back());
    r.defect = commutator_apply(J, *e.ft, e.kernel, vd, uT).norm();
    r.last = std::move(prev);
    return r;
}

WaveOpReport wave_operator_plain(const EvolutionEngine& e, const LatticeState& u,
                                 const std::vector<double>& Ts) {
    WaveOpReport r;
    r.Ts = Ts;
    const Eigen::VectorXd vd = persite_vdiag(e);
    LatticeState prev;
    for (double T : Ts) {
        LatticeState uT = evolve_free(e, u, T);
        require_clean(e, uT);
        LatticeState w = evolve_full(e, uT, -T);
        require_clean(e, w);
        r.norms.push_back(uT.norm());
        if (prev.a.size() > 0) r.gaps.push_back((w.a - prev.a).norm());
        prev = std::move(w);
    }
    r.isometry = r.norms.back() / u.norm();
    LatticeState uT = evolve_free(e, u, Ts.back());
    if (vd.size() > 0) {
        LatticeState Vu(u.box, u.n);
        const std::int64_t S = e.box.nodes();
        for (int c = 0; c < e.n; ++c)
            Vu.a.segment(c * S, S) = vd.cwiseProduct(uT.a.segment(c * S, S));
        r.defect = Vu.norm();
    }
    r.last = std::move(prev);
    return r;
}

WaveOpReport inverse_wave_estimate(const EvolutionEngine& e, const Modifier& J,
                                   const LatticeState& u,
                                   const std::vector<double>& Ts) {
    WaveOpReport r;
    r.Ts = Ts;
    LatticeState prev;
    for (double T : Ts) {
        LatticeState uT = evolve_full(e, u, T);
        require_clean(e, uT);
        LatticeState z = apply_modifier_adjoint(J, *e.ft, uT);
        LatticeState w = evolve_free(e, z, -T);
        require_clean(e, w);
        r.norms.push_back(z.norm());
        if (prev.a.size() > 0) r.gaps.push_back((w.a - prev.a).norm());
        prev = std::move(w);
    }
    r.isometry = r.norms.back() / u.norm();
    // (H0 J* - J* H) at the last checkpoint
    LatticeState uT = evolve_full(e, u, Ts.back());
    LatticeState ju = apply_modifier_adjoint(J, *e.ft, uT);
    LatticeState lhs = hop_apply(e.kernel, ju);
    LatticeState rhs = apply_modifier_adjoint(J, *e.ft, hamiltonian_apply(e, uT));
    r.defect = (lhs.a - rhs.a).norm();
    r.last = std::move(prev);
    return r;
}

MourreReport mourre_check(const BandData& bands, const BandChart& chart, double a,
                          double b, const std::function<double(double)>& psi,
                          const EvolutionEngine* small_box, int nlow) {
    EnergyWindow win = window_margin(bands, chart, a, b);
    MourreReport r;
    double best = std::numeric_limits<double>::infinity();
    const std::int64_t S = bands.grid.nodes();
    for (std::int64_t s = 0; s < S; ++s)
        for (int k = 0; k < bands.n; ++k)
            if (psi(bands.lambda(s, k)) > 1e-6) {
                const double sp = bands.speed(s, k);
                best = std::min(best, 2.0 * sp * sp);
            }
    for (double E : {a, b})
        if (psi(E) > 1e-6)
            for (const FermiPoint& fp : fermi_surface(bands, chart, E))
                best = std::min(best, 2.0 * fp.speed * fp.speed);
    r.cstar = std::isfinite(best) ? best : 0.0;

    if (small_box != nullptr) {
        const EvolutionEngine& e = *small_box;
        if (e.spec.empty())
            throw std::invalid_argument("mourre_check: the perturbed form needs an eigen-method engine");
        ConjugateOperator A = build_conjugate(e, plateau_window(a, b, win.margin / 2));
        const std::int64_t dim = e.dim();
        Eigen::MatrixXcd M(dim, dim);
        LatticeState basis(e.box, e.n);
        for (std::int64_t i = 0; i < dim; ++i) {
            basis.a.setZero();
            basis.a[i] = 1.0;
            LatticeState f = filter_full(e, psi, basis);
            LatticeState af = conjugate_apply(A, f);
            LatticeState hf = hamiltonian_apply(e, f);
            LatticeState comm(e.box, e.n);
            comm.a = cplx(0.0, 1.0) *
                     (hamiltonian_apply(e, af).a - conjugate_apply(A, hf).a);
            M.col(i) = filter_full(e, psi, comm).a;
        }
        Eigen::MatrixXcd Mh = 0.5 * (M + M.adjoint());
        Eigen::VectorXd ev(dim);
        int info = LAPACKE_zheevd(LAPACK_COL_MAJOR, 'N', 'L', int(dim), Mh.data(),
                                  int(dim), ev.data());
        if (info != 0) throw std::runtime_error("mourre_check: zheevd failed");
        for (int i = 0; i < std::min<std::int64_t>(nlow, dim); ++i)
            r.low.push_back(ev[i]);
    }
    return r;
}

double radiation_defect(const FourierTransform& ft, const BandData& bands, int band,
                        const std::function<double(double)>& chi,
                        const LatticeState& u) {
    const Box& box = u.box;
    const std::int64_t S = box.nodes();
    const int n = u.n, d = box.d;
    Eigen::VectorXcd uh = ft.forward(u.a);
    Eigen::VectorXcd g(uh.size()), tmp(uh.size());
    band_multiplier(bands, band, chi, uh, g);
    std::vector<Eigen::VectorXcd> aj(d);
    for (int j = 0; j < d; ++j) {
        velocity_multiplier(bands, band, j, g, tmp);
        aj[j] = ft.inverse(tmp);
    }
    Eigen::VectorXcd rad = Eigen::VectorXcd::Zero(u.a.size());
    for (int j = 0; j < d; ++j) rad += position_multiply(box, n, j, aj[j]);
    double val = 0;
    for (int j = 0; j < d; ++j) {
        for (std::int64_t i = 0; i < S; ++i) {
            const IVec x = box.site(i);
            const double r2 = 1.0 + norm2(x, d) * norm2(x, d);
            for (int c = 0; c < n; ++c) {
                const cplx dj = aj[j][c * S + i] - (x[j] / r2) * rad[c * S + i];
                val += std::norm(dj) / std::sqrt(r2);
            }
        }
    }
    return val;
}

RadiationReport radiation_integral(const EvolutionEngine& e,
                                   const std::function<double(double)>& psi,
                                   const std::function<double(double)>& chi,
                                   int band, const LatticeState& u0, double T,
                                   double dt) {
    if (e.spec.empty())
        throw std::invalid_argument("radiation_integral: needs an eigen-method engine");
    LatticeState u = filter_full(e, psi, u0);
    const bool null_state = u.norm() < 1e-12; // nothing survives the filter
    if (!null_state) u.a /= u.norm();

    RadiationReport r;
    const bool real_spec = e.spec.real();
    Eigen::VectorXcd co0;
    Eigen::VectorXd cr, ci;
    if (real_spec) {
        cr = e.spec.evec_r.transpose() * u.a.real();
        ci = e.spec.evec_r.transpose() * u.a.imag();
    } else {
        co0 = e.spec.evec_c.adjoint() * u.a;
    }
    LatticeState ut(u.box, u.n);
    for (double t = 0.0; t <= T + 1e-9; t += dt) {
        if (real_spec) {
            Eigen::VectorXd pr(cr.size()), pi(cr.size());
            for (std::int64_t j = 0; j < cr.size(); ++j) {
                const double ph = -t * e.spec.eval[j];
                const double cph = std::cos(ph), sph = std::sin(ph);
                pr[j] = cr[j] * cph - ci[j] * sph;
                pi[j] = cr[j] * sph + ci[j] * cph;
            }
            ut.a = (e.spec.evec_r * pr) + cplx(0.0, 1.0) * (e.spec.evec_r * pi);
        } else {
            Eigen::VectorXcd co = co0;
            for (std::int64_t j = 0; j < co.size(); ++j)
                co[j] *= std::polar(1.0, -t * e.spec.eval[j]);
            ut.a = e.spec.evec_c * co;
        }
        if (!null_state) require_clean(e, ut);
        r.ts.push_back(t);
        r.vals.push_back(radiation_defect(*e.ft, e.bands, band, chi, ut));
    }

    auto window_integral = [&](double lo, double hi) {
        double acc = 0;
        for (std::size_t i = 0; i + 1 < r.ts.size(); ++i)
            if (r.ts[i] >= lo - 1e-9 && r.ts[i + 1] <= hi + 1e-9)
                acc += 0.5 * dt * (r.vals[i] + r.vals[i + 1]);
        return acc;
    };
    r.first = window_integral(T / 4, T / 2);
    r.second = window_integral(T / 2, T);
    r.ratio = r.first > 0 ? r.second / r.first : 0.0;
    return r;
}

LapReport lap_scan(const HoppingKernel& k, const Box& box,
                   const Eigen::VectorXd& vdiag, const std::vector<double>& lams,
                   const std::vector<double>& epss, double s, int iters,
                   const std::vector<double>& pp) {
    if (s <= 0.5) throw std::invalid_argument("lap_scan: weight exponent must exceed 1/2");
    for (double eps : epss)
        if (eps < 10.0 / box.L)
            throw std::invalid_argument("lap_scan: eps below the resolution floor 10/L");

    const Eigen::SparseMatrix<cplx> H = assemble_sparse(k, box, vdiag);
    const std::int64_t dim = H.rows();
    Eigen::VectorXd w1 = site_weight(box, s);
    Eigen::VectorXd W(dim);
    const std::int64_t S = box.nodes();
    for (int c = 0; c < k.n; ++c) W.segment(c * S, S) = w1;

    Eigen::SparseMatrix<cplx> I(dim, dim);
    I.setIdentity();

    LapReport r;
    for (double lam : lams) {
        bool guard = false;
        for (double p : pp)
            if (std::abs(lam - p) < 0.02) guard = true;
        if (guard) {
            r.skipped.push_back(lam);
            continue;
        }
        for (double eps : epss) {
            Eigen::SparseMatrix<cplx> A = H - cplx(lam, eps) * I;
            Eigen::SparseMatrix<cplx> Ah = Eigen::SparseMatrix<cplx>(A.adjoint());
            Eigen::SparseLU<Eigen::SparseMatrix<cplx>> lu, luH;
            lu.compute(A);
            luH.compute(Ah);
            if (lu.info() != Eigen::Success || luH.info() != Eigen::Success)
                throw std::runtime_error("lap_scan: sparse factorization failed");
            Eigen::VectorXcd z = power_start(dim);
            double nrm = 0;
            for (int it = 0; it < iters; ++it) {
                Eigen::VectorXcd y = W.cwiseProduct(lu.solve(W.cwiseProduct(z).eval()));
                Eigen::VectorXcd z2 = W.cwiseProduct(luH.solve(W.cwiseProduct(y).eval()));
                nrm = z2.norm();
                z = z2 / nrm;
            }
            r.table.push_back({lam, eps, std::sqrt(nrm)});
        }
    }
    if (!r.table.empty()) {
        double lo = r.table[0].norm, hi = r.table[0].norm;
        for (const LapPoint& p : r.table) {
            lo = std::min(lo, p.norm);
            hi = std::max(hi, p.norm);
        }
        r.flatness = hi / lo;
    }
    return r;
}

double lap_free_point(const HoppingKernel& k, const Box& box, double lambda,
                      double eps, double s, int iters) {
    FourierTransform ft(box, k.n);
    BandData bands = compute_bands(k, ft.grid());
    const std::int64_t S = box.nodes();
    const std::int64_t dim = S * k.n;
    Eigen::VectorXd w1 = site_weight(box, s);
    Eigen::VectorXd W(dim);
    for (int c = 0; c < k.n; ++c) W.segment(c * S, S) = w1;

    auto resolvent = [&](const Eigen::VectorXcd& v, double sign) {
        Eigen::VectorXcd vh = ft.forward(v);
        if (k.n == 1) {
            for (std::int64_t m = 0; m < S; ++m)
                vh[m] /= cplx(bands.lambda(m, 0) - lambda, -sign * eps);
        } else {
            Eigen::VectorXcd x(k.n), acc(k.n);
            for (std::int64_t m = 0; m < S; ++m) {
                for (int c = 0; c < k.n; ++c) x[c] = vh[c * S + m];
                acc.setZero();
                for (int kk = 0; kk < k.n; ++kk)
                    acc += (bands.proj[m * k.n + kk] * x) /
                           cplx(bands.lambda(m, kk) - lambda, -sign * eps);
                for (int c = 0; c < k.n; ++c) vh[c * S + m] = acc[c];
            }
        }
        return ft.inverse(vh).eval();
    };

    Eigen::VectorXcd z = power_start(dim);
    double nrm = 0;
    for (int it = 0; it < iters; ++it) {
        Eigen::VectorXcd y = W.cwiseProduct(resolvent(W.cwiseProduct(z).eval(), +1.0));
        Eigen::VectorXcd z2 = W.cwiseProduct(resolvent(W.cwiseProduct(y).eval(), -1.0));
        nrm = z2.norm();
        z = z2 / nrm;
    }
    return std::sqrt(nrm);
}

} // namespace latscat
