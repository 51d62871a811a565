#pragma once

#include "latscat/bands.hpp"
#include "latscat/fourier.hpp"
#include "latscat/lattice.hpp"

namespace latscat {

// scalar symbol a(x, xi) on box times torus.  `f` is the defining
// evaluator; `dxi` optionally supplies exact xi-derivatives (multi-index
// alpha packed per dimension) for use in the composition expansion, with
// central differences as the fallback.  `sep` terms, when present, give
// an exact decomposition a = sum_t w_t(x) m_t(xi) that quantize exploits.
struct SymbolField {
    int d = 1;
    int order = 0;
    std::function<cplx(const IVec&, const RVec&)> f;
    std::function<cplx(const IVec&, const RVec&, const IVec&)> dxi;
    struct SepTerm {
        std::function<cplx(const IVec&)> w;
        std::function<cplx(const RVec&)> m;
    };
    std::vector<SepTerm> sep;

    cplx eval(const IVec& x, const RVec& xi) const;
    cplx dxi_eval(const IVec& x, const RVec& xi, const IVec& alpha) const;
};

SymbolField multiplier_symbol(int d, const std::function<cplx(const RVec&)>& m);
SymbolField position_symbol(int d, const std::function<cplx(const IVec&)>& w);

// Op(a)u(x) = (2pi)^{-d/2} w sum_m a(x, xi_m) e^{i x.xi_m} uhat_m.
// Exact trapezoid quadrature over the dual grid; cost |box|^2 on the
// general path, |box| log |box| per separable term.
Eigen::VectorXcd quantize(const FourierTransform& ft, const SymbolField& a,
                          const Eigen::VectorXcd& u);

// composition expansion to order M:
//   c = sum_{|alpha| <= M} (-i)^{|alpha|}/alpha!  d_xi^alpha a  dbar_x^alpha b
// with backward differences in x, so Op(c) approximates Op(a)Op(b) with a
// remainder of symbol order  ord(a) + ord(b) - M - 1.
SymbolField compose_symbols(const SymbolField& a, const SymbolField& b, int M);

// adjoint expansion: c = sum_{|alpha| <= M} (-i)^{|alpha|}/alpha!
// d_xi^alpha dbar_x^alpha conj(a), approximating Op(a)^*
SymbolField adjoint_symbol(const SymbolField& a, int M);

// exact symbol of Op(h(D)) Op(b) for a finite hopping kernel:
//   c(x, xi) = sum_z f(z) e^{-i z.xi} b(x - z, xi)
SymbolField sharp_multiplier_product(const HoppingKernel& k, const SymbolField& b);

// backward difference power of a symbol in x (exact on the lattice)
cplx backward_diff(const SymbolField& b, const IVec& x, const RVec& xi,
                   const IVec& alpha);

// max ||Op(a)u|| over `nprobes` unit random states supported on
// |x| <= radius.  Fixing the support keeps the measurement comparable
// across box sizes.
double probe_opnorm(const FourierTransform& ft, const SymbolField& a, int nprobes,
                    int radius, std::uint64_t seed);

// time-smoothness curve t -> int_0^t ||B e^{-isH0} u||^2 ds on the free
// dynamics given by the dispersion multiplier; B is a position weight
std::vector<double> kato_curve(const FourierTransform& ft,
                               const Eigen::VectorXcd& dispersion,
                               const Eigen::VectorXd& weight,
                               const Eigen::VectorXcd& u, double T, double dt);

}  // namespace latscat
