#pragma once

#include <cstdint>
#include <vector>

#include "latscat/eikonal.hpp"
#include "latscat/pdo.hpp"

namespace latscat {

// direction cutoffs sigma_+ (outgoing, sign > 0) and sigma_- on [-1,1],
// realized as sin and cos of (pi/2) g(theta) with g a smooth monotone step
// from 0 on (-inf,-1/2] to 1 on [1/2,+inf).  The partition
// sigma_+^2 + sigma_-^2 = 1 and the endpoint values 0/1 are exact.
double direction_cutoff(int sign, double theta);
double direction_cutoff_deriv(int sign, double theta);

struct CutoffSet {
    double R = 0;
    EnergyWindow window;
    ScalarWindow chi;       // 1 on [a,b], supported in (a-m, b+m), m = margin/2
    ScalarWindow chi_wide;  // enlarged copy, 1 on the support of chi

    double eta(double r) const { return radial_cutoff(r, R); }
};

// checks the window against the tabulated bands (chi support must stay on
// non-degenerate nodes of every band) and freezes the cutoff radii
CutoffSet build_cutoffs(double R, const EnergyWindow& window, const BandData& bands);

// one-band Isozaki-Kitada modifier with symbol
//   s(x,xi) = eta(x) sigma_{sign}(cos(x, grad lambda_k)) P_k(xi) chi(lambda_k(xi))
// and phase x.xi + u(x,xi).  An empty PhaseFunction means the flat phase
// u = 0 (zero long-range potential); otherwise the phase tables must cover
// every chi-support node, and the modifier inherits their carried sides.
struct Modifier {
    int band = 0;
    int sign = +1;
    int d = 1, n = 1;
    Box box;
    TorusGrid grid;
    CutoffSet cut;

    struct Column {
        std::int64_t node = 0;
        double lam = 0;  // band energy at the node
        double chi = 0;
        RVec xi{};
        RVec v{};
        Eigen::MatrixXcd proj;  // band projector, empty when n == 1
        int side = 0;           // d == 1: carried half-line x = side*t
        Eigen::VectorXcd amp;   // d == 1: eta*chi*e^{iu} at t = 0..L
    };
    std::vector<Column> columns;
};

Modifier build_modifier(int band, int sign, const PhaseFunction& phase,
                        const CutoffSet& cut, const BandData& bands);

// J_pm = sum_k J_pm^k
struct ModifierSum {
    std::vector<Modifier> parts;
};
ModifierSum build_sum(std::vector<Modifier> parts);

// (2pi)^{-d/2} w sum_m s(x,xi_m) e^{i(x.xi_m + u)} uhat_m, and the formal
// adjoint with the conjugate phase; the pair is an exact adjoint pair in
// the Parseval inner product of the transform
LatticeState apply_modifier(const Modifier& J, const FourierTransform& ft,
                            const LatticeState& u);
LatticeState apply_modifier_adjoint(const Modifier& J, const FourierTransform& ft,
                                    const LatticeState& z);
LatticeState apply_modifier(const ModifierSum& J, const FourierTransform& ft,
                            const LatticeState& u);
LatticeState apply_modifier_adjoint(const ModifierSum& J, const FourierTransform& ft,
                                    const LatticeState& z);

// the cutoff symbol as a scalar symbol field (d == 1 only); with the flat
// phase the modifier coincides with quantize() of this field
SymbolField modifier_symbol(const Modifier& J, const HoppingKernel& kernel);

// same modifier with the phase factor stripped from the amplitude,
// i.e. the plain quantization Op(s) of the cutoff symbol
Modifier strip_phase(const Modifier& J);

// probe quantities behind the operator-calculus lemma, measured on random
// states; each is a max over `trials` draws
//   squares_defect:    ||<x>^rho (J*J - Op(s)*Op(s)) u||, u drawn on |x| <= 64
//   weight_sandwich:   ||<x>^{-p} J <x>^p u|| / ||u||, u drawn on |x| <= 64
//   filter_commutator: ||<x>^rho [J, psi(D)] u|| / ||u||, u drawn on |x| <= 64
//   cross_band:        ||J_k (J_l)^* u||, ||u|| = 1
double squares_defect(const Modifier& J, const FourierTransform& ft, double rho,
                      int trials, std::uint64_t seed);
double weight_sandwich(const Modifier& J, const FourierTransform& ft, double p,
                       int trials, std::uint64_t seed);
double filter_commutator(const Modifier& J, const FourierTransform& ft, double rho,
                         int trials, std::uint64_t seed);
double cross_band(const Modifier& Jk, const Modifier& Jl, const FourierTransform& ft,
                  int trials, std::uint64_t seed);

// (H J - J H0) u with H0 the periodic hop and H = H0 + diag(vdiag); an
// empty vdiag means V = 0
LatticeState commutator_apply(const Modifier& J, const FourierTransform& ft,
                              const HoppingKernel& kernel,
                              const Eigen::VectorXd& vdiag, const LatticeState& u);

// decay of the commutator on energy-filtered deltas placed at |x0| -> inf.
// In one dimension the leading commutator symbol vanishes identically
// (the transverse factor |grad lambda|^2 - (x.grad lambda)^2/|x|^2 is zero
// on a line), so the full commutator norm is the remainder and the fitted
// slope targets -min(1+rho, 2).
struct DefectReport {
    std::vector<double> x0;
    std::vector<double> vals;
    double slope = 0;
};
DefectReport leading_symbol_defect(const Modifier& J, const FourierTransform& ft,
                                   const HoppingKernel& kernel,
                                   const Eigen::VectorXd& vdiag,
                                   const std::vector<double>& x0s);

}  // namespace latscat
