#pragma once

#include <functional>
#include <vector>

#include "latscat/evolution.hpp"
#include "latscat/modifiers.hpp"

namespace latscat {

// A = sum_k C_k (x . v_k(D) + v_k(D) . x) C_k with C_k = chi(lambda_k) P_k (D),
// the band-localized dilation generator.  Symmetric by construction: every
// factor is self-adjoint and the middle block is a sum T + T^*.
struct ConjugateOperator {
    const EvolutionEngine* engine = nullptr;
    std::function<double(double)> chi;
};

ConjugateOperator build_conjugate(const EvolutionEngine& e,
                                  std::function<double(double)> chi);

LatticeState conjugate_apply(const ConjugateOperator& A, const LatticeState& u);

// decay curve with a log-log least-squares tail slope
struct DecayCurve {
    std::vector<double> ts;
    std::vector<double> vals;
    double slope = 0;
};

// t -> ||(H J - J H0) e^{-itH0} u||, the integrand of the Cook existence
// criterion.  The caller prepares u inside the energy window; states filtered
// to a disjoint window give a vanishing curve.
DecayCurve cook_curve(const EvolutionEngine& e, const Modifier& J,
                      const LatticeState& u, const std::vector<double>& ts);

// t -> ||J e^{-itH0} u|| for the oppositely oriented modifier; decays fast
// because the carried cone never meets the packet's propagation direction
DecayCurve mismatch_decay(const EvolutionEngine& e, const Modifier& J,
                          const LatticeState& u, const std::vector<double>& ts);

// W(T)u = e^{iTH} J e^{-iTH0} u at increasing checkpoints
struct WaveOpReport {
    std::vector<double> Ts;
    std::vector<double> norms; // ||W(T_i)u|| = ||J e^{-iT_i H0} u||
    std::vector<double> gaps;  // ||W(T_{i+1})u - W(T_i)u||
    double isometry = 0;       // ||W(T_m)u|| / ||u||
    double defect = 0;         // ||(H W(T_m) - W(T_m) H0) u||
    LatticeState last;         // W(T_m)u
};

WaveOpReport wave_operator_estimate(const EvolutionEngine& e, const Modifier& J,
                                    const LatticeState& u,
                                    const std::vector<double>& Ts);

// the same protocol with J = identity, for short-range-only potentials;
// the defect reduces to ||V e^{-iT H0} u||
WaveOpReport wave_operator_plain(const EvolutionEngine& e, const LatticeState& u,
                                 const std::vector<double>& Ts);

// backward direction: Omega(T)u = e^{iTH0} J^* e^{-iTH} u on states prepared
// with the interacting filter; convergence of this family is the desk-scale
// stand-in for asymptotic completeness
WaveOpReport inverse_wave_estimate(const EvolutionEngine& e, const Modifier& J,
                                   const LatticeState& u,
                                   const std::vector<double>& Ts);

// positivity data for the sandwiched commutator psi i[H,A] psi on the window
struct MourreReport {
    double cstar = 0;        // min of 2|grad lambda|^2 over {psi > 1e-6}
    std::vector<double> low; // lowest eigenvalues of the perturbed form
};

// free part: nodewise minimization over the window preimage, sharpened by
// level-set points refined at both window edges.  When a small eigen-method
// engine is supplied, also assembles psi(H) i[H,A] psi(H) densely and
// reports its lowest eigenvalues (the compact error term makes these
// informative, not a bound).
MourreReport mourre_check(const BandData& bands, const BandChart& chart, double a,
                          double b, const std::function<double(double)>& psi,
                          const EvolutionEngine* small_box = nullptr, int nlow = 6);

// sum over directions j of || <x>^{-1/2} (v_j(D) - <x>^{-2} x_j <x, v(D)>)
// chi(lambda_k) P_k (D) u ||^2, the transverse-derivative mass of one band
double radiation_defect(const FourierTransform& ft, const BandData& bands, int band,
                        const std::function<double(double)>& chi,
                        const LatticeState& u);

// running integral of the radiation defect along the interacting evolution
struct RadiationReport {
    std::vector<double> ts;
    std::vector<double> vals;
    double first = 0;  // integral over [T/4, T/2]
    double second = 0; // integral over [T/2, T]
    double ratio = 0;  // second / first, < 1 signals integrability
};

// needs an eigen-method engine: the state is prepared with the interacting
// filter and stepped in the eigenbasis
RadiationReport radiation_integral(const EvolutionEngine& e,
                                   const std::function<double(double)>& psi,
                                   const std::function<double(double)>& chi,
                                   int band, const LatticeState& u0, double T,
                                   double dt);

// weighted resolvent norms || <x>^{-s} (H - lambda - i eps)^{-1} <x>^{-s} ||
struct LapPoint {
    double lambda = 0;
    double eps = 0;
    double norm = 0;
};

struct LapReport {
    std::vector<LapPoint> table;
    double flatness = 0; // max/min over the table
    std::vector<double> skipped; // lambda values dropped by the point-spectrum guard
};

// sparse factorization of H - z and its adjoint, power iteration on the
// weighted resolvent; eps must stay above 10/L, and lambda values within
// 0.02 of a supplied point-spectrum list are skipped
LapReport lap_scan(const HoppingKernel& k, const Box& box,
                   const Eigen::VectorXd& vdiag, const std::vector<double>& lams,
                   const std::vector<double>& epss, double s, int iters = 50,
                   const std::vector<double>& pp = {});

// same quantity for V = 0 through the explicit resolvent multiplier
// 1 / (lambda_k(xi) - lambda - i eps); cross-checks the solver route
double lap_free_point(const HoppingKernel& k, const Box& box, double lambda,
                      double eps, double s, int iters = 50);

} // namespace latscat
