#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "latscat/bands.hpp"

namespace latscat {

// outgoing (+1) or incoming (-1) cone {x : sign*cos(x, grad lambda) > cos_floor,
// |x| > R}; R == 0 requests automatic selection (1d tables only)
struct ConeRegion {
    int sign = +1;
    double R = 0.0;
    double cos_floor = -0.75;
};

struct PhaseOptions {
    double tol = 1e-8;
    int max_iter = 40;
    double fine_step = 0.25;  // 1d half-line resolution
    double ray_step = 0.25;   // quadrature step along rays (d == 2)
    int patch_half = 48;      // d == 2 patch covers |x_i| <= patch_half
    bool require_converged = true;
};

// one momentum column of a 1d phase table. The amplitude of the modifier
// lives on the half-line x = side*t, t >= 0; u and g are sampled there at
// integer t and already carry the sign of x, i.e. u[t] = u(side*t, xi) and
// g[t] = du/dx at x = side*t (side-independent for radial potentials).
struct PhaseColumn {
    double xi = 0;
    double v = 0;  // group velocity at xi
    int side = +1;
    Eigen::VectorXd u;
    Eigen::VectorXd g;
    double residual = 0;  // eikonal sup-residual at the last sweep (fine grid)
    int sweeps = 0;
    std::vector<double> history;  // sup-residual after each sweep
    // cone_sweeps[r] = first sweep with sup_{t>r} residual < tol (0 if never)
    std::vector<int> cone_sweeps;
};

// gradient of the phase correction on a square patch (d == 2), one momentum
struct PhasePatch {
    RVec xi{};
    RVec v{};
    int half = 48;  // patch covers |x_i| <= half
    Eigen::MatrixXd g1, g2;
    double residual = 0;  // interior eikonal residual
    int sweeps = 0;
};

struct PhaseFunction {
    int d = 1;
    int sign = +1;
    double R = 0;
    std::map<std::int64_t, PhaseColumn> columns;  // key: momentum grid node
    std::vector<PhasePatch> patches;

    // u/g at signed integer x; zero off the carried half-line
    double u_at(std::int64_t m, std::int64_t x) const;
    double g_at(std::int64_t m, std::int64_t x) const;
};

struct PhaseReport {
    double residual = 0;     // max over columns of the converged sup-residual
    double hessian_dev = 0;  // max |d2 phi/dx dxi - 1| over the tables
    double u_exponent = 0;   // log-log slope of |u| over t in [20, 320)
    double g_exponent = 0;   // same for |du/dx| (target -rho)
    int sweeps = 0;
    double R = 0;
    std::int64_t worst_column = 0;
};

// 1d phase tables, one column per requested momentum node of `grid`.
// Pointwise Picard for g = du/dx on a fine half-line (the transport ray
// integral collapses to an algebraic fixed point in one dimension), then
// a prefix trapezoid for u. Anchor: u(0) = 0 for rho <= 1, u(+inf) = 0
// (closed-form power tail) for rho > 1. Nodes with |v| below 1e-12 are
// skipped. Throws std::runtime_error on non-convergence when requested.
PhaseFunction solve_phase(const HoppingKernel& kernel, int band,
                          const SmoothExtension& vt, const ConeRegion& region,
                          std::int64_t L, const std::vector<std::int64_t>& nodes,
                          const TorusGrid& grid, const PhaseOptions& opt = {});

// d == 2: Picard sweeps in gradient form on a Cartesian patch,
//   g <- int_0^inf [grad Vt + Dg^T (grad lambda(xi+g) - v)](x + s*sign*v) ds,
// trapezoid inside the patch plus a geometric-grid tail of grad Vt beyond it.
// The region must carry an explicit R > 0.
PhasePatch solve_phase_patch(const HoppingKernel& kernel, int band,
                             const SmoothExtension& vt, const ConeRegion& region,
                             const RVec& xi, const PhaseOptions& opt = {});

// single-point evaluation of g = du/dx by the same fixed point; exact to
// `tol` rather than interpolated from a table
double phase_gradient_at(const HoppingKernel& kernel, int band,
                         const SmoothExtension& vt, double xi, double x,
                         double tol = 1e-12, int max_iter = 60);

// re-checks the eikonal identity on the stored tables, the mixed-Hessian
// bound via the exact ratio v(xi)/v(xi+g), and the radial decay exponents
// of u and g at a representative (first-quartile) column
PhaseReport verify_phase(const HoppingKernel& kernel, int band,
                         const SmoothExtension& vt, const PhaseFunction& phase);

struct FlowSample {
    double t = 0;
    RVec x{};
    RVec xi{};
    double energy = 0;
};

// fixed-step leapfrog (kick-drift-kick) for dx/dt = grad lambda(xi),
// dxi/dt = -grad Vt(x); xi is wrapped to [-pi, pi). Throws when a
// multi-band kernel reaches a point with cluster gap below 1e-9.
std::vector<FlowSample> hamilton_flow(const HoppingKernel& kernel, int band,
                                      const SmoothExtension& vt, const RVec& x0,
                                      const RVec& xi0, double T, double step);

// CSV rows "xi,x,u,du,residual" for every stored integer sample
void phase_csv(const PhaseFunction& phase, std::ostream& os);

}  // namespace latscat
