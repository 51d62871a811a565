#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "latscat/bands.hpp"

namespace latscat {

// eigendecomposition of the truncated Hamiltonian; the real storage is
// used when the kernel and potential are real, halving memory
struct SpectralData {
    Eigen::VectorXd eval;
    Eigen::MatrixXd evec_r;
    Eigen::MatrixXcd evec_c;

    bool empty() const { return eval.size() == 0; }
    bool real() const { return evec_r.size() > 0; }
};

// propagator pair for H = H0 + V on a box.  The free half is the exact
// dispersion multiplier e^{-it h(xi)} evaluated bandwise on the dual
// grid.  The full half is either the exact small-box eigendecomposition
// ("eigen") or a Chebyshev expansion with the spectral interval from a
// Gershgorin bound ("chebyshev").  Engines are immutable after build;
// stepping is pure.
struct EvolutionEngine {
    HoppingKernel kernel;
    Box box;
    int n = 1;
    Eigen::VectorXd vdiag;        // diagonal of V over sites; empty means V = 0
    std::string method = "eigen";
    double alarm = 1e-6;          // boundary-mass fraction of ||u||^2
    double emin = 0, emax = 0;    // spectral interval bound for scaling

    BandData bands;
    std::unique_ptr<FourierTransform> ft;
    SpectralData spec;            // filled on the eigen path

    std::int64_t dim() const { return std::int64_t(n) * box.nodes(); }
};

// method "auto" takes the exact path when n |box| <= eigen_cap and the
// polynomial expansion otherwise
EvolutionEngine build_engine(const HoppingKernel& kernel, const Box& box,
                             const Eigen::VectorXd& vdiag,
                             const std::string& method = "auto",
                             std::int64_t eigen_cap = 8192);

// e^{-itH0} u and e^{-itH} u; negative t gives the inverse propagator
LatticeState evolve_free(const EvolutionEngine& e, const LatticeState& u, double t);
LatticeState evolve_full(const EvolutionEngine& e, const LatticeState& u, double t);

// H u and H0 u by direct application (hop plus diagonal)
LatticeState hamiltonian_apply(const EvolutionEngine& e, const LatticeState& u);

// psi(H0) through the band decomposition; psi(H) through the small-box
// spectrum (throws without one)
LatticeState filter_free(const EvolutionEngine& e,
                         const std::function<double(double)>& psi,
                         const LatticeState& u);
LatticeState filter_full(const EvolutionEngine& e,
                         const std::function<double(double)>& psi,
                         const LatticeState& u);

// eigenvalues of H inside (a, b), for point-spectrum guards
std::vector<double> spectrum_in(const EvolutionEngine& e, double a, double b);

// throws "boundary alarm" when the outer shell carries more than the
// alarm fraction of the state
void require_clean(const EvolutionEngine& e, const LatticeState& u);

}  // namespace latscat
