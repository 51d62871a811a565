#pragma once

#include <optional>
#include <string>
#include <vector>

#include "latscat/fourier.hpp"
#include "latscat/state.hpp"

namespace latscat {

// finitely supported matrix-valued hopping kernel f : Z^d -> C^{n x n}.
// The operator acts by (H0 u)(x) = sum_z f(z) u(x - z); its symbol is
// h(xi) = sum_z e^{-i z.xi} f(z).
struct HoppingKernel {
    int d = 1;
    int n = 1;
    std::string name;
    std::vector<std::pair<IVec, Eigen::MatrixXcd>> terms;

    int support_radius() const;
    Eigen::MatrixXcd symbol_at(const RVec& xi) const;
    // d/dxi_j of the symbol
    Eigen::MatrixXcd dsymbol_at(const RVec& xi, int j) const;
    Eigen::MatrixXcd d2symbol_at(const RVec& xi, int j, int l) const;
    // crude uniform bound max_xi ||h(xi)|| <= sum ||f(z)||
    double symbol_bound() const;
};

// throws std::invalid_argument unless conj(f(-z)^T) == f(z) termwise
void validate_selfadjoint(const HoppingKernel& k);

// (H0 u)(x) = sum_z f(z) u(x - z) with periodic wraparound on the box
LatticeState hop_apply(const HoppingKernel& k, const LatticeState& u);

// tabulated symbol on a momentum grid
MultiplierField build_symbol(const HoppingKernel& k, const TorusGrid& g);

HoppingKernel preset_kernel(const std::string& name);
std::vector<std::string> preset_names();

HoppingKernel kernel_from_json(const std::string& text);
std::string kernel_to_json(const HoppingKernel& k);

// potential V = V_L + V_S with V_L(x) = c <x>^{-rho} Id and a short-range
// part bounded by cs <x>^{-rho_s}
struct PotentialParams {
    double c = 0.0;
    double rho = 1.0;
    std::string short_kind = "none";  // none | alternating | random
    double cs = 0.0;
    double rho_s = 0.0;               // defaults to 1 + rho when 0
    std::uint64_t seed = 0;
    // optional radial table replacing the closed form of V_L (d == 1)
    std::vector<double> radial_table;
};

struct Potential {
    int d = 1, n = 1;
    PotentialParams p;

    double long_range(double r) const;
    double long_range(const IVec& x) const { return long_range(norm2(x, d)); }
    Eigen::MatrixXcd short_range(const IVec& x) const;
    Eigen::MatrixXcd at(const IVec& x) const;
    // diagonal of V over a box, component-major, for Hamiltonian assembly
    Eigen::VectorXcd diagonal(const Box& box) const;
    bool has_short() const { return p.short_kind != "none" && p.cs != 0.0; }
};

// validates the decay hypotheses numerically: constants are estimated on
// the ball |x| <= 64 and re-checked on |x| <= 128 with 10% slack
Potential build_potential(int d, int n, const PotentialParams& params);

// smooth radial profile extending the long-range part off the lattice;
// closed-form when V_L is, otherwise a mollified linear interpolant of
// the table (bump of radius 1/2)
struct SmoothExtension {
    double c = 0.0, rho = 1.0;
    std::vector<double> table;  // empty: closed form

    double eval(double r) const;
    double deriv(double r) const;
};

SmoothExtension smooth_extension(const Potential& v);

}  // namespace latscat
