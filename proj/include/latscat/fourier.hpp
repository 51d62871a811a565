#pragma once

#include <memory>
#include <vector>

#include "latscat/state.hpp"

namespace latscat {

// node-diagonal operator on the dual grid; scalar entries when n == 1,
// full n x n blocks otherwise
struct MultiplierField {
    TorusGrid grid;
    int n = 1;
    Eigen::VectorXcd diag;                 // n == 1
    std::vector<Eigen::MatrixXcd> blocks;  // n > 1, one per node

    void apply_inplace(Eigen::VectorXcd& spec) const;
    Eigen::VectorXcd apply(Eigen::VectorXcd spec) const {
        apply_inplace(spec);
        return spec;
    }
};

MultiplierField scalar_field(const TorusGrid& g,
                             const std::function<cplx(const RVec&)>& f);

// discrete Fourier transform on a box, normalized so that
//   uhat(xi_m) = (2pi)^{-d/2} sum_x e^{-i x.xi_m} u(x),
// with xi_m = -pi + 2pi m/N.  Parseval holds exactly against the
// quadrature weight (2pi/N)^d.  Each instance owns its FFTW plans and
// scratch buffer; make one instance per thread.
//
// With N odd these frequencies diagonalize the shift with an extra sign
// on wraparound (e^{i N xi_m} = -1), so multiplying by a convolution
// symbol realizes the convolution with antiperiodic boundary wrap.  It
// agrees with any other boundary convention on states that vanish near
// the box edge, which is the regime all the propagation runs stay in.
class FourierTransform {
  public:
    FourierTransform(const Box& box, int n);
    ~FourierTransform();
    FourierTransform(const FourierTransform&) = delete;
    FourierTransform& operator=(const FourierTransform&) = delete;

    const Box& box() const { return box_; }
    const TorusGrid& grid() const { return grid_; }
    int ncomp() const { return n_; }
    double weight() const { return grid_.weight(); }

    Eigen::VectorXcd forward(const Eigen::VectorXcd& u) const;
    Eigen::VectorXcd inverse(const Eigen::VectorXcd& uhat) const;

    LatticeState forward_state(const LatticeState& u) const;
    LatticeState inverse_state(const LatticeState& uhat) const;

    // ||.|| of a spectral vector under the quadrature weight
    double spectral_norm(const Eigen::VectorXcd& spec) const {
        return std::sqrt(weight()) * spec.norm();
    }

    Eigen::VectorXcd multiply(const MultiplierField& m, const Eigen::VectorXcd& u) const;

  private:
    Box box_;
    TorusGrid grid_;
    int n_;
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace latscat
