#pragma once

#include "latscat/fourier.hpp"
#include "latscat/lattice.hpp"

namespace latscat {

// exact (off-grid) access to the band functions of a kernel
class BandChart {
  public:
    explicit BandChart(HoppingKernel k) : k_(std::move(k)) {}

    const HoppingKernel& kernel() const { return k_; }
    int nbands() const { return k_.n; }
    int dim() const { return k_.d; }

    Eigen::VectorXd lambdas(const RVec& xi) const;
    double lambda(int band, const RVec& xi) const { return lambdas(xi)[band]; }
    // gap from band to its nearest neighbor band at xi
    double cluster_gap(int band, const RVec& xi) const;
    bool degenerate(int band, const RVec& xi, double tol = 1e-9) const;

    // dlambda/dxi via first-order perturbation on the eigencluster; exact
    // for simple bands and equal to the common cluster velocity otherwise
    Eigen::VectorXd velocity(int band, const RVec& xi) const;
    // spectral projector of the eigencluster containing the band
    Eigen::MatrixXcd projector(int band, const RVec& xi, double ctol = 1e-9) const;
    // second derivative matrix of a simple band (throws when degenerate)
    Eigen::MatrixXd hessian(int band, const RVec& xi) const;

  private:
    HoppingKernel k_;
};

// eigendata tabulated over a momentum grid
struct BandData {
    TorusGrid grid;
    int n = 1;
    Eigen::VectorXd lam;           // [node * n + band]
    Eigen::VectorXd vel;           // [(node * n + band) * d + j]
    std::vector<Eigen::MatrixXcd> proj;
    std::vector<std::uint8_t> deg; // cluster multiplicity > 1 at tol 1e-6

    double lambda(std::int64_t s, int k) const { return lam[s * n + k]; }
    double velocity(std::int64_t s, int k, int j) const {
        return vel[(s * n + k) * grid.d + j];
    }
    double speed(std::int64_t s, int k) const {
        double q = 0;
        for (int j = 0; j < grid.d; ++j) q += velocity(s, k, j) * velocity(s, k, j);
        return std::sqrt(q);
    }
};

BandData compute_bands(const HoppingKernel& k, const TorusGrid& g);

struct ThresholdOptions {
    double newton_tol = 1e-8;   // |grad lambda| at an accepted critical point
    double crossing_gap = 1e-6; // accepted band gap at a touching point
    double dedupe = 1e-4;       // energies closer than this merge
};

// critical values and band-touching energies, sorted and deduplicated
std::vector<double> detect_thresholds(const BandData& bands, const BandChart& chart,
                                      const ThresholdOptions& opt = {});

struct FermiPoint {
    RVec xi{0, 0, 0};
    int band = 0;
    double speed = 0;
};

// level-set points of the bands at energy E, refined from grid edges by
// the secant method
std::vector<FermiPoint> fermi_surface(const BandData& bands, const BandChart& chart,
                                      double E);

struct EnergyWindow {
    double a = 0, b = 1;
    double margin = 0; // distance from [a,b] to the nearest threshold
    double v_min = 0;  // slowest group speed over the window preimage
};

// checks [a,b] against the thresholds and measures margin and v_min;
// throws std::invalid_argument when a threshold lands inside [a,b]
EnergyWindow window_margin(const BandData& bands, const BandChart& chart, double a,
                           double b);

// multiplier sum_k psi(lambda_k(xi)) P_k(xi) on the band grid
MultiplierField spectral_filter(const BandData& bands,
                                const std::function<double(double)>& psi);

}  // namespace latscat
