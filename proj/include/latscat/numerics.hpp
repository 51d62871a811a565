#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace latscat {

using cplx = std::complex<double>;
inline constexpr double PI = 3.14159265358979323846;

// smooth step: 0 for t<=0, 1 for t>=1, C^inf in between
double smooth_step(double t);

// partition pair on [-1,1]: sp(th)^2 + sm(th)^2 == 1 exactly,
// sp == 1 for th >= 1/2, sp == 0 for th <= -1/2, sm mirrored.
std::pair<double, double> sigma_pair(double theta);

// radial cutoff vanishing on |x| <= R, equal to 1 for |x| >= 2R
double radial_cutoff(double r, double R);

// scalar windows of the energy variable
struct ScalarWindow {
    enum Kind { Bump, Plateau, Sharp } kind = Bump;
    double a = 0, b = 1;
    double margin = 0;  // plateau only: support is (a - margin, b + margin)

    double operator()(double lam) const;
};

ScalarWindow bump_window(double a, double b);
ScalarWindow plateau_window(double a, double b, double margin);
ScalarWindow sharp_window(double a, double b);

// least-squares slope of log|y| against log x, ignoring y <= floor
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y,
                    double floor = 1e-300);

double trapezoid(const std::vector<double>& y, double dx);

// Bessel J_0..J_kmax by downward (Miller) recurrence
std::vector<double> bessel_j_array(double x, int kmax);

// Nelder-Mead on R^dim, used for refining band crossings off the grid
Eigen::VectorXd nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                            Eigen::VectorXd start, double scale, int max_eval,
                            double tol);

// largest singular value of A from 50 rounds of power iteration on A*A,
// deterministic start drawn from the given seed
double power_opnorm(const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply,
                    const std::function<Eigen::VectorXcd(const Eigen::VectorXcd&)>& apply_adj,
                    Eigen::Index dim, std::uint64_t seed, int iters = 50);

// per-experiment RNG stream: base seed combined with a label hash
std::uint64_t derive_seed(std::uint64_t base, const std::string& label);

}  // namespace latscat
