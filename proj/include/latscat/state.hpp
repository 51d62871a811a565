#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "latscat/numerics.hpp"

namespace latscat {

using IVec = std::array<int, 3>;   // lattice site, entries beyond d are 0
using RVec = std::array<double, 3>;

inline double norm2(const RVec& v, int d) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += v[j] * v[j];
    return std::sqrt(s);
}
inline double norm2(const IVec& v, int d) {
    double s = 0;
    for (int j = 0; j < d; ++j) s += double(v[j]) * v[j];
    return std::sqrt(s);
}
// Japanese bracket <x> = sqrt(1+|x|^2)
inline double jbracket(double r) { return std::sqrt(1.0 + r * r); }

// finite box [-L,L]^d, side N = 2L+1, row-major flat indexing
struct Box {
    int d = 1;
    int L = 0;

    int side() const { return 2 * L + 1; }
    std::int64_t nodes() const {
        std::int64_t s = 1;
        for (int j = 0; j < d; ++j) s *= side();
        return s;
    }
    std::int64_t index(const IVec& x) const {
        std::int64_t f = 0;
        for (int j = 0; j < d; ++j) f = f * side() + (x[j] + L);
        return f;
    }
    IVec site(std::int64_t f) const {
        IVec x{0, 0, 0};
        for (int j = d - 1; j >= 0; --j) {
            x[j] = int(f % side()) - L;
            f /= side();
        }
        return x;
    }
    bool contains(const IVec& x) const {
        for (int j = 0; j < d; ++j)
            if (x[j] < -L || x[j] > L) return false;
        return true;
    }
};

// uniform momentum grid on [-pi,pi)^d, res_j nodes in direction j
struct TorusGrid {
    int d = 1;
    std::array<int, 3> res{1, 1, 1};

    std::int64_t nodes() const {
        std::int64_t s = 1;
        for (int j = 0; j < d; ++j) s *= res[j];
        return s;
    }
    std::int64_t index(const IVec& m) const {
        std::int64_t f = 0;
        for (int j = 0; j < d; ++j) f = f * res[j] + m[j];
        return f;
    }
    IVec multi(std::int64_t f) const {
        IVec m{0, 0, 0};
        for (int j = d - 1; j >= 0; --j) {
            m[j] = int(f % res[j]);
            f /= res[j];
        }
        return m;
    }
    RVec xi(const IVec& m) const {
        RVec v{0, 0, 0};
        for (int j = 0; j < d; ++j) v[j] = -PI + 2.0 * PI * m[j] / res[j];
        return v;
    }
    RVec xi(std::int64_t f) const { return xi(multi(f)); }
    // quadrature weight for one node
    double weight() const {
        double w = 1;
        for (int j = 0; j < d; ++j) w *= 2.0 * PI / res[j];
        return w;
    }
};

inline TorusGrid uniform_grid(int d, int res) {
    TorusGrid g;
    g.d = d;
    g.res = {res, res, res};
    return g;
}
// momentum grid matched to a box (res = 2L+1, odd)
inline TorusGrid dual_grid(const Box& b) { return uniform_grid(b.d, b.side()); }

// vector-valued wave function on a box; layout is component-major:
// a[c * box.nodes() + site]
struct LatticeState {
    Box box;
    int n = 1;
    Eigen::VectorXcd a;

    LatticeState() = default;
    LatticeState(const Box& b, int ncomp)
        : box(b), n(ncomp), a(Eigen::VectorXcd::Zero(b.nodes() * ncomp)) {}

    cplx& at(int c, const IVec& x) { return a[c * box.nodes() + box.index(x)]; }
    cplx at(int c, const IVec& x) const { return a[c * box.nodes() + box.index(x)]; }
    double norm() const { return a.norm(); }

    // fraction of mass in the outer 10% shell, watched during propagation
    double boundary_mass() const;

    void save(const std::string& path) const;
    static LatticeState load(const std::string& path);
};

// Gaussian wave packet centered at x0 with momentum xi0 and width sigma,
// not normalized
LatticeState gaussian_packet(const Box& box, int n, const RVec& x0, const RVec& xi0,
                             double sigma, int component = 0);

// random complex entries supported on |x| <= radius (all components)
LatticeState random_state(const Box& box, int n, int radius, std::mt19937_64& rng);

}  // namespace latscat
