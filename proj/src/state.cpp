#include "latscat/state.hpp"

#include <fstream>
#include <stdexcept>

namespace latscat {

double LatticeState::boundary_mass() const {
    const int cut = box.L - box.L / 10;
    double outer = 0, total = 0;
    const std::int64_t S = box.nodes();
    for (std::int64_t s = 0; s < S; ++s) {
        IVec x = box.site(s);
        int m = 0;
        for (int j = 0; j < box.d; ++j) m = std::max(m, std::abs(x[j]));
        double p = 0;
        for (int c = 0; c < n; ++c) p += std::norm(a[c * S + s]);
        total += p;
        if (m > cut) outer += p;
    }
    return total > 0 ? outer / total : 0.0;
}

void LatticeState::save(const std::string& path) const {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    std::int32_t hdr[4] = {std::int32_t(box.d), std::int32_t(n), std::int32_t(box.L), 0};
    f.write(reinterpret_cast<const char*>(hdr), sizeof(hdr));
    f.write(reinterpret_cast<const char*>(a.data()),
            std::streamsize(sizeof(cplx) * a.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

LatticeState LatticeState::load(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    std::int32_t hdr[4];
    f.read(reinterpret_cast<char*>(hdr), sizeof(hdr));
    if (!f || hdr[0] < 1 || hdr[0] > 3 || hdr[1] < 1 || hdr[2] < 0)
        throw std::runtime_error("bad state header in " + path);
    LatticeState u(Box{int(hdr[0]), int(hdr[2])}, int(hdr[1]));
    f.read(reinterpret_cast<char*>(u.a.data()), std::streamsize(sizeof(cplx) * u.a.size()));
    if (!f) throw std::runtime_error("truncated state file " + path);
    return u;
}

LatticeState gaussian_packet(const Box& box, int n, const RVec& x0, const RVec& xi0,
                             double sigma, int component) {
    LatticeState u(box, n);
    const std::int64_t S = box.nodes();
    for (std::int64_t s = 0; s < S; ++s) {
        IVec x = box.site(s);
        double q = 0, ph = 0;
        for (int j = 0; j < box.d; ++j) {
            double dx = x[j] - x0[j];
            q += dx * dx;
            ph += x[j] * xi0[j];
        }
        u.a[component * S + s] =
            std::exp(-q / (4.0 * sigma * sigma)) * std::exp(cplx(0, ph));
    }
    return u;
}

LatticeState random_state(const Box& box, int n, int radius, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    LatticeState u(box, n);
    const std::int64_t S = box.nodes();
    for (int c = 0; c < n; ++c)
        for (std::int64_t s = 0; s < S; ++s) {
            IVec x = box.site(s);
            bool in = true;
            for (int j = 0; j < box.d; ++j) in = in && std::abs(x[j]) <= radius;
            if (in) u.a[c * S + s] = cplx(nd(rng), nd(rng));
        }
    return u;
}

}  // namespace latscat
