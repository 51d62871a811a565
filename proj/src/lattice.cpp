#include "latscat/lattice.hpp"

#include <json.hpp>

#include <stdexcept>

namespace latscat {

using json = nlohmann::json;

int HoppingKernel::support_radius() const {
    int r = 0;
    for (auto& [z, m] : terms)
        for (int j = 0; j < d; ++j) r = std::max(r, std::abs(z[j]));
    return r;
}

Eigen::MatrixXcd HoppingKernel::symbol_at(const RVec& xi) const {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (auto& [z, m] : terms) {
        double ph = 0;
        for (int j = 0; j < d; ++j) ph += z[j] * xi[j];
        h += std::exp(cplx(0, -ph)) * m;
    }
    return h;
}

Eigen::MatrixXcd HoppingKernel::dsymbol_at(const RVec& xi, int j) const {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (auto& [z, m] : terms) {
        double ph = 0;
        for (int l = 0; l < d; ++l) ph += z[l] * xi[l];
        h += cplx(0, -double(z[j])) * std::exp(cplx(0, -ph)) * m;
    }
    return h;
}

Eigen::MatrixXcd HoppingKernel::d2symbol_at(const RVec& xi, int j, int l) const {
    Eigen::MatrixXcd h = Eigen::MatrixXcd::Zero(n, n);
    for (auto& [z, m] : terms) {
        double ph = 0;
        for (int q = 0; q < d; ++q) ph += z[q] * xi[q];
        h += cplx(-double(z[j]) * z[l], 0) * std::exp(cplx(0, -ph)) * m;
    }
    return h;
}

double HoppingKernel::symbol_bound() const {
    double b = 0;
    for (auto& [z, m] : terms) b += m.operatorNorm();
    return b;
}

void validate_selfadjoint(const HoppingKernel& k) {
    if (k.d < 1 || k.d > 3) throw std::invalid_argument("kernel dimension must be 1..3");
    if (k.n < 1) throw std::invalid_argument("kernel needs n >= 1");
    for (auto& [z, m] : k.terms) {
        if (m.rows() != k.n || m.cols() != k.n)
            throw std::invalid_argument("kernel term has wrong matrix size");
        IVec zn{-z[0], -z[1], -z[2]};
        Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(k.n, k.n);
        for (auto& [z2, m2] : k.terms)
            if (z2 == zn) sum += m2;
        if ((sum.adjoint() - m).cwiseAbs().maxCoeff() > 1e-14)
            throw std::invalid_argument("kernel is not self-adjoint: f(-z)* != f(z)");
    }
}

LatticeState hop_apply(const HoppingKernel& k, const LatticeState& u) {
    if (u.box.d != k.d || u.n != k.n)
        throw std::invalid_argument("hop_apply: kernel/state mismatch");
    const Box& box = u.box;
    const std::int64_t S = box.nodes();
    const int N = box.side();
    LatticeState out(box, k.n);
    for (const auto& [z, f] : k.terms) {
        for (std::int64_t i = 0; i < S; ++i) {
            IVec x = box.site(i);
            IVec y = x;
            for (int j = 0; j < box.d; ++j) {
                y[j] = x[j] - z[j];
                if (y[j] > box.L) y[j] -= N;
                if (y[j] < -box.L) y[j] += N;
            }
            const std::int64_t iy = box.index(y);
            for (int c = 0; c < k.n; ++c) {
                cplx acc(0.0, 0.0);
                for (int cc = 0; cc < k.n; ++cc) acc += f(c, cc) * u.a[cc * S + iy];
                out.a[c * S + i] += acc;
            }
        }
    }
    return out;
}

MultiplierField build_symbol(const HoppingKernel& k, const TorusGrid& g) {
    MultiplierField m;
    m.grid = g;
    m.n = k.n;
    if (k.n == 1) {
        m.diag.resize(g.nodes());
        for (std::int64_t s = 0; s < g.nodes(); ++s) m.diag[s] = k.symbol_at(g.xi(s))(0, 0);
    } else {
        m.blocks.resize(size_t(g.nodes()));
        for (std::int64_t s = 0; s < g.nodes(); ++s) m.blocks[size_t(s)] = k.symbol_at(g.xi(s));
    }
    return m;
}

static Eigen::MatrixXcd unit_entry(int n, int i, int j) {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    m(i, j) = 1.0;
    return m;
}

HoppingKernel preset_kernel(const std::string& name) {
    HoppingKernel k;
    k.name = name;
    auto one = Eigen::MatrixXcd::Ones(1, 1);
    if (name == "square1d") {
        k.d = 1;
        k.terms = {{{1, 0, 0}, one}, {{-1, 0, 0}, one}};
    } else if (name == "square") {
        k.d = 2;
        k.terms = {{{1, 0, 0}, one}, {{-1, 0, 0}, one}, {{0, 1, 0}, one}, {{0, -1, 0}, one}};
    } else if (name == "triangular") {
        // square bonds plus one diagonal of each cell
        k.d = 2;
        k.terms = {{{1, 0, 0}, one},  {{-1, 0, 0}, one}, {{0, 1, 0}, one},
                   {{0, -1, 0}, one}, {{1, 1, 0}, one},  {{-1, -1, 0}, one}};
    } else if (name == "hexagonal") {
        k.d = 2;
        k.n = 2;
        // off-diagonal symbol 1 + e^{-i xi_1} + e^{-i xi_2}
        k.terms = {{{0, 0, 0}, unit_entry(2, 0, 1) + unit_entry(2, 1, 0)},
                   {{1, 0, 0}, unit_entry(2, 0, 1)},
                   {{-1, 0, 0}, unit_entry(2, 1, 0)},
                   {{0, 1, 0}, unit_entry(2, 0, 1)},
                   {{0, -1, 0}, unit_entry(2, 1, 0)}};
    } else if (name == "kagome") {
        k.d = 2;
        k.n = 3;
        // h12 = 1 + e^{-i xi_1}, h13 = 1 + e^{-i xi_2}, h23 = 1 + e^{-i(xi_2 - xi_1)}
        Eigen::MatrixXcd c0 = Eigen::MatrixXcd::Zero(3, 3);
        c0(0, 1) = c0(1, 0) = c0(0, 2) = c0(2, 0) = c0(1, 2) = c0(2, 1) = 1.0;
        k.terms = {{{0, 0, 0}, c0},
                   {{1, 0, 0}, unit_entry(3, 0, 1)},
                   {{-1, 0, 0}, unit_entry(3, 1, 0)},
                   {{0, 1, 0}, unit_entry(3, 0, 2)},
                   {{0, -1, 0}, unit_entry(3, 2, 0)},
                   {{-1, 1, 0}, unit_entry(3, 1, 2)},
                   {{1, -1, 0}, unit_entry(3, 2, 1)}};
    } else {
        throw std::invalid_argument("unknown preset lattice: " + name);
    }
    validate_selfadjoint(k);
    return k;
}

std::vector<std::string> preset_names() {
    return {"square1d", "square", "triangular", "hexagonal", "kagome"};
}

HoppingKernel kernel_from_json(const std::string& text) {
    json j = json::parse(text);
    if (j.contains("preset")) return preset_kernel(j.at("preset").get<std::string>());
    HoppingKernel k;
    k.d = j.at("d").get<int>();
    k.n = j.at("n").get<int>();
    k.name = j.value("name", "custom");
    for (auto& t : j.at("terms")) {
        IVec z{0, 0, 0};
        auto zz = t.at("z");
        for (size_t i = 0; i < zz.size() && i < 3; ++i) z[i] = zz[i].get<int>();
        Eigen::MatrixXcd m(k.n, k.n);
        auto rows = t.at("m");
        for (int r = 0; r < k.n; ++r)
            for (int c = 0; c < k.n; ++c) {
                auto e = rows.at(r).at(c);
                m(r, c) = cplx(e.at(0).get<double>(), e.at(1).get<double>());
            }
        k.terms.emplace_back(z, m);
    }
    validate_selfadjoint(k);
    return k;
}

std::string kernel_to_json(const HoppingKernel& k) {
    json j;
    j["d"] = k.d;
    j["n"] = k.n;
    j["name"] = k.name;
    j["terms"] = json::array();
    for (auto& [z, m] : k.terms) {
        json t;
        t["z"] = std::vector<int>(z.begin(), z.begin() + k.d);
        json rows = json::array();
        for (int r = 0; r < k.n; ++r) {
            json row = json::array();
            for (int c = 0; c < k.n; ++c)
                row.push_back({m(r, c).real(), m(r, c).imag()});
            rows.push_back(row);
        }
        t["m"] = rows;
        j["terms"].push_back(t);
    }
    return j.dump(2);
}

double Potential::long_range(double r) const {
    if (!p.radial_table.empty()) {
        // table holds integer radii; callers stay on the lattice here
        size_t k = size_t(std::llround(r));
        if (k >= p.radial_table.size())
            throw std::out_of_range("potential table too short for requested radius");
        return p.radial_table[k];
    }
    return p.c * std::pow(1.0 + r * r, -0.5 * p.rho);
}

static std::uint64_t site_mix(std::uint64_t seed, const IVec& x) {
    std::uint64_t h = seed ^ 0x9e3779b97f4a7c15ull;
    for (int j = 0; j < 3; ++j) {
        h ^= std::uint64_t(std::int64_t(x[j])) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        h *= 0xbf58476d1ce4e5b9ull;
        h ^= h >> 27;
    }
    return h;
}

Eigen::MatrixXcd Potential::short_range(const IVec& x) const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    if (!has_short()) return m;
    double env = p.cs * std::pow(jbracket(norm2(x, d)), -p.rho_s);
    if (p.short_kind == "alternating") {
        int par = 0;
        for (int j = 0; j < d; ++j) par += std::abs(x[j]);
        double v = (par % 2 == 0) ? env : -env;
        for (int c = 0; c < n; ++c) m(c, c) = v;
    } else if (p.short_kind == "random") {
        std::mt19937_64 rng(site_mix(p.seed, x));
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        // entries bounded by env/n so the row-sum bound gives ||V_S|| <= env
        for (int r = 0; r < n; ++r) {
            m(r, r) = u(rng) * env / n;
            for (int c = r + 1; c < n; ++c) {
                cplx v = cplx(u(rng), u(rng)) * (env / (2.0 * n));
                m(r, c) = v;
                m(c, r) = std::conj(v);
            }
        }
    } else {
        throw std::invalid_argument("unknown short-range kind: " + p.short_kind);
    }
    return m;
}

Eigen::MatrixXcd Potential::at(const IVec& x) const {
    Eigen::MatrixXcd m = short_range(x);
    double vl = long_range(x);
    for (int c = 0; c < n; ++c) m(c, c) += vl;
    return m;
}

Eigen::VectorXcd Potential::diagonal(const Box& box) const {
    if (box.d != d) throw std::invalid_argument("potential/box dimension mismatch");
    const std::int64_t S = box.nodes();
    Eigen::VectorXcd out(S * n);
    const bool diag_only = !has_short() || p.short_kind == "alternating";
    if (!diag_only)
        throw std::invalid_argument("diagonal() needs a site-diagonal potential");
    for (std::int64_t s = 0; s < S; ++s) {
        IVec x = box.site(s);
        Eigen::MatrixXcd m = at(x);
        for (int c = 0; c < n; ++c) out[c * S + s] = m(c, c);
    }
    return out;
}

static void ball_sweep(int d, int radius, const std::function<void(const IVec&)>& fn) {
    IVec x{0, 0, 0};
    if (d == 1) {
        for (x[0] = -radius; x[0] <= radius; ++x[0]) fn(x);
        return;
    }
    for (x[0] = -radius; x[0] <= radius; ++x[0])
        for (x[1] = -radius; x[1] <= radius; ++x[1]) {
            if (d == 2) {
                if (x[0] * x[0] + x[1] * x[1] <= radius * radius) fn(x);
            } else {
                for (x[2] = -radius; x[2] <= radius; ++x[2])
                    if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] <= radius * radius) fn(x);
            }
        }
}

Potential build_potential(int d, int n, const PotentialParams& params) {
    if (d < 1 || d > 3) throw std::invalid_argument("potential dimension must be 1..3");
    Potential v;
    v.d = d;
    v.n = n;
    v.p = params;
    if (v.p.rho <= 0 || v.p.rho > 2)
        throw std::invalid_argument("long-range exponent rho must lie in (0, 2]");
    if (v.has_short()) {
        if (v.p.rho_s == 0.0) v.p.rho_s = 1.0 + v.p.rho;
        if (v.p.rho_s < 1.0 + v.p.rho - 1e-12)
            throw std::invalid_argument("short-range decay must be at least 1 + rho");
    }
    if (!v.p.radial_table.empty()) {
        if (d != 1)
            throw std::invalid_argument("tabulated long-range profile is 1d only");
        if (v.p.radial_table.size() < 129)
            throw std::invalid_argument("radial table must cover |x| <= 128");
    }

    if (v.p.c != 0.0 || !v.p.radial_table.empty()) {
        // estimate the difference-decay constant on |x| <= 64 ...
        double c1 = 0.0;
        ball_sweep(d, 64, [&](const IVec& x) {
            for (int j = 0; j < d; ++j) {
                IVec xm = x;
                xm[j] -= 1;
                double diff = std::abs(v.long_range(x) - v.long_range(xm));
                c1 = std::max(c1, diff * std::pow(jbracket(norm2(x, d)), 1.0 + v.p.rho));
            }
        });
        // ... and make sure it keeps holding further out, with 10% slack
        double slack = 1.1 * c1 + 1e-15;
        ball_sweep(d, 128, [&](const IVec& x) {
            for (int j = 0; j < d; ++j) {
                IVec xm = x;
                xm[j] -= 1;
                if (xm[j] < -128) continue;
                double diff = std::abs(v.long_range(x) - v.long_range(xm));
                if (diff > slack * std::pow(jbracket(norm2(x, d)), -1.0 - v.p.rho))
                    throw std::invalid_argument(
                        "long-range part violates the first-difference decay bound");
            }
        });
    }
    if (v.has_short()) {
        ball_sweep(d, 64, [&](const IVec& x) {
            double bound = v.p.cs * std::pow(jbracket(norm2(x, d)), -v.p.rho_s) + 1e-14;
            if (v.short_range(x).operatorNorm() > bound)
                throw std::invalid_argument("short-range part violates its envelope");
        });
    }
    return v;
}

SmoothExtension smooth_extension(const Potential& v) {
    SmoothExtension e;
    if (v.p.radial_table.empty()) {
        e.c = v.p.c;
        e.rho = v.p.rho;
    } else {
        e.table = v.p.radial_table;
        e.rho = v.p.rho;
    }
    return e;
}

// linear interpolation of the even extension of the radial table
static double table_lin(const std::vector<double>& t, double y) {
    y = std::abs(y);
    size_t k = size_t(std::floor(y));
    if (k + 1 >= t.size()) throw std::out_of_range("radial table too short");
    double f = y - double(k);
    return (1.0 - f) * t[k] + f * t[k + 1];
}

double SmoothExtension::eval(double r) const {
    if (table.empty()) return c * std::pow(1.0 + r * r, -0.5 * rho);
    // mollify with a normalized bump of radius 1/2; all derivatives of the
    // bump vanish at the endpoints, so the trapezoid rule converges fast
    const int M = 8192;
    const double h = 1.0 / M;
    double wsum = 0, vsum = 0;
    for (int i = 0; i <= M; ++i) {
        double s = -0.5 + i * h;
        double q = 1.0 - 4.0 * s * s;
        double w = q > 0 ? std::exp(-1.0 / q) : 0.0;
        double trap = (i == 0 || i == M) ? 0.5 : 1.0;
        wsum += trap * w;
        vsum += trap * w * table_lin(table, r - s);
    }
    return vsum / wsum;
}

double SmoothExtension::deriv(double r) const {
    if (table.empty()) {
        double b = 1.0 + r * r;
        return c * (-rho) * r * std::pow(b, -0.5 * rho - 1.0);
    }
    const double h = 1e-4;
    return (eval(r + h) - eval(r - h)) / (2.0 * h);
}

}  // namespace latscat
