#include "latscat/fourier.hpp"

#include <fftw3.h>

#include <mutex>
#include <stdexcept>

namespace latscat {

void MultiplierField::apply_inplace(Eigen::VectorXcd& spec) const {
    const std::int64_t S = grid.nodes();
    if (n == 1) {
        if (spec.size() % S != 0) throw std::runtime_error("multiplier size mismatch");
        for (std::int64_t c = 0; c < spec.size() / S; ++c)
            spec.segment(c * S, S).array() *= diag.array();
        return;
    }
    if (spec.size() != S * n) throw std::runtime_error("multiplier size mismatch");
    Eigen::VectorXcd v(n);
    for (std::int64_t s = 0; s < S; ++s) {
        for (int c = 0; c < n; ++c) v[c] = spec[c * S + s];
        v = blocks[s] * v;
        for (int c = 0; c < n; ++c) spec[c * S + s] = v[c];
    }
}

MultiplierField scalar_field(const TorusGrid& g,
                             const std::function<cplx(const RVec&)>& f) {
    MultiplierField m;
    m.grid = g;
    m.n = 1;
    m.diag.resize(g.nodes());
    for (std::int64_t s = 0; s < g.nodes(); ++s) m.diag[s] = f(g.xi(s));
    return m;
}

static std::mutex g_plan_mutex;  // FFTW planning is not thread safe

struct FourierTransform::Impl {
    fftw_complex* buf = nullptr;
    fftw_plan fwd = nullptr, bwd = nullptr;
    Eigen::VectorXcd tw;     // per-dim twiddle, same length each dim
    std::vector<int> parity; // (-1)^j for j = 0..N-1
};

FourierTransform::FourierTransform(const Box& box, int n)
    : box_(box), grid_(dual_grid(box)), n_(n), impl_(new Impl) {
    const int N = box.side();
    const std::int64_t S = box.nodes();
    impl_->buf = fftw_alloc_complex(size_t(S));
    if (!impl_->buf) throw std::bad_alloc();
    std::vector<int> dims(box.d, N);
    {
        std::lock_guard<std::mutex> lock(g_plan_mutex);
        impl_->fwd = fftw_plan_dft(box.d, dims.data(), impl_->buf, impl_->buf,
                                   FFTW_FORWARD, FFTW_ESTIMATE);
        impl_->bwd = fftw_plan_dft(box.d, dims.data(), impl_->buf, impl_->buf,
                                   FFTW_BACKWARD, FFTW_ESTIMATE);
    }
    if (!impl_->fwd || !impl_->bwd) throw std::runtime_error("fftw plan failed");
    impl_->tw.resize(N);
    const int L = box.L;
    for (int m = 0; m < N; ++m)
        impl_->tw[m] = std::exp(cplx(0, 2.0 * PI * L * m / N)) * std::exp(cplx(0, -PI * L));
    impl_->parity.resize(N);
    for (int j = 0; j < N; ++j) impl_->parity[j] = (j % 2 == 0) ? 1 : -1;
}

FourierTransform::~FourierTransform() {
    std::lock_guard<std::mutex> lock(g_plan_mutex);
    if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
    if (impl_->bwd) fftw_destroy_plan(impl_->bwd);
    if (impl_->buf) fftw_free(impl_->buf);
}

// total twiddle at flat node s and total parity at flat site s
static cplx node_tw(const Eigen::VectorXcd& tw, const IVec& m, int d) {
    cplx t = 1.0;
    for (int j = 0; j < d; ++j) t *= tw[m[j]];
    return t;
}

Eigen::VectorXcd FourierTransform::forward(const Eigen::VectorXcd& u) const {
    const std::int64_t S = box_.nodes();
    if (u.size() != S * n_) throw std::runtime_error("forward: size mismatch");
    const double c2 = std::pow(2.0 * PI, -0.5 * box_.d);
    Eigen::VectorXcd out(u.size());
    auto* buf = reinterpret_cast<cplx*>(impl_->buf);
    for (int c = 0; c < n_; ++c) {
        for (std::int64_t s = 0; s < S; ++s) {
            IVec j = box_.site(s);
            int p = 1;
            for (int k = 0; k < box_.d; ++k) p *= impl_->parity[j[k] + box_.L];
            buf[s] = u[c * S + s] * double(p);
        }
        fftw_execute(impl_->fwd);
        for (std::int64_t s = 0; s < S; ++s) {
            IVec m = grid_.multi(s);
            out[c * S + s] = c2 * node_tw(impl_->tw, m, box_.d) * buf[s];
        }
    }
    return out;
}

Eigen::VectorXcd FourierTransform::inverse(const Eigen::VectorXcd& uhat) const {
    const std::int64_t S = box_.nodes();
    if (uhat.size() != S * n_) throw std::runtime_error("inverse: size mismatch");
    const double c2 = std::pow(2.0 * PI, -0.5 * box_.d);
    const double invN = 1.0 / double(S);
    Eigen::VectorXcd out(uhat.size());
    auto* buf = reinterpret_cast<cplx*>(impl_->buf);
    for (int c = 0; c < n_; ++c) {
        for (std::int64_t s = 0; s < S; ++s) {
            IVec m = grid_.multi(s);
            buf[s] = uhat[c * S + s] / (node_tw(impl_->tw, m, box_.d) * c2);
        }
        fftw_execute(impl_->bwd);
        for (std::int64_t s = 0; s < S; ++s) {
            IVec j = box_.site(s);
            int p = 1;
            for (int k = 0; k < box_.d; ++k) p *= impl_->parity[j[k] + box_.L];
            out[c * S + s] = buf[s] * double(p) * invN;
        }
    }
    return out;
}

LatticeState FourierTransform::forward_state(const LatticeState& u) const {
    LatticeState v = u;
    v.a = forward(u.a);
    return v;
}

LatticeState FourierTransform::inverse_state(const LatticeState& uhat) const {
    LatticeState v = uhat;
    v.a = inverse(uhat.a);
    return v;
}

Eigen::VectorXcd FourierTransform::multiply(const MultiplierField& m,
                                            const Eigen::VectorXcd& u) const {
    Eigen::VectorXcd spec = forward(u);
    m.apply_inplace(spec);
    return inverse(spec);
}

}  // namespace latscat
