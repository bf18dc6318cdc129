#pragma once

#include <cmath>
#include <functional>

#include "dmca/params.hpp"
#include "dmca/rng.hpp"
#include "dmca/tensor.hpp"

namespace dmca::tg {

struct AdamConfig {
    real lr = real(1e-4);
    real beta1 = real(0.9);
    real beta2 = real(0.999);
    real eps = real(1e-8);
};

/// Bias-corrected adaptive-moment state, one slot pair per parameter tensor.
struct AdamState {
    std::vector<std::vector<real>> m, v;
    long step = 0;

    void init(const ParamStore& store) {
        m.clear();
        v.clear();
        for (const auto& [_, t] : store.items()) {
            m.emplace_back(t.size(), real(0));
            v.emplace_back(t.size(), real(0));
        }
        step = 0;
    }
};

/// Apply one Adam update from the gradients accumulated in `store` and zero
/// them. Parameters without gradients are left unchanged.
inline void adam_step(ParamStore& store, AdamState& state, const AdamConfig& cfg) {
    if (state.m.size() != store.size())
        throw std::invalid_argument("adam_step: state does not match parameter store");
    ++state.step;
    real bc1 = real(1) - std::pow(cfg.beta1, static_cast<real>(state.step));
    real bc2 = real(1) - std::pow(cfg.beta2, static_cast<real>(state.step));
    for (std::size_t i = 0; i < store.size(); ++i) {
        Tensor& t = store.items()[i].second;
        if (!t.has_grad()) continue;
        if (state.m[i].size() != t.size())
            throw std::invalid_argument("adam_step: shape mismatch at '" +
                                        store.items()[i].first + "'");
        const auto& g = t.grad_ref();
        auto& m = state.m[i];
        auto& v = state.v[i];
        real* p = t.data();
        for (std::size_t j = 0; j < t.size(); ++j) {
            m[j] = cfg.beta1 * m[j] + (real(1) - cfg.beta1) * g[j];
            v[j] = cfg.beta2 * v[j] + (real(1) - cfg.beta2) * g[j] * g[j];
            real mhat = m[j] / bc1;
            real vhat = v[j] / bc2;
            p[j] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
        t.zero_grad();
    }
}

/// Global L2 norm of all accumulated gradients.
inline double grad_norm(const ParamStore& store) {
    double s = 0;
    for (const auto& [_, t] : store.items()) {
        if (!t.has_grad()) continue;
        for (real g : t.grad_ref()) s += static_cast<double>(g) * static_cast<double>(g);
    }
    return std::sqrt(s);
}

/// Scale all gradients so the global norm does not exceed max_norm.
inline void clip_grad_norm(ParamStore& store, double max_norm) {
    double n = grad_norm(store);
    if (n <= max_norm || n == 0.0) return;
    real f = static_cast<real>(max_norm / n);
    for (auto& [_, t] : store.items()) {
        if (!t.has_grad()) continue;
        for (real& g : t.grad()) g *= f;
    }
}

/// Compare analytic gradients of `f` against central finite differences
/// (f(p+eps) - f(p-eps)) / 2eps on a seeded sample of coordinates per tensor.
/// `f` must be deterministic and build the same scalar loss with or without a
/// tape. Returns the maximum relative error over the checked coordinates.
inline double grad_check(const std::function<Tensor(Tape*)>& f, ParamStore& params,
                         double eps = 1e-5, std::size_t samples_per_tensor = 8,
                         Rng rng = Rng(0)) {
    params.zero_grads();
    Tape tape;
    Tensor loss = f(&tape);
    if (loss.size() != 1) throw std::invalid_argument("grad_check: loss must be scalar");
    tape.backward(loss);

    double worst = 0.0;
    for (auto& [name, t] : params.items()) {
        std::size_t n = t.size();
        if (n == 0) continue;
        std::size_t k = std::min(n, samples_per_tensor);
        for (std::size_t s = 0; s < k; ++s) {
            std::size_t idx = static_cast<std::size_t>(rng.uniform_int(n));
            real saved = t.data()[idx];
            t.data()[idx] = saved + static_cast<real>(eps);
            double fp = static_cast<double>(f(nullptr).item());
            t.data()[idx] = saved - static_cast<real>(eps);
            double fm = static_cast<double>(f(nullptr).item());
            t.data()[idx] = saved;
            double numeric = (fp - fm) / (2.0 * eps);
            double analytic = t.has_grad() ? static_cast<double>(t.grad_ref()[idx]) : 0.0;
            double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-4});
            worst = std::max(worst, std::abs(numeric - analytic) / denom);
        }
    }
    return worst;
}

} // namespace dmca::tg
