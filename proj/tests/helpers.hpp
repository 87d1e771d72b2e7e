#pragma once

// Shared test utilities: central finite-difference oracles for layer and
// model gradients. Test-only; kept independent of the backward pass it
// checks (forward evaluations only).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "rfadv/nn.hpp"
#include "rfadv/rng.hpp"

namespace rfadv::testing {

struct FdResult {
    double max_rel_err = 0.0;
    long checked = 0;
    long rescaled = 0; // entries that needed a smaller step (ReLU kink in the probe)
};

inline double fd_rel_err(double analytic, double numeric) {
    double m = std::max(std::abs(analytic), std::abs(numeric));
    if (m < 1e-7)
        return std::abs(analytic - numeric) < 1e-9 ? 0.0 : std::abs(analytic - numeric);
    return std::abs(analytic - numeric) / m;
}

inline Tensor random_tensor(std::vector<int> shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor t(std::move(shape));
    for (auto& v : t.data)
        v = rng.uniform(lo, hi);
    return t;
}

// Picks `want` distinct indices from [0, n), or all of them when n <= want.
inline std::vector<std::int64_t> pick_indices(std::int64_t n, long want, Rng& rng) {
    std::vector<std::int64_t> out;
    if (n <= want) {
        for (std::int64_t i = 0; i < n; ++i)
            out.push_back(i);
        return out;
    }
    for (long k = 0; k < want; ++k)
        out.push_back(static_cast<std::int64_t>(rng.uniform_index(static_cast<uint64_t>(n))));
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

// One FD probe of d f / d entry. A central difference across a ReLU kink has
// no classical derivative to estimate, so a mismatch at step h retries at
// h/8 and h/64: the kink leaves the shrinking probe with high probability,
// while a genuine gradient bug fails at every scale.
inline void fd_check_entry(double& slot, double analytic, FdResult& res,
                           const std::function<double(double)>& f_at, double base, double h) {
    double best = 1e300;
    for (int level = 0; level < 3; ++level) {
        double step = h / std::pow(8.0, level);
        slot = base + step;
        double fp = f_at(0.0);
        slot = base - step;
        double fm = f_at(0.0);
        slot = base;
        double err = fd_rel_err(analytic, (fp - fm) / (2.0 * step));
        best = std::min(best, err);
        if (best <= 1e-4) {
            if (level > 0)
                ++res.rescaled;
            break;
        }
    }
    res.max_rel_err = std::max(res.max_rel_err, best);
    ++res.checked;
}

// Checks one layer in isolation through the scalar functional
// f = dot(layer(x), R) with a fixed random projection R.
inline FdResult fd_check_layer(Layer& layer, const Tensor& x, uint64_t seed, double h = 1e-5,
                               long samples_per_tensor = 4000) {
    Rng rng(seed);
    std::unique_ptr<LayerCache> cache;
    Tensor out = layer.forward(x, &cache);
    Tensor proj(out.shape);
    for (auto& v : proj.data)
        v = rng.uniform(0.5, 1.5) * (rng.uniform() < 0.5 ? -1.0 : 1.0);

    Tensor xcopy = x;
    auto scalar = [&](double) {
        Tensor o = layer.forward(xcopy, nullptr);
        double acc = 0.0;
        for (std::int64_t i = 0; i < o.size(); ++i)
            acc += o[i] * proj[i];
        return acc;
    };

    std::vector<Tensor> pgrads;
    for (Tensor* p : layer.params())
        pgrads.emplace_back(p->shape);
    Tensor din = layer.backward(proj, *cache, &pgrads);

    FdResult res;
    for (std::int64_t i : pick_indices(x.size(), samples_per_tensor, rng))
        fd_check_entry(xcopy.data[static_cast<std::size_t>(i)], din[i], res, scalar, x[i], h);

    auto params = layer.params();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor* p = params[pi];
        for (std::int64_t i : pick_indices(p->size(), samples_per_tensor, rng))
            fd_check_entry(p->data[static_cast<std::size_t>(i)], pgrads[pi][i], res, scalar,
                           (*p)[i], h);
    }
    return res;
}

// Checks a full model through cross_entropy(forward(x), label).
inline FdResult fd_check_model(Model& model, const Tensor& x, int label, uint64_t seed,
                               long samples_per_tensor = 30, double h = 1e-5) {
    Rng rng(seed);
    Tensor xcopy = x;
    auto loss_at = [&](double) { return cross_entropy(model.forward(xcopy), label); };

    Model::Gradients g = model.backward(x, label);

    FdResult res;
    for (std::int64_t i : pick_indices(x.size(), 2 * samples_per_tensor, rng))
        fd_check_entry(xcopy.data[static_cast<std::size_t>(i)], g.input[i], res, loss_at, x[i], h);

    for (std::size_t li = 0; li < model.layers().size(); ++li) {
        auto params = model.layers()[li]->params();
        for (std::size_t pi = 0; pi < params.size(); ++pi) {
            Tensor* p = params[pi];
            for (std::int64_t i : pick_indices(p->size(), samples_per_tensor, rng))
                fd_check_entry(p->data[static_cast<std::size_t>(i)], g.per_layer[li][pi][i], res,
                               loss_at, (*p)[i], h);
        }
    }
    return res;
}

} // namespace rfadv::testing
