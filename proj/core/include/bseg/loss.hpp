#pragma once

#include <cmath>
#include <vector>

#include "bseg/model.hpp"
#include "bseg/predictive.hpp"
#include "bseg/tape.hpp"
#include "bseg/tensor.hpp"

namespace bseg {

// Probabilities below this are clamped before the log in the cross-entropy.
inline constexpr double kCeClamp = 1e-7;

enum class ClipMode { weighted_only, all, off };
enum class SigmaRefresh { per_batch, per_epoch };

struct LossConfig {
    double kappa = 3.0;
    double grad_clip = 1.0;
    int weighting_from_cycle = 2;
    ClipMode clip_mode = ClipMode::weighted_only;
    SigmaRefresh sigma_refresh = SigmaRefresh::per_batch;

    void validate() const {
        if (kappa < 0.0) throw InputError("loss: kappa must be >= 0");
        if (grad_clip <= 0.0) throw InputError("loss: grad_clip must be > 0");
        if (weighting_from_cycle < 1) throw InputError("loss: weighting_from_cycle must be >= 1");
    }

    bool operator==(const LossConfig&) const = default;
};

namespace detail {

template <typename T>
void check_labels(const BasicTensor<T>& probs, const BasicTensor<T>& labels) {
    kernels::check_two_channels(probs, "cross-entropy probabilities");
    require_dims(labels, {probs.dim(0), probs.dim(2), probs.dim(3)}, "cross-entropy labels");
    for (std::int64_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != T(0) && labels[i] != T(1)) {
            throw InputError("cross-entropy: labels must be exactly 0 or 1");
        }
    }
}

// Shared accumulation for plain and weighted CE: mean over pixels per image,
// then mean over the batch. weights == nullptr means unit weights and follows
// the exact same code path, so kappa=0 / sigma=0 reproduce plain CE bitwise.
template <typename T>
T reduce_ce(const BasicTensor<T>& probs, const BasicTensor<T>& labels, const T* weights) {
    const int n = probs.dim(0), h = probs.dim(2), w = probs.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    T batch_acc = 0;
    for (int i = 0; i < n; ++i) {
        const T* bg = probs.data() + static_cast<std::int64_t>(i) * 2 * plane;
        const T* fg = bg + plane;
        const T* lab = labels.data() + static_cast<std::int64_t>(i) * plane;
        const T* wrow = weights ? weights + static_cast<std::int64_t>(i) * plane : nullptr;
        T acc = 0;
        for (std::int64_t px = 0; px < plane; ++px) {
            const T p = lab[px] == T(1) ? fg[px] : bg[px];
            const T pc = std::min(std::max(p, static_cast<T>(kCeClamp)), T(1));
            const T ce = -std::log(pc);
            acc += wrow ? wrow[px] * ce : T(1) * ce;
        }
        batch_acc += acc / static_cast<T>(plane);
    }
    return batch_acc / static_cast<T>(n);
}

}  // namespace detail

// Per-pixel unreduced cross-entropy, -log p_label with p clamped to [1e-7, 1].
template <typename T>
BasicTensor<T> ce_map(const BasicTensor<T>& probs, const BasicTensor<T>& labels) {
    detail::check_labels(probs, labels);
    const int n = probs.dim(0), h = probs.dim(2), w = probs.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    BasicTensor<T> out({n, h, w});
    for (int i = 0; i < n; ++i) {
        const T* bg = probs.data() + static_cast<std::int64_t>(i) * 2 * plane;
        const T* fg = bg + plane;
        const T* lab = labels.data() + static_cast<std::int64_t>(i) * plane;
        T* o = out.data() + static_cast<std::int64_t>(i) * plane;
        for (std::int64_t px = 0; px < plane; ++px) {
            const T p = lab[px] == T(1) ? fg[px] : bg[px];
            const T pc = std::min(std::max(p, static_cast<T>(kCeClamp)), T(1));
            o[px] = -std::log(pc);
        }
    }
    return out;
}

// Pixel weight map (1 + sigma_{y})^kappa, sigma read at the ground-truth
// class channel. sigma: [N,2,H,W], labels: [N,H,W].
template <typename T>
BasicTensor<T> sigma_weights(const BasicTensor<T>& sigma, const BasicTensor<T>& labels, T kappa) {
    kernels::check_two_channels(sigma, "sigma map");
    require_dims(labels, {sigma.dim(0), sigma.dim(2), sigma.dim(3)}, "sigma weight labels");
    const int n = sigma.dim(0), h = sigma.dim(2), w = sigma.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    BasicTensor<T> out({n, h, w});
    for (int i = 0; i < n; ++i) {
        const T* s_bg = sigma.data() + static_cast<std::int64_t>(i) * 2 * plane;
        const T* s_fg = s_bg + plane;
        const T* lab = labels.data() + static_cast<std::int64_t>(i) * plane;
        T* o = out.data() + static_cast<std::int64_t>(i) * plane;
        for (std::int64_t px = 0; px < plane; ++px) {
            const T s = lab[px] == T(1) ? s_fg[px] : s_bg[px];
            o[px] = std::pow(T(1) + s, kappa);
        }
    }
    return out;
}

// Scalar uncertainty-weighted loss value: mean over each image's pixels of
// CE * (1 + sigma_y)^kappa, then mean over the batch. sigma is a constant
// (no gradient flows through it).
template <typename T>
T weighted_ce(const BasicTensor<T>& probs, const BasicTensor<T>& labels,
              const BasicTensor<T>& sigma, T kappa) {
    detail::check_labels(probs, labels);
    if (kappa < T(0)) throw InputError("weighted_ce: kappa must be >= 0");
    const BasicTensor<T> weights = sigma_weights(sigma, labels, kappa);
    return detail::reduce_ce(probs, labels, weights.data());
}

// Plain mean cross-entropy (identical code path with unit weights).
template <typename T>
T mean_ce(const BasicTensor<T>& probs, const BasicTensor<T>& labels) {
    detail::check_labels(probs, labels);
    return detail::reduce_ce(probs, labels, nullptr);
}

// Differentiable loss node on the tape; weights are the precomputed
// (1 + sigma_y)^kappa map (pass an all-ones tensor or empty for plain CE).
template <typename T>
typename Tape<T>::Id weighted_ce_node(Tape<T>& tape, typename Tape<T>::Id probs_id,
                                      BasicTensor<T> labels, BasicTensor<T> weights) {
    const auto& probs = tape.value(probs_id);
    detail::check_labels(probs, labels);
    const bool unit = weights.empty();
    if (!unit) require_dims(weights, labels.dims(), "weighted_ce weights");

    BasicTensor<T> out({1});
    out[0] = detail::reduce_ce(probs, labels, unit ? nullptr : weights.data());

    return tape.custom(std::move(out), [probs_id, labels = std::move(labels),
                                        weights = std::move(weights), unit](Tape<T>& t,
                                                                            typename Tape<T>::Id out_id) {
        const T gseed = t.grad(out_id)[0];
        const auto& p_t = t.value(probs_id);
        auto& g_t = t.grad_mut(probs_id);
        const int n = p_t.dim(0), h = p_t.dim(2), w = p_t.dim(3);
        const std::int64_t plane = static_cast<std::int64_t>(h) * w;
        const T inv = gseed / (static_cast<T>(plane) * static_cast<T>(n));
        for (int i = 0; i < n; ++i) {
            const T* bg = p_t.data() + static_cast<std::int64_t>(i) * 2 * plane;
            const T* fg = bg + plane;
            T* gbg = g_t.data() + static_cast<std::int64_t>(i) * 2 * plane;
            T* gfg = gbg + plane;
            const T* lab = labels.data() + static_cast<std::int64_t>(i) * plane;
            const T* wrow = unit ? nullptr : weights.data() + static_cast<std::int64_t>(i) * plane;
            for (std::int64_t px = 0; px < plane; ++px) {
                const bool is_fg = lab[px] == T(1);
                const T p = is_fg ? fg[px] : bg[px];
                if (p < static_cast<T>(kCeClamp) || p > T(1)) continue;  // clamped: flat region
                const T wt = wrow ? wrow[px] : T(1);
                const T g = -wt * inv / p;
                if (is_fg) {
                    gfg[px] += g;
                } else {
                    gbg[px] += g;
                }
            }
        }
    });
}

// Elementwise clamp of parameter gradients to [-limit, +limit]; returns the
// max absolute value after clipping.
double clip_gradients(ModelParams& grads, double limit);

// Predictive uncertainty maps for a training batch: zero maps while no cycle
// has completed yet, otherwise the ensemble std over the completed-cycle
// snapshots, computed fresh without gradients.
std::vector<UncertaintyMap> training_sigma(const PosteriorEnsemble& completed,
                                           const std::vector<Tensor>& images);

}  // namespace bseg
