#include "bseg/predictive.hpp"

#include <algorithm>
#include <cmath>

#include "bseg/parallel.hpp"

namespace bseg {

namespace {

Tensor as_batch1(const Tensor& image) {
    require_rank(image, 3, "predictive image");
    Tensor batched({1, image.dim(0), image.dim(1), image.dim(2)});
    std::copy(image.data(), image.data() + image.size(), batched.data());
    return batched;
}

std::vector<Tensor> snapshot_probs(const PosteriorEnsemble& ensemble, const Tensor& image) {
    if (ensemble.empty()) throw InputError("predictive: empty ensemble");
    const Tensor batched = as_batch1(image);
    std::vector<Tensor> probs;
    probs.reserve(static_cast<std::size_t>(ensemble.size()));
    for (const auto& snap : ensemble.snapshots()) {
        Tensor p = forward(snap.params, batched);  // [1,2,H,W]
        probs.push_back(BasicTensor<float>::from_data({p.dim(1), p.dim(2), p.dim(3)},
                                                      std::move(p.storage())));
    }
    return probs;
}

Tensor mean_of(const std::vector<Tensor>& probs) {
    const std::int64_t n = probs[0].size();
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (const auto& p : probs) {
        const float* d = p.data();
        for (std::int64_t i = 0; i < n; ++i) acc[static_cast<std::size_t>(i)] += d[i];
    }
    Tensor mean(probs[0].dims());
    const double inv = 1.0 / static_cast<double>(probs.size());
    for (std::int64_t i = 0; i < n; ++i) {
        mean[i] = static_cast<float>(acc[static_cast<std::size_t>(i)] * inv);
    }
    return mean;
}

UncertaintyMap sigma_of(const std::vector<Tensor>& probs, const Tensor& mean) {
    const std::int64_t n = mean.size();
    std::vector<double> acc(static_cast<std::size_t>(n), 0.0);
    for (const auto& p : probs) {
        const float* d = p.data();
        for (std::int64_t i = 0; i < n; ++i) {
            const double dev = static_cast<double>(d[i]) - static_cast<double>(mean[i]);
            acc[static_cast<std::size_t>(i)] += dev * dev;
        }
    }
    UncertaintyMap map;
    map.ensemble_size = static_cast<int>(probs.size());
    map.sigma = Tensor(mean.dims());
    const double inv = 1.0 / static_cast<double>(probs.size());
    for (std::int64_t i = 0; i < n; ++i) {
        const double s = std::sqrt(acc[static_cast<std::size_t>(i)] * inv);
        map.sigma[i] = static_cast<float>(std::clamp(s, 0.0, 0.5));
    }
    return map;
}

}  // namespace

Tensor predictive_mean(const PosteriorEnsemble& ensemble, const Tensor& image) {
    return mean_of(snapshot_probs(ensemble, image));
}

UncertaintyMap predictive_sigma(const PosteriorEnsemble& ensemble, const Tensor& image,
                                const Tensor& mean) {
    const auto probs = snapshot_probs(ensemble, image);
    require_dims(mean, probs[0].dims(), "predictive_sigma mean");
    return sigma_of(probs, mean);
}

std::vector<PredictiveResult> predict(const PosteriorEnsemble& ensemble,
                                      const std::vector<Tensor>& images) {
    std::vector<PredictiveResult> results(images.size());
    parallel_for(static_cast<int>(images.size()), [&](int i) {
        const auto probs = snapshot_probs(ensemble, images[static_cast<std::size_t>(i)]);
        PredictiveResult r;
        r.mean = mean_of(probs);
        r.sigma = sigma_of(probs, r.mean);
        Tensor batched = BasicTensor<float>::from_data(
            {1, r.mean.dim(0), r.mean.dim(1), r.mean.dim(2)}, std::vector<float>(r.mean.storage()));
        Tensor mask = predict_mask(batched);  // [1,H,W]
        r.mask = BasicTensor<float>::from_data({mask.dim(1), mask.dim(2)}, std::move(mask.storage()));
        results[static_cast<std::size_t>(i)] = std::move(r);
    });
    return results;
}

}  // namespace bseg
