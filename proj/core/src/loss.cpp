#include "bseg/loss.hpp"

#include <algorithm>
#include <cmath>

namespace bseg {

double clip_gradients(ModelParams& grads, double limit) {
    if (!(limit > 0.0)) throw InputError("clip_gradients: limit must be > 0");
    const float lim = static_cast<float>(limit);
    float max_abs = 0.0f;
    for (auto& e : grads.entries()) {
        float* d = e.tensor.data();
        for (std::int64_t i = 0; i < e.tensor.size(); ++i) {
            d[i] = std::clamp(d[i], -lim, lim);
            max_abs = std::max(max_abs, std::abs(d[i]));
        }
    }
    return static_cast<double>(max_abs);
}

std::vector<UncertaintyMap> training_sigma(const PosteriorEnsemble& completed,
                                           const std::vector<Tensor>& images) {
    std::vector<UncertaintyMap> maps(images.size());
    if (completed.empty()) {
        for (std::size_t i = 0; i < images.size(); ++i) {
            const auto& img = images[i];
            require_rank(img, 3, "training_sigma image");
            maps[i].sigma = Tensor({2, img.dim(1), img.dim(2)});
            maps[i].ensemble_size = 0;
        }
        return maps;
    }
    const auto results = predict(completed, images);
    for (std::size_t i = 0; i < images.size(); ++i) maps[i] = results[i].sigma;
    return maps;
}

}  // namespace bseg
