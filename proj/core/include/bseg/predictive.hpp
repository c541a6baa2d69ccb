#pragma once

#include <vector>

#include "bseg/ensemble.hpp"
#include "bseg/tensor.hpp"

namespace bseg {

// Per-pixel, per-channel predictive standard deviation for one image.
// Probabilities live in [0,1], so every sigma value lies in [0, 0.5]; an
// ensemble of one snapshot yields an identically zero map.
struct UncertaintyMap {
    Tensor sigma;          // [2,H,W]
    int ensemble_size = 0;
};

struct PredictiveResult {
    Tensor mean;           // [2,H,W], channel sums 1 per pixel
    UncertaintyMap sigma;
    Tensor mask;           // [H,W] of {0,1}
};

// Arithmetic mean over snapshot forward passes (population statistics over
// the ensemble, accumulated in 64-bit). image: [3,H,W].
Tensor predictive_mean(const PosteriorEnsemble& ensemble, const Tensor& image);

// Population (divide-by-M) std of the snapshot probabilities around `mean`.
UncertaintyMap predictive_sigma(const PosteriorEnsemble& ensemble, const Tensor& image,
                                const Tensor& mean);

// Batch composition: one ensemble forward sweep per image, snapshot order
// fixed. Parallel across images.
std::vector<PredictiveResult> predict(const PosteriorEnsemble& ensemble,
                                      const std::vector<Tensor>& images);

}  // namespace bseg
