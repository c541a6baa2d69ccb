#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "bseg/tape.hpp"
#include "bseg/tensor.hpp"

namespace bseg {

// Small fully-convolutional encoder-decoder emitting 2-channel per-pixel
// probabilities (background = channel 0, foreground = channel 1):
//   conv3x3(in->w0) relu | conv3x3/s2(w0->w1) relu | conv3x3(w1->w2) relu |
//   upsample2x | conv3x3(w2->w3) relu | conv3x3(w3->2) | channel softmax
struct ArchConfig {
    int input_channels = 3;
    std::vector<int> widths = {8, 16, 16, 8};
    int side = 64;

    void validate() const;
    bool operator==(const ArchConfig&) const = default;
};

// Ordered named weight collection; one instance is one posterior snapshot.
// Layer list and dims are fully determined by the ArchConfig, so two
// instances from the same config compare elementwise.
class ModelParams {
public:
    struct Entry {
        std::string name;
        Tensor tensor;
    };

    ModelParams() = default;

    static ModelParams zeros(const ArchConfig& config);

    std::vector<Entry>& entries() { return entries_; }
    const std::vector<Entry>& entries() const { return entries_; }

    Tensor& at(std::string_view name);
    const Tensor& at(std::string_view name) const;

    std::int64_t param_count() const;

    bool operator==(const ModelParams&) const = default;

private:
    std::vector<Entry> entries_;
};

// He-normal weights (std = sqrt(2/fan_in)), zero biases; bit-reproducible for
// a given seed.
ModelParams init_params(const ArchConfig& config, std::uint64_t seed);

// Tape-free inference pass. images: [N,C,side,side], pixel values finite.
Tensor forward(const ModelParams& params, const Tensor& images);

// Per pixel: 1 iff p_fg > p_bg; exact tie goes to background.
Tensor predict_mask(const Tensor& probabilities);

// Differentiable forward for training and 64-bit gradient checks. param_ids
// must follow ModelParams entry order.
template <typename T>
typename Tape<T>::Id forward_on_tape(Tape<T>& tape, const std::vector<typename Tape<T>::Id>& param_ids,
                                     typename Tape<T>::Id image) {
    const auto& p = param_ids;
    auto h = tape.relu(tape.conv2d(image, p[0], p[1], 1));
    h = tape.relu(tape.conv2d(h, p[2], p[3], 2));
    h = tape.relu(tape.conv2d(h, p[4], p[5], 1));
    h = tape.upsample2x(h);
    h = tape.relu(tape.conv2d(h, p[6], p[7], 1));
    auto logits = tape.conv2d(h, p[8], p[9], 1);
    return tape.softmax_channels(logits);
}

}  // namespace bseg
