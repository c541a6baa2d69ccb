#include "bseg/model.hpp"

#include <cmath>

#include "bseg/kernels.hpp"
#include "bseg/rng.hpp"

namespace bseg {

void ArchConfig::validate() const {
    if (input_channels <= 0) throw InputError("arch: input_channels must be positive");
    if (widths.size() != 4) {
        throw InputError("arch: expected 4 stage widths, got " + std::to_string(widths.size()));
    }
    for (int w : widths) {
        if (w <= 0) throw InputError("arch: stage widths must be positive");
    }
    if (side <= 0 || side % 4 != 0) {
        throw InputError("arch: side length must be positive and divisible by 4, got " +
                         std::to_string(side));
    }
}

namespace {

struct LayerSpec {
    const char* name;
    int in_ch;
    int out_ch;
};

std::array<LayerSpec, 5> layer_specs(const ArchConfig& c) {
    return {{{"enc1", c.input_channels, c.widths[0]},
             {"enc2", c.widths[0], c.widths[1]},
             {"mid", c.widths[1], c.widths[2]},
             {"dec1", c.widths[2], c.widths[3]},
             {"head", c.widths[3], 2}}};
}

}  // namespace

ModelParams ModelParams::zeros(const ArchConfig& config) {
    config.validate();
    ModelParams p;
    for (const auto& spec : layer_specs(config)) {
        p.entries_.push_back({std::string(spec.name) + ".w", Tensor({spec.out_ch, spec.in_ch, 3, 3})});
        p.entries_.push_back({std::string(spec.name) + ".b", Tensor({spec.out_ch})});
    }
    return p;
}

Tensor& ModelParams::at(std::string_view name) {
    for (auto& e : entries_) {
        if (e.name == name) return e.tensor;
    }
    throw InputError("model params: no parameter named '" + std::string(name) + "'");
}

const Tensor& ModelParams::at(std::string_view name) const {
    return const_cast<ModelParams*>(this)->at(name);
}

std::int64_t ModelParams::param_count() const {
    std::int64_t n = 0;
    for (const auto& e : entries_) n += e.tensor.size();
    return n;
}

ModelParams init_params(const ArchConfig& config, std::uint64_t seed) {
    ModelParams p = ModelParams::zeros(config);
    Rng rng(seed);
    for (auto& e : p.entries()) {
        if (e.name.ends_with(".b")) continue;  // biases stay zero
        const int fan_in = e.tensor.dim(1) * 9;
        const double stddev = std::sqrt(2.0 / static_cast<double>(fan_in));
        float* d = e.tensor.data();
        for (std::int64_t i = 0; i < e.tensor.size(); ++i) {
            d[i] = static_cast<float>(rng.normal(0.0, stddev));
        }
    }
    return p;
}

Tensor forward(const ModelParams& params, const Tensor& images) {
    require_rank(images, 4, "forward images");
    const auto& enc1_w = params.at("enc1.w");
    if (images.dim(1) != enc1_w.dim(1)) {
        throw ShapeError("forward: image channels " + std::to_string(images.dim(1)) +
                         " != model input channels " + std::to_string(enc1_w.dim(1)));
    }
    if (images.dim(2) != images.dim(3) || images.dim(2) % 2 != 0) {
        throw ShapeError("forward: expected square even-sided images, got " +
                         dims_str(images.dims()));
    }
    if (!images.all_finite()) throw InputError("forward: non-finite pixel values in input");

    const auto run_conv = [&](const Tensor& x, const char* layer, int stride) {
        const Tensor& w = params.at(std::string(layer) + ".w");
        const Tensor& b = params.at(std::string(layer) + ".b");
        Tensor out(kernels::conv2d_out_dims(x, w, stride));
        kernels::conv2d_forward(x, w, b, stride, out);
        return out;
    };
    Tensor h = run_conv(images, "enc1", 1);
    kernels::relu_forward(h, h);
    h = run_conv(h, "enc2", 2);
    kernels::relu_forward(h, h);
    h = run_conv(h, "mid", 1);
    kernels::relu_forward(h, h);
    Tensor up({h.dim(0), h.dim(1), 2 * h.dim(2), 2 * h.dim(3)});
    kernels::upsample2x_forward(h, up);
    h = run_conv(up, "dec1", 1);
    kernels::relu_forward(h, h);
    Tensor logits = run_conv(h, "head", 1);
    Tensor probs(logits.dims());
    kernels::softmax_channels_forward(logits, probs);
    return probs;
}

Tensor predict_mask(const Tensor& probabilities) {
    kernels::check_two_channels(probabilities, "predict_mask");
    const int n = probabilities.dim(0), h = probabilities.dim(2), w = probabilities.dim(3);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    Tensor mask({n, h, w});
    for (int i = 0; i < n; ++i) {
        const float* bg = probabilities.data() + static_cast<std::int64_t>(i) * 2 * plane;
        const float* fg = bg + plane;
        float* m = mask.data() + static_cast<std::int64_t>(i) * plane;
        for (std::int64_t px = 0; px < plane; ++px) m[px] = (fg[px] > bg[px]) ? 1.0f : 0.0f;
    }
    return mask;
}

}  // namespace bseg
