#pragma once

#include <functional>
#include <utility>
#include <vector>

#include "bseg/kernels.hpp"
#include "bseg/tensor.hpp"

namespace bseg {

// Reverse-mode tape over the fixed primitive set. Every produced tensor gets
// an id; backward() replays the recorded operations in exact reverse
// execution order and accumulates adjoints, so each leaf ends up with a
// gradient tensor of identical dims. One tape = one forward/backward pass;
// tensors on it are immutable once produced.
template <typename T>
class Tape {
public:
    using Id = int;
    using BackwardFn = std::function<void(Tape&, Id out)>;

    Id leaf(BasicTensor<T> value) { return push(std::move(value), nullptr); }

    const BasicTensor<T>& value(Id id) const { return values_[static_cast<std::size_t>(id)]; }

    // Valid after backward(); adjoint of the value with this id.
    const BasicTensor<T>& grad(Id id) const { return grads_[static_cast<std::size_t>(id)]; }
    BasicTensor<T>& grad_mut(Id id) { return grads_[static_cast<std::size_t>(id)]; }

    std::size_t node_count() const { return values_.size(); }

    Id conv2d(Id x, Id k, Id b, int stride) {
        const auto& xv = value(x);
        const auto& kv = value(k);
        BasicTensor<T> out(kernels::conv2d_out_dims(xv, kv, stride));
        kernels::conv2d_forward(xv, kv, value(b), stride, out);
        return push(std::move(out), [x, k, b, stride](Tape& t, Id out_id) {
            kernels::conv2d_backward(t.value(x), t.value(k), stride, t.grad(out_id),
                                     t.grad_mut(x), t.grad_mut(k), t.grad_mut(b));
        });
    }

    Id relu(Id x) {
        BasicTensor<T> out(value(x).dims());
        kernels::relu_forward(value(x), out);
        return push(std::move(out), [x](Tape& t, Id out_id) {
            kernels::relu_backward(t.value(x), t.grad(out_id), t.grad_mut(x));
        });
    }

    Id upsample2x(Id x) {
        const auto& xv = value(x);
        require_rank(xv, 4, "upsample2x input");
        BasicTensor<T> out({xv.dim(0), xv.dim(1), 2 * xv.dim(2), 2 * xv.dim(3)});
        kernels::upsample2x_forward(xv, out);
        return push(std::move(out), [x](Tape& t, Id out_id) {
            kernels::upsample2x_backward(t.value(x), t.grad(out_id), t.grad_mut(x));
        });
    }

    Id softmax_channels(Id x) {
        const auto& xv = value(x);
        kernels::check_two_channels(xv, "softmax_channels");
        BasicTensor<T> out(xv.dims());
        kernels::softmax_channels_forward(xv, out);
        return push(std::move(out), [x](Tape& t, Id out_id) {
            kernels::softmax_channels_backward(t.value(out_id), t.grad(out_id), t.grad_mut(x));
        });
    }

    // Custom scalar/tensor node; `back` reads grad(out) and accumulates into
    // the grads of whatever ids it captured.
    Id custom(BasicTensor<T> out, BackwardFn back) { return push(std::move(out), std::move(back)); }

    // Seeds the adjoint of a scalar root with 1 and runs the reverse sweep.
    void backward(Id root) {
        if (value(root).size() != 1) {
            throw ShapeError("tape backward: root must be scalar, got " +
                             dims_str(value(root).dims()));
        }
        grads_.clear();
        grads_.reserve(values_.size());
        for (const auto& v : values_) grads_.emplace_back(v.dims());
        grads_[static_cast<std::size_t>(root)][0] = T(1);
        for (Id i = static_cast<Id>(values_.size()) - 1; i >= 0; --i) {
            auto& back = backs_[static_cast<std::size_t>(i)];
            if (back) back(*this, i);
        }
    }

private:
    Id push(BasicTensor<T> value, BackwardFn back) {
        values_.push_back(std::move(value));
        backs_.push_back(std::move(back));
        return static_cast<Id>(values_.size()) - 1;
    }

    std::vector<BasicTensor<T>> values_;
    std::vector<BackwardFn> backs_;
    std::vector<BasicTensor<T>> grads_;
};

}  // namespace bseg
