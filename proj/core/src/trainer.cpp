#include "bseg/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bseg/metrics.hpp"
#include "bseg/parallel.hpp"
#include "bseg/tape.hpp"

namespace bseg {

namespace {

struct ImageGrad {
    double loss = 0.0;
    std::vector<Tensor> grads;  // per parameter entry, in order
};

ImageGrad image_loss_grad(const ModelParams& params, const Frame& example, const Tensor* weights) {
    Tape<float> tape;
    std::vector<Tape<float>::Id> pids;
    pids.reserve(params.entries().size());
    for (const auto& e : params.entries()) pids.push_back(tape.leaf(e.tensor));

    const Tensor& img = example.image;
    Tensor batched = BasicTensor<float>::from_data({1, img.dim(0), img.dim(1), img.dim(2)},
                                                   std::vector<float>(img.storage()));
    const auto img_id = tape.leaf(std::move(batched));
    const auto probs_id = forward_on_tape(tape, pids, img_id);

    Tensor labels = BasicTensor<float>::from_data({1, img.dim(1), img.dim(2)},
                                                  std::vector<float>(example.mask.storage()));
    Tensor w = weights ? *weights : Tensor();
    const auto loss_id = weighted_ce_node(tape, probs_id, std::move(labels), std::move(w));
    tape.backward(loss_id);

    ImageGrad out;
    out.loss = static_cast<double>(tape.value(loss_id)[0]);
    out.grads.reserve(pids.size());
    for (const auto id : pids) out.grads.push_back(tape.grad(id));
    return out;
}

double validation_dice(const ModelParams& params, const std::vector<Frame>& val_set) {
    if (val_set.empty()) return 0.0;
    std::vector<double> dice(val_set.size(), 0.0);
    parallel_for(static_cast<int>(val_set.size()), [&](int i) {
        const Frame& ex = val_set[static_cast<std::size_t>(i)];
        Tensor batched = BasicTensor<float>::from_data(
            {1, ex.image.dim(0), ex.image.dim(1), ex.image.dim(2)},
            std::vector<float>(ex.image.storage()));
        const Tensor probs = forward(params, batched);
        const Tensor mask = predict_mask(probs);
        Tensor flat = BasicTensor<float>::from_data({mask.dim(1), mask.dim(2)},
                                                    std::vector<float>(mask.storage()));
        dice[static_cast<std::size_t>(i)] = metrics(confusion(flat, ex.mask)).dice;
    });
    double acc = 0.0;
    for (double d : dice) acc += d;
    return acc / static_cast<double>(val_set.size());
}

// Evenly spaced positions in a sampling phase of length `len`, last included.
std::vector<int> snapshot_offsets(int len, int count) {
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int k = 1; k <= count; ++k) {
        out.push_back((k * len + count - 1) / count - 1);
    }
    return out;
}

}  // namespace

std::string train_log_csv(const std::vector<EpochLog>& log) {
    std::ostringstream os;
    os << "epoch,cycle,phase,lr,mean_loss,snapshots_so_far,val_dice,max_abs_grad\n";
    char buf[64];
    for (const auto& e : log) {
        os << e.epoch << "," << e.cycle << "," << phase_name(e.phase) << ",";
        std::snprintf(buf, sizeof(buf), "%.8f,%.8f,%d,%.6f,%.8f", e.lr, e.mean_loss,
                      e.snapshots_so_far, e.val_dice, e.max_abs_grad);
        os << buf << "\n";
    }
    return os.str();
}

TrainResult train(const ModelParams& initial, const std::vector<Frame>& train_set,
                  const std::vector<Frame>& val_set, const TrainOptions& options) {
    options.sampler.validate();
    if (options.kappa < 0.0) throw InputError("train: kappa must be >= 0");
    if (train_set.empty()) throw InputError("train: empty training set");
    if (options.snapshot_policy == SnapshotPolicy::best_validation_single && val_set.empty()) {
        throw InputError("train: best-validation snapshot policy requires a validation set");
    }

    const SamplerConfig& sc = options.sampler;
    const int epochs_per_cycle = sc.epochs_per_cycle;
    const int total_epochs = sc.cycles * epochs_per_cycle;
    const int n_train = static_cast<int>(train_set.size());
    const int steps_per_epoch = (n_train + sc.batch_size - 1) / sc.batch_size;
    const std::int64_t total_steps = static_cast<std::int64_t>(total_epochs) * steps_per_epoch;

    // Phase boundary: epoch_in_cycle / epochs_per_cycle < exploration_fraction.
    const auto is_sampling_epoch = [&](int e_in) {
        return static_cast<double>(e_in) >=
               sc.exploration_fraction * static_cast<double>(epochs_per_cycle) - 1e-9;
    };
    std::vector<int> sampling_epochs;  // in-cycle indices
    for (int e = 0; e < epochs_per_cycle; ++e) {
        if (is_sampling_epoch(e)) sampling_epochs.push_back(e);
    }
    if (sampling_epochs.empty() ||
        static_cast<int>(sampling_epochs.size()) < sc.snapshots_per_cycle) {
        throw InputError("train: snapshots_per_cycle (" + std::to_string(sc.snapshots_per_cycle) +
                         ") exceeds the " + std::to_string(sampling_epochs.size()) +
                         " sampling epochs per cycle");
    }
    std::vector<bool> capture(static_cast<std::size_t>(epochs_per_cycle), false);
    for (int off : snapshot_offsets(static_cast<int>(sampling_epochs.size()), sc.snapshots_per_cycle)) {
        capture[static_cast<std::size_t>(sampling_epochs[static_cast<std::size_t>(off)])] = true;
    }

    ModelParams params = initial;
    ModelParams momenta = params;
    for (auto& e : momenta.entries()) e.tensor.fill(0.0f);

    Rng rng(options.seed);
    TrainResult result;
    ModelParams best_params = params;
    int best_cycle = 1;
    double best_lr = sc.initial_lr;

    std::vector<int> order(static_cast<std::size_t>(n_train));
    for (int i = 0; i < n_train; ++i) order[static_cast<std::size_t>(i)] = i;

    std::int64_t global_step = 0;
    for (int epoch = 0; epoch < total_epochs; ++epoch) {
        const int cycle = epoch / epochs_per_cycle + 1;
        const int e_in = epoch % epochs_per_cycle;
        const Phase phase = is_sampling_epoch(e_in) ? Phase::sampling : Phase::exploration;
        const double epoch_lr = cyclical_lr(global_step, total_steps, sc.cycles, sc.initial_lr);

        // Uncertainty weighting becomes live once a cycle has completed.
        const bool weighting_live = options.weighted_loss && cycle >= options.weighting_from_cycle &&
                                    !result.ensemble.completed_before_cycle(cycle).empty();
        PosteriorEnsemble completed;
        if (weighting_live) completed = result.ensemble.completed_before_cycle(cycle);

        std::vector<Tensor> epoch_weights;  // per train index, valid if per-epoch refresh
        if (weighting_live && options.sigma_refresh == SigmaRefresh::per_epoch) {
            std::vector<Tensor> images;
            images.reserve(train_set.size());
            for (const auto& ex : train_set) images.push_back(ex.image);
            const auto maps = training_sigma(completed, images);
            epoch_weights.resize(train_set.size());
            for (std::size_t i = 0; i < train_set.size(); ++i) {
                const auto& sig = maps[i].sigma;
                for (std::int64_t v = 0; v < sig.size(); ++v) {
                    result.sigma_max_seen = std::max(result.sigma_max_seen,
                                                     static_cast<double>(sig[v]));
                }
                Tensor sig4 = BasicTensor<float>::from_data({1, 2, sig.dim(1), sig.dim(2)},
                                                            std::vector<float>(sig.storage()));
                Tensor labels = BasicTensor<float>::from_data(
                    {1, sig.dim(1), sig.dim(2)}, std::vector<float>(train_set[i].mask.storage()));
                epoch_weights[i] = sigma_weights(sig4, labels, static_cast<float>(options.kappa));
            }
        }

        // Seeded in-place shuffle for this epoch's batch order.
        for (int i = n_train - 1; i > 0; --i) {
            const int j = rng.uniform_int(0, i);
            std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
        }

        double loss_acc = 0.0;
        double epoch_max_grad = 0.0;
        for (int step = 0; step < steps_per_epoch; ++step) {
            const int lo = step * sc.batch_size;
            const int hi = std::min(n_train, lo + sc.batch_size);
            const int bsize = hi - lo;

            std::vector<Tensor> batch_weights(static_cast<std::size_t>(bsize));
            if (weighting_live) {
                if (options.sigma_refresh == SigmaRefresh::per_epoch) {
                    for (int b = 0; b < bsize; ++b) {
                        batch_weights[static_cast<std::size_t>(b)] =
                            epoch_weights[static_cast<std::size_t>(order[static_cast<std::size_t>(lo + b)])];
                    }
                } else {
                    std::vector<Tensor> images;
                    images.reserve(static_cast<std::size_t>(bsize));
                    for (int b = 0; b < bsize; ++b) {
                        images.push_back(train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(lo + b)])].image);
                    }
                    const auto maps = training_sigma(completed, images);
                    for (int b = 0; b < bsize; ++b) {
                        const auto& sig = maps[static_cast<std::size_t>(b)].sigma;
                        for (std::int64_t v = 0; v < sig.size(); ++v) {
                            result.sigma_max_seen = std::max(result.sigma_max_seen,
                                                             static_cast<double>(sig[v]));
                        }
                        const auto& ex = train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(lo + b)])];
                        Tensor sig4 = BasicTensor<float>::from_data(
                            {1, 2, sig.dim(1), sig.dim(2)}, std::vector<float>(sig.storage()));
                        Tensor labels = BasicTensor<float>::from_data(
                            {1, sig.dim(1), sig.dim(2)}, std::vector<float>(ex.mask.storage()));
                        batch_weights[static_cast<std::size_t>(b)] =
                            sigma_weights(sig4, labels, static_cast<float>(options.kappa));
                    }
                }
            }

            std::vector<ImageGrad> slots(static_cast<std::size_t>(bsize));
            parallel_for(bsize, [&](int b) {
                const auto& ex = train_set[static_cast<std::size_t>(order[static_cast<std::size_t>(lo + b)])];
                const Tensor* w = weighting_live ? &batch_weights[static_cast<std::size_t>(b)] : nullptr;
                slots[static_cast<std::size_t>(b)] = image_loss_grad(params, ex, w);
            });

            // Fixed-order reduction: mean gradient of the batch loss.
            ModelParams grads = params;
            for (auto& e : grads.entries()) e.tensor.fill(0.0f);
            double batch_loss = 0.0;
            const float inv_b = 1.0f / static_cast<float>(bsize);
            for (int b = 0; b < bsize; ++b) {
                batch_loss += slots[static_cast<std::size_t>(b)].loss;
                auto& ge = grads.entries();
                for (std::size_t t = 0; t < ge.size(); ++t) {
                    const Tensor& src = slots[static_cast<std::size_t>(b)].grads[t];
                    float* dst = ge[t].tensor.data();
                    for (std::int64_t i = 0; i < src.size(); ++i) dst[i] += src[i] * inv_b;
                }
            }
            batch_loss /= static_cast<double>(bsize);
            loss_acc += batch_loss;

            double max_grad = 0.0;
            if (options.clip_enabled) {
                max_grad = clip_gradients(grads, options.grad_clip);
            } else {
                for (const auto& e : grads.entries()) {
                    for (std::int64_t i = 0; i < e.tensor.size(); ++i) {
                        max_grad = std::max(max_grad, std::abs(static_cast<double>(e.tensor[i])));
                    }
                }
            }
            result.step_max_abs_grad.push_back(max_grad);
            epoch_max_grad = std::max(epoch_max_grad, max_grad);

            const double lr = cyclical_lr(global_step, total_steps, sc.cycles, sc.initial_lr);
            sgmcmc_step(params, momenta, grads, lr, sc.noise_control, n_train, sc.prior_precision,
                        phase, options.noise_enabled, sc.temper_standard, rng);
            ++global_step;
        }

        const double mean_loss = loss_acc / static_cast<double>(steps_per_epoch);
        if (!std::isfinite(mean_loss)) {
            throw NumericError("train: mean loss non-finite at epoch " + std::to_string(epoch) +
                               "; consider enabling or tightening gradient clipping "
                               "(loss.grad_clip / loss.clip_mode)");
        }

        if (capture[static_cast<std::size_t>(e_in)] &&
            options.snapshot_policy == SnapshotPolicy::scheduled) {
            Snapshot snap;
            snap.params = params;
            snap.cycle = cycle;
            snap.epoch = epoch;
            snap.lr = cyclical_lr(global_step - 1, total_steps, sc.cycles, sc.initial_lr);
            result.ensemble.append(std::move(snap));
        }

        const double val_dice = validation_dice(params, val_set);
        if (!val_set.empty() && val_dice > result.best_val_dice) {
            result.best_val_dice = val_dice;
            result.best_epoch = epoch;
            best_params = params;
            best_cycle = cycle;
            best_lr = cyclical_lr(global_step - 1, total_steps, sc.cycles, sc.initial_lr);
        }

        EpochLog log;
        log.epoch = epoch;
        log.cycle = cycle;
        log.phase = phase;
        log.lr = epoch_lr;
        log.mean_loss = mean_loss;
        log.snapshots_so_far = result.ensemble.size();
        log.val_dice = val_dice;
        log.max_abs_grad = epoch_max_grad;
        result.log.push_back(log);
    }

    if (options.snapshot_policy == SnapshotPolicy::best_validation_single) {
        Snapshot snap;
        snap.params = best_params;
        snap.cycle = best_cycle;
        snap.epoch = std::max(result.best_epoch, 0);
        snap.lr = best_lr;
        result.ensemble.append(std::move(snap));
        for (auto& log : result.log) log.snapshots_so_far = 0;
        result.log.back().snapshots_so_far = 1;
    }
    return result;
}

}  // namespace bseg
