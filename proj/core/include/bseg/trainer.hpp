#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "bseg/ensemble.hpp"
#include "bseg/loss.hpp"
#include "bseg/sampler.hpp"
#include "bseg/synthdata.hpp"

namespace bseg {

enum class SnapshotPolicy {
    scheduled,               // S evenly spaced snapshots per sampling phase
    best_validation_single,  // one snapshot: the best-validation-Dice params
};

struct TrainOptions {
    SamplerConfig sampler;
    bool noise_enabled = true;  // false: plain (momentum) SGD baseline
    SnapshotPolicy snapshot_policy = SnapshotPolicy::scheduled;

    bool weighted_loss = false;  // uncertainty-weighted CE instead of plain CE
    double kappa = 3.0;
    int weighting_from_cycle = 2;
    SigmaRefresh sigma_refresh = SigmaRefresh::per_batch;

    bool clip_enabled = false;
    double grad_clip = 1.0;

    std::uint64_t seed = 0;
};

struct EpochLog {
    int epoch = 0;  // global, 0-based
    int cycle = 0;  // 1-based
    Phase phase = Phase::exploration;
    double lr = 0.0;  // at the first step of the epoch
    double mean_loss = 0.0;
    int snapshots_so_far = 0;
    double val_dice = 0.0;
    double max_abs_grad = 0.0;  // max over the epoch's steps, post-clip when clipping
};

struct TrainResult {
    PosteriorEnsemble ensemble;
    std::vector<EpochLog> log;
    std::vector<double> step_max_abs_grad;  // per optimizer step, post-clip
    double sigma_max_seen = 0.0;            // largest training-sigma value encountered
    int best_epoch = -1;
    double best_val_dice = 0.0;
};

std::string train_log_csv(const std::vector<EpochLog>& log);

// Cyclical SG-MCMC training over the dataset. Epochs in the leading
// exploration fraction of each cycle run without injected noise; snapshots
// are captured at evenly spaced sampling-phase epochs (last epoch of the
// cycle included). Batch order and noise come from one seeded generator.
TrainResult train(const ModelParams& initial, const std::vector<Frame>& train_set,
                  const std::vector<Frame>& val_set, const TrainOptions& options);

}  // namespace bseg
