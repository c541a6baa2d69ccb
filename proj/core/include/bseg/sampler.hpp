#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "bseg/model.hpp"
#include "bseg/rng.hpp"

namespace bseg {

enum class Phase { exploration, sampling };

inline const char* phase_name(Phase p) {
    return p == Phase::exploration ? "exploration" : "sampling";
}

struct SamplerConfig {
    int cycles = 2;
    int epochs_per_cycle = 30;
    double initial_lr = 0.1;
    double noise_control = 0.9;       // alpha: momentum decay / injected-noise magnitude
    double exploration_fraction = 0.8;
    int snapshots_per_cycle = 4;
    double prior_precision = 5e-4;    // lambda of the Gaussian prior, per weight
    int batch_size = 8;
    bool temper_standard = true;      // scale noise variance by 1/N_train (standard posterior)

    void validate() const;
    bool operator==(const SamplerConfig&) const = default;
};

// Cosine schedule restarting at alpha0 every ceil(total_steps/cycles) steps:
//   lr = (alpha0/2) * (cos(pi * (step mod L) / L) + 1)
double cyclical_lr(std::int64_t step, std::int64_t total_steps, int cycles, double alpha0);

namespace detail {

// Shared momentum/Langevin update over one flat coordinate span:
//   g_U = n_train * g_batch + lambda * w
//   v  <- (1-alpha) * v - lr' * g_U + noise,  lr' = lr / n_train
//   w  <- w + v
// noise per coordinate ~ Normal(0, 2*alpha*lr'/n_train) when enabled (the
// 1/n_train factor drops with temper_standard=false), drawn in index order.
template <typename T>
void sgmcmc_update_span(T* w, T* v, const T* g, std::int64_t n, double lr, double alpha,
                        double n_train, double lambda, double noise_std, Rng* rng) {
    const double lrp = lr / n_train;
    const double keep = 1.0 - alpha;
    for (std::int64_t i = 0; i < n; ++i) {
        const double gu = n_train * static_cast<double>(g[i]) + lambda * static_cast<double>(w[i]);
        double vi = keep * static_cast<double>(v[i]) - lrp * gu;
        if (noise_std > 0.0) vi += noise_std * rng->normal();
        v[i] = static_cast<T>(vi);
        w[i] = static_cast<T>(static_cast<double>(w[i]) + vi);
    }
}

double noise_stddev(double lr, double alpha, double n_train, bool temper_standard);

}  // namespace detail

// One cSG-MCMC update of all parameters; grads are the gradients of the mean
// batch loss. Noise is injected only in the sampling phase (and only when
// noise_enabled). Throws NumericError on non-finite gradients.
void sgmcmc_step(ModelParams& params, ModelParams& momenta, const ModelParams& grads, double lr,
                 double alpha, std::int64_t n_train, double lambda, Phase phase,
                 bool noise_enabled, bool temper_standard, Rng& rng);

// ---------------------------------------------------------------------------
// Sampler correctness oracle on a 2-D Gaussian target.

struct ToyTarget {
    std::array<double, 2> mean{0.0, 0.0};
    std::array<std::array<double, 2>, 2> cov{{{1.0, 0.0}, {0.0, 1.0}}};
};

struct ToyRunConfig {
    int samples = 5000;   // post-burn-in samples kept
    int burn_in = 2000;   // discarded leading steps
    int thin = 4;         // steps between kept samples
    double lr = 0.04;     // constant sampling-phase step size
    double alpha = 0.9;
    bool noise_enabled = true;
    std::uint64_t seed = 42;
};

struct ToyCheckResult {
    std::array<double, 2> empirical_mean{};
    std::array<std::array<double, 2>, 2> empirical_cov{};
    double mean_tolerance = 0.0;
    bool mean_ok = false;
    bool cov_ok = false;
    bool pass = false;
    std::string report;  // human-readable moment comparison
};

// Samples U(theta) = 1/2 (theta-m)^T Sigma^-1 (theta-m) with exact gradients
// and N_train = 1; passes iff the empirical mean is within
// 0.1*sqrt(max diag Sigma) (inf-norm) and every covariance entry is within
// 15% relative (0.05 absolute floor) of Sigma.
ToyCheckResult toy_sampler_check(const ToyTarget& target, const ToyRunConfig& run);

}  // namespace bseg
