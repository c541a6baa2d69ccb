#include "bseg/sampler.hpp"

#include <cmath>
#include <sstream>

#include "bseg/error.hpp"

namespace bseg {

void SamplerConfig::validate() const {
    if (cycles < 1) throw InputError("sampler: cycles must be >= 1");
    if (epochs_per_cycle < 1) throw InputError("sampler: epochs_per_cycle must be >= 1");
    if (!(initial_lr > 0.0)) throw InputError("sampler: initial_lr must be > 0");
    if (!(noise_control > 0.0 && noise_control <= 1.0)) {
        throw InputError("sampler: noise_control must be in (0, 1]");
    }
    if (!(exploration_fraction > 0.0 && exploration_fraction < 1.0)) {
        throw InputError("sampler: exploration_fraction must be in (0, 1)");
    }
    if (snapshots_per_cycle < 1) throw InputError("sampler: snapshots_per_cycle must be >= 1");
    if (prior_precision < 0.0) throw InputError("sampler: prior_precision must be >= 0");
    if (batch_size < 1) throw InputError("sampler: batch_size must be >= 1");
}

double cyclical_lr(std::int64_t step, std::int64_t total_steps, int cycles, double alpha0) {
    if (step < 0 || step >= total_steps) {
        throw InputError("cyclical_lr: step " + std::to_string(step) + " outside [0, " +
                         std::to_string(total_steps) + ")");
    }
    if (cycles < 1) throw InputError("cyclical_lr: cycles must be >= 1");
    const std::int64_t period = (total_steps + cycles - 1) / cycles;
    const double pos = static_cast<double>(step % period) / static_cast<double>(period);
    return 0.5 * alpha0 * (std::cos(3.14159265358979323846 * pos) + 1.0);
}

namespace detail {

double noise_stddev(double lr, double alpha, double n_train, bool temper_standard) {
    const double lrp = lr / n_train;
    double var = 2.0 * alpha * lrp;
    if (temper_standard) var /= n_train;
    return std::sqrt(var);
}

}  // namespace detail

void sgmcmc_step(ModelParams& params, ModelParams& momenta, const ModelParams& grads, double lr,
                 double alpha, std::int64_t n_train, double lambda, Phase phase,
                 bool noise_enabled, bool temper_standard, Rng& rng) {
    if (!(lr > 0.0)) throw InputError("sgmcmc_step: lr must be > 0");
    if (lambda < 0.0) throw InputError("sgmcmc_step: lambda must be >= 0");
    if (n_train < 1) throw InputError("sgmcmc_step: n_train must be >= 1");

    for (const auto& e : grads.entries()) {
        if (!e.tensor.all_finite()) {
            throw NumericError("sgmcmc_step: non-finite gradient in '" + e.name +
                               "'; consider enabling or tightening gradient clipping "
                               "(loss.grad_clip / loss.clip_mode)");
        }
    }

    const double noise_std =
        (phase == Phase::sampling && noise_enabled)
            ? detail::noise_stddev(lr, alpha, static_cast<double>(n_train), temper_standard)
            : 0.0;

    auto& pe = params.entries();
    auto& me = momenta.entries();
    const auto& ge = grads.entries();
    if (pe.size() != me.size() || pe.size() != ge.size()) {
        throw ShapeError("sgmcmc_step: params/momenta/grads entry count mismatch");
    }
    for (std::size_t t = 0; t < pe.size(); ++t) {
        if (!pe[t].tensor.same_dims(ge[t].tensor) || !pe[t].tensor.same_dims(me[t].tensor)) {
            throw ShapeError("sgmcmc_step: dims mismatch for '" + pe[t].name + "'");
        }
        detail::sgmcmc_update_span(pe[t].tensor.data(), me[t].tensor.data(), ge[t].tensor.data(),
                                   pe[t].tensor.size(), lr, alpha, static_cast<double>(n_train),
                                   lambda, noise_std, &rng);
    }
}

ToyCheckResult toy_sampler_check(const ToyTarget& target, const ToyRunConfig& run) {
    const auto& c = target.cov;
    if (std::abs(c[0][1] - c[1][0]) > 1e-12) {
        throw InputError("toy_sampler_check: covariance must be symmetric");
    }
    const double det = c[0][0] * c[1][1] - c[0][1] * c[1][0];
    if (!(c[0][0] > 0.0 && det > 0.0)) {
        throw InputError("toy_sampler_check: covariance must be positive definite");
    }
    if (run.samples < 1 || run.burn_in < 0 || run.thin < 1) {
        throw InputError("toy_sampler_check: invalid run configuration");
    }

    // Inverse covariance for the exact potential gradient.
    const double inv00 = c[1][1] / det, inv01 = -c[0][1] / det, inv11 = c[0][0] / det;

    Rng rng(run.seed);
    double w[2] = {target.mean[0], target.mean[1]};
    double v[2] = {0.0, 0.0};
    const double noise_std =
        run.noise_enabled ? detail::noise_stddev(run.lr, run.alpha, 1.0, true) : 0.0;

    double sum[2] = {0.0, 0.0};
    double sq[3] = {0.0, 0.0, 0.0};  // xx, yy, xy
    const std::int64_t total_steps =
        static_cast<std::int64_t>(run.burn_in) + static_cast<std::int64_t>(run.samples) * run.thin;
    int kept = 0;
    for (std::int64_t step = 0; step < total_steps; ++step) {
        const double dx = w[0] - target.mean[0];
        const double dy = w[1] - target.mean[1];
        const double g[2] = {inv00 * dx + inv01 * dy, inv01 * dx + inv11 * dy};
        detail::sgmcmc_update_span(w, v, g, 2, run.lr, run.alpha, 1.0, 0.0, noise_std, &rng);
        if (step >= run.burn_in && (step - run.burn_in) % run.thin == run.thin - 1) {
            sum[0] += w[0];
            sum[1] += w[1];
            sq[0] += w[0] * w[0];
            sq[1] += w[1] * w[1];
            sq[2] += w[0] * w[1];
            ++kept;
        }
    }

    ToyCheckResult res;
    const double n = static_cast<double>(kept);
    res.empirical_mean = {sum[0] / n, sum[1] / n};
    const double mx = res.empirical_mean[0], my = res.empirical_mean[1];
    res.empirical_cov[0][0] = sq[0] / n - mx * mx;
    res.empirical_cov[1][1] = sq[1] / n - my * my;
    res.empirical_cov[0][1] = res.empirical_cov[1][0] = sq[2] / n - mx * my;

    const double max_diag = std::max(c[0][0], c[1][1]);
    res.mean_tolerance = 0.1 * std::sqrt(max_diag);
    res.mean_ok = std::abs(mx - target.mean[0]) < res.mean_tolerance &&
                  std::abs(my - target.mean[1]) < res.mean_tolerance;

    res.cov_ok = true;
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            const double tol = std::max(0.15 * std::abs(c[i][j]), 0.05);
            if (std::abs(res.empirical_cov[i][j] - c[i][j]) > tol) res.cov_ok = false;
        }
    }
    res.pass = res.mean_ok && res.cov_ok;

    std::ostringstream os;
    os << "mean      empirical (" << mx << ", " << my << ")  target (" << target.mean[0] << ", "
       << target.mean[1] << ")  tol " << res.mean_tolerance << (res.mean_ok ? "  ok" : "  FAIL")
       << "\n";
    os << "cov       empirical [" << res.empirical_cov[0][0] << ", " << res.empirical_cov[0][1]
       << "; " << res.empirical_cov[1][0] << ", " << res.empirical_cov[1][1] << "]  target ["
       << c[0][0] << ", " << c[0][1] << "; " << c[1][0] << ", " << c[1][1] << "]  tol 15% (0.05 floor)"
       << (res.cov_ok ? "  ok" : "  FAIL") << "\n";
    res.report = os.str();
    return res;
}

}  // namespace bseg
