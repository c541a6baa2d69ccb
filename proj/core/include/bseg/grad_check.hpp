#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "bseg/rng.hpp"
#include "bseg/tape.hpp"
#include "bseg/tensor.hpp"

namespace bseg {

// A differentiable scalar objective expressed as a tape program over
// parameter leaves (given in the same order as the params vector).
using DProgram = std::function<Tape<double>::Id(Tape<double>&, const std::vector<Tape<double>::Id>&)>;

struct GradCheckReport {
    double max_rel_err = 0.0;
    int coords_checked = 0;
    double value = 0.0;
};

namespace detail {

inline double eval_program(const DProgram& f, const std::vector<DTensor>& params) {
    Tape<double> tape;
    std::vector<Tape<double>::Id> ids;
    ids.reserve(params.size());
    for (const auto& p : params) ids.push_back(tape.leaf(p));
    const auto root = f(tape, ids);
    const double v = tape.value(root)[0];
    if (!std::isfinite(v)) throw NumericError("grad_check: objective evaluated non-finite");
    return v;
}

}  // namespace detail

// Central finite differences against the tape gradient on a random coordinate
// subsample; runs entirely in 64-bit mode. Returns the max relative error.
inline GradCheckReport grad_check(const DProgram& f, const std::vector<DTensor>& params,
                                  double eps, Rng& rng, int coords = 100) {
    if (!(eps > 0.0 && eps <= 1e-2)) {
        throw InputError("grad_check: eps must be in (0, 1e-2], got " + std::to_string(eps));
    }

    Tape<double> tape;
    std::vector<Tape<double>::Id> ids;
    for (const auto& p : params) ids.push_back(tape.leaf(p));
    const auto root = f(tape, ids);
    GradCheckReport report;
    report.value = tape.value(root)[0];
    if (!std::isfinite(report.value)) throw NumericError("grad_check: objective evaluated non-finite");
    tape.backward(root);

    std::int64_t total = 0;
    for (const auto& p : params) total += p.size();
    const std::int64_t want = std::min<std::int64_t>(total, std::max(coords, 100));

    // Partial Fisher-Yates over the flat coordinate space.
    std::vector<std::int64_t> flat(static_cast<std::size_t>(total));
    std::iota(flat.begin(), flat.end(), std::int64_t{0});
    for (std::int64_t i = 0; i < want; ++i) {
        const std::int64_t j = i + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(total - i));
        std::swap(flat[static_cast<std::size_t>(i)], flat[static_cast<std::size_t>(j)]);
    }

    std::vector<DTensor> perturbed = params;
    for (std::int64_t s = 0; s < want; ++s) {
        std::int64_t idx = flat[static_cast<std::size_t>(s)];
        std::size_t pi = 0;
        while (idx >= perturbed[pi].size()) idx -= perturbed[pi++].size();

        const double orig = perturbed[pi][idx];
        perturbed[pi][idx] = orig + eps;
        const double fp = detail::eval_program(f, perturbed);
        perturbed[pi][idx] = orig - eps;
        const double fm = detail::eval_program(f, perturbed);
        perturbed[pi][idx] = orig;

        const double fd = (fp - fm) / (2.0 * eps);
        const double analytic = tape.grad(ids[pi])[idx];
        const double denom = std::max({std::abs(analytic), std::abs(fd), 1e-6});
        report.max_rel_err = std::max(report.max_rel_err, std::abs(analytic - fd) / denom);
    }
    report.coords_checked = static_cast<int>(want);
    return report;
}

}  // namespace bseg
