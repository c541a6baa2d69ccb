#pragma once

#include <string>
#include <vector>

#include "bseg/model.hpp"

namespace bseg {

// One full set of network weights captured during a sampling phase.
struct Snapshot {
    ModelParams params;
    int cycle = 0;   // 1-based
    int epoch = 0;   // global 0-based epoch at capture
    double lr = 0.0; // step size at capture

    bool operator==(const Snapshot&) const = default;
};

// Ordered posterior sample set; snapshot order is strictly increasing in
// (cycle, epoch).
class PosteriorEnsemble {
public:
    void append(Snapshot s) {
        if (!snapshots_.empty()) {
            const Snapshot& last = snapshots_.back();
            if (s.cycle < last.cycle || (s.cycle == last.cycle && s.epoch <= last.epoch)) {
                throw InputError("ensemble: snapshots must be strictly increasing in (cycle, epoch)");
            }
        }
        snapshots_.push_back(std::move(s));
    }

    int size() const { return static_cast<int>(snapshots_.size()); }
    bool empty() const { return snapshots_.empty(); }

    const std::vector<Snapshot>& snapshots() const { return snapshots_; }
    const Snapshot& operator[](int i) const { return snapshots_[static_cast<std::size_t>(i)]; }

    // Snapshots from cycles strictly before `cycle` (the ones available to the
    // uncertainty weighting while that cycle trains).
    PosteriorEnsemble completed_before_cycle(int cycle) const {
        PosteriorEnsemble out;
        for (const auto& s : snapshots_) {
            if (s.cycle < cycle) out.snapshots_.push_back(s);
        }
        return out;
    }

    bool operator==(const PosteriorEnsemble&) const = default;

private:
    std::vector<Snapshot> snapshots_;
};

}  // namespace bseg
