#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "bseg/tensor.hpp"

namespace bseg {

struct ConfusionCounts {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

// Canonical metric order used in every report.
inline constexpr std::array<const char*, 6> kMetricNames = {"jac", "dice", "f2",
                                                            "ppv", "recall", "acc"};

struct MetricRecord {
    double jac = 0, dice = 0, f2 = 0, ppv = 0, recall = 0, accuracy = 0;
    bool empty_gt = false;

    std::array<double, 6> values() const { return {jac, dice, f2, ppv, recall, accuracy}; }
};

struct SplitReport {
    std::string split;
    int n = 0;
    std::array<double, 6> mean{};
    std::array<double, 6> stddev{};  // population std over images
};

// Pixel-wise counts with foreground (value > 0.5) as positive; masks [H,W].
ConfusionCounts confusion(const Tensor& pred, const Tensor& gt);

// jac, dice, f2 (beta=2), ppv, recall, accuracy. Degenerate conventions:
//   gt empty & pred empty -> jac=dice=f2=ppv=recall=1
//   gt empty & pred non-empty -> those five = 0
//   gt non-empty & pred empty -> ppv = 0 (rest follow from the formulas)
MetricRecord metrics(const ConfusionCounts& counts);

SplitReport aggregate(const std::vector<MetricRecord>& records, std::string split);

struct GapRow {
    std::string method;
    std::string metric;
    std::string split_a;
    std::string split_b;
    double gap = 0.0;                         // mean(split_a) - mean(split_b)
    std::optional<double> percent_decrease;   // vs baseline; absent for the baseline
                                              // itself or when the baseline gap is 0
};

// reports: method -> split -> SplitReport. Baseline rows come first, then the
// other methods in name order.
std::vector<GapRow> gap_report(const std::map<std::string, std::map<std::string, SplitReport>>& reports,
                               const std::string& baseline,
                               const std::vector<std::pair<std::string, std::string>>& pairs);

// CSV / markdown emission (formats are golden-tested).
std::string split_reports_csv(const std::vector<SplitReport>& reports);
std::string gap_table_csv(const std::vector<GapRow>& rows, bool with_percent);
std::string gap_table_markdown(const std::vector<GapRow>& rows, bool with_percent);

// Per-image CSV used by the optional eval dump.
std::string per_image_csv(const std::vector<std::string>& ids,
                          const std::vector<MetricRecord>& records);

}  // namespace bseg
