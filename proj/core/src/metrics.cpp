#include "bseg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "bseg/error.hpp"

namespace bseg {

ConfusionCounts confusion(const Tensor& pred, const Tensor& gt) {
    if (pred.dims() != gt.dims()) {
        throw ShapeError("confusion: pred dims " + dims_str(pred.dims()) + " != gt dims " +
                         dims_str(gt.dims()));
    }
    ConfusionCounts c;
    const float* p = pred.data();
    const float* g = gt.data();
    for (std::int64_t i = 0; i < pred.size(); ++i) {
        const bool pp = p[i] > 0.5f;
        const bool gg = g[i] > 0.5f;
        if (pp && gg) {
            ++c.tp;
        } else if (pp && !gg) {
            ++c.fp;
        } else if (!pp && gg) {
            ++c.fn;
        } else {
            ++c.tn;
        }
    }
    return c;
}

MetricRecord metrics(const ConfusionCounts& c) {
    MetricRecord r;
    const double tp = static_cast<double>(c.tp);
    const double fp = static_cast<double>(c.fp);
    const double fn = static_cast<double>(c.fn);
    const double tn = static_cast<double>(c.tn);
    r.empty_gt = (c.tp + c.fn == 0);
    r.accuracy = (tp + tn) / static_cast<double>(c.total());

    if (r.empty_gt) {
        const bool pred_empty = (c.tp + c.fp == 0);
        const double v = pred_empty ? 1.0 : 0.0;
        r.jac = r.dice = r.f2 = r.ppv = r.recall = v;
        return r;
    }
    r.jac = tp / (tp + fp + fn);
    r.dice = 2.0 * tp / (2.0 * tp + fp + fn);
    r.recall = tp / (tp + fn);
    r.f2 = 5.0 * tp / (5.0 * tp + 4.0 * fn + fp);
    r.ppv = (c.tp + c.fp == 0) ? 0.0 : tp / (tp + fp);
    return r;
}

SplitReport aggregate(const std::vector<MetricRecord>& records, std::string split) {
    if (records.empty()) throw InputError("aggregate: empty record list for split '" + split + "'");
    SplitReport rep;
    rep.split = std::move(split);
    rep.n = static_cast<int>(records.size());
    const double n = static_cast<double>(records.size());
    for (const auto& r : records) {
        const auto v = r.values();
        for (int m = 0; m < 6; ++m) rep.mean[static_cast<std::size_t>(m)] += v[static_cast<std::size_t>(m)];
    }
    for (auto& m : rep.mean) m /= n;
    for (const auto& r : records) {
        const auto v = r.values();
        for (int m = 0; m < 6; ++m) {
            const double d = v[static_cast<std::size_t>(m)] - rep.mean[static_cast<std::size_t>(m)];
            rep.stddev[static_cast<std::size_t>(m)] += d * d;
        }
    }
    for (auto& s : rep.stddev) s = std::sqrt(s / n);
    return rep;
}

namespace {

const SplitReport& report_for(const std::map<std::string, std::map<std::string, SplitReport>>& reports,
                              const std::string& method, const std::string& split) {
    const auto mit = reports.find(method);
    if (mit == reports.end()) throw InputError("gap_report: missing method '" + method + "'");
    const auto sit = mit->second.find(split);
    if (sit == mit->second.end()) {
        throw InputError("gap_report: method '" + method + "' is missing split '" + split + "'");
    }
    return sit->second;
}

std::string fmt(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

}  // namespace

std::vector<GapRow> gap_report(const std::map<std::string, std::map<std::string, SplitReport>>& reports,
                               const std::string& baseline,
                               const std::vector<std::pair<std::string, std::string>>& pairs) {
    if (reports.find(baseline) == reports.end()) {
        throw InputError("gap_report: baseline method '" + baseline + "' not present");
    }
    std::vector<std::string> methods;
    methods.push_back(baseline);
    for (const auto& [name, _] : reports) {
        if (name != baseline) methods.push_back(name);
    }

    std::vector<GapRow> rows;
    for (const auto& method : methods) {
        for (const auto& [a, b] : pairs) {
            const SplitReport& ra = report_for(reports, method, a);
            const SplitReport& rb = report_for(reports, method, b);
            for (int m = 0; m < 6; ++m) {
                GapRow row;
                row.method = method;
                row.metric = kMetricNames[static_cast<std::size_t>(m)];
                row.split_a = a;
                row.split_b = b;
                row.gap = ra.mean[static_cast<std::size_t>(m)] - rb.mean[static_cast<std::size_t>(m)];
                if (method != baseline) {
                    const SplitReport& ba = report_for(reports, baseline, a);
                    const SplitReport& bb = report_for(reports, baseline, b);
                    const double base_gap =
                        ba.mean[static_cast<std::size_t>(m)] - bb.mean[static_cast<std::size_t>(m)];
                    if (base_gap != 0.0) {
                        row.percent_decrease = (base_gap - row.gap) / std::abs(base_gap) * 100.0;
                    }
                }
                rows.push_back(std::move(row));
            }
        }
    }
    return rows;
}

std::string split_reports_csv(const std::vector<SplitReport>& reports) {
    std::ostringstream os;
    os << "split,n";
    for (const char* name : kMetricNames) os << "," << name << "_mean," << name << "_std";
    os << "\n";
    for (const auto& r : reports) {
        os << r.split << "," << r.n;
        for (int m = 0; m < 6; ++m) {
            os << "," << fmt(r.mean[static_cast<std::size_t>(m)]) << ","
               << fmt(r.stddev[static_cast<std::size_t>(m)]);
        }
        os << "\n";
    }
    return os.str();
}

std::string gap_table_csv(const std::vector<GapRow>& rows, bool with_percent) {
    std::ostringstream os;
    os << "method,metric,split_a,split_b,gap";
    if (with_percent) os << ",percent_decrease_vs_baseline";
    os << "\n";
    for (const auto& r : rows) {
        os << r.method << "," << r.metric << "," << r.split_a << "," << r.split_b << ","
           << fmt(r.gap);
        if (with_percent) os << "," << (r.percent_decrease ? fmt(*r.percent_decrease) : "n/a");
        os << "\n";
    }
    return os.str();
}

std::string gap_table_markdown(const std::vector<GapRow>& rows, bool with_percent) {
    std::vector<std::array<std::string, 6>> cells;
    cells.push_back({"method", "metric", "split A", "split B", "gap", "decrease vs baseline (%)"});
    for (const auto& r : rows) {
        cells.push_back({r.method, r.metric, r.split_a, r.split_b, fmt(r.gap),
                         r.percent_decrease ? fmt(*r.percent_decrease) : "n/a"});
    }
    const std::size_t ncol = with_percent ? 6 : 5;
    std::array<std::size_t, 6> width{};
    for (const auto& row : cells) {
        for (std::size_t c = 0; c < ncol; ++c) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        os << "|";
        for (std::size_t c = 0; c < ncol; ++c) {
            os << " " << cells[i][c] << std::string(width[c] - cells[i][c].size(), ' ') << " |";
        }
        os << "\n";
        if (i == 0) {
            os << "|";
            for (std::size_t c = 0; c < ncol; ++c) os << std::string(width[c] + 2, '-') << "|";
            os << "\n";
        }
    }
    return os.str();
}

std::string per_image_csv(const std::vector<std::string>& ids,
                          const std::vector<MetricRecord>& records) {
    std::ostringstream os;
    os << "image";
    for (const char* name : kMetricNames) os << "," << name;
    os << ",empty_gt\n";
    for (std::size_t i = 0; i < records.size(); ++i) {
        os << ids[i];
        for (double v : records[i].values()) os << "," << fmt(v);
        os << "," << (records[i].empty_gt ? 1 : 0) << "\n";
    }
    return os.str();
}

}  // namespace bseg
