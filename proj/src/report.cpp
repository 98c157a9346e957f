#include "bwsq/report.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "bwsq/csv.hpp"
#include "bwsq/error.hpp"
#include "json.hpp"

namespace bwsq {

std::string_view to_string(BinningPolicy p) { return p == BinningPolicy::EqualWidth ? "equal-width" : "quantile"; }

ClassBinning ClassBinning::equal_width() { return {{0.2, 0.4, 0.6, 0.8}, {1, 2, 3, 4, 5}, BinningPolicy::EqualWidth}; }

namespace {

double quantile_of(const std::vector<double>& sorted, double q) {
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

void check_score(double s, const std::string& id = {}) {
    if (!(s >= 0.0 && s <= 1.0)) {
        throw InvalidArgument("score " + csv::format_number(s) + (id.empty() ? "" : " of '" + id + "'") +
                              " is outside [0, 1]");
    }
}

}  // namespace

ClassBinning ClassBinning::quantile(const std::vector<double>& scores) {
    if (scores.size() < 2) throw InvalidArgument("quantile binning needs at least two scores");
    for (double s : scores) check_score(s);
    auto sorted = scores;
    std::sort(sorted.begin(), sorted.end());
    ClassBinning b{{}, {1, 2, 3, 4, 5}, BinningPolicy::Quantile};
    for (int i = 1; i < 5; ++i) b.edges.push_back(quantile_of(sorted, i / 5.0));
    b.validate();
    return b;
}

void ClassBinning::validate() const {
    if (classes.size() != edges.size() + 1) throw InvalidArgument("binning: need one more class than edges");
    for (std::size_t i = 0; i < edges.size(); ++i) {
        if (!(edges[i] > 0.0 && edges[i] < 1.0)) throw InvalidArgument("binning: edges must lie inside (0, 1)");
        if (i > 0 && !(edges[i] > edges[i - 1])) {
            throw InvalidArgument("binning: edges must be strictly increasing (quantiles collapsed on tied scores?)");
        }
    }
    for (int c : classes) {
        if (c < 1 || c > kMaxClass) throw InvalidArgument("binning: classes must lie in 1..5");
    }
}

int ClassBinning::classify(double score) const {
    check_score(score);
    const auto bin = std::upper_bound(edges.begin(), edges.end(), score) - edges.begin();
    return classes[static_cast<std::size_t>(bin)];
}

std::vector<BinnedRecord> bin_scores(const std::vector<ScoreRecord>& scores, const ClassBinning& binning,
                                     const std::map<std::string, int>& flags) {
    binning.validate();
    std::vector<BinnedRecord> out;
    out.reserve(scores.size());
    for (const auto& s : scores) {
        check_score(s.norm_score, s.record_id);
        BinnedRecord r{s.record_id, s.norm_score, 0, false};
        if (auto it = flags.find(s.record_id); it != flags.end()) {
            if (it->second != 0 && it->second != -1) throw InvalidArgument("flag classes must be 0 or -1");
            r.frequency_class = it->second;
            r.from_flag = true;
        } else {
            r.frequency_class = binning.classify(s.norm_score);
        }
        out.push_back(std::move(r));
    }
    return out;
}

std::map<std::string, int> flags_from_labels(const Corpus& corpus) {
    std::map<std::string, int> flags;
    for (const auto& r : corpus) {
        if (r.multi_label && *r.multi_label <= 0) {
            flags[r.record_id] = *r.multi_label;
        } else if (!r.multi_label && r.binary_label && *r.binary_label == 0) {
            flags[r.record_id] = 0;
        }
    }
    return flags;
}

std::string binned_to_csv(const std::vector<BinnedRecord>& rows) {
    std::ostringstream out;
    csv::write_row(out, {"record_id", "norm_score", "class", "source"});
    for (const auto& r : rows) {
        csv::write_row(out, {r.record_id, csv::format_number(r.norm_score), std::to_string(r.frequency_class),
                             r.from_flag ? "flag" : "score"});
    }
    return out.str();
}

std::vector<HistogramBin> histogram(const std::vector<double>& values, int bins) {
    if (bins < 1) throw InvalidArgument("histogram needs at least one bin");
    std::vector<HistogramBin> out(static_cast<std::size_t>(bins));
    for (int i = 0; i < bins; ++i) {
        out[static_cast<std::size_t>(i)].left = static_cast<double>(i) / bins;
        out[static_cast<std::size_t>(i)].right = static_cast<double>(i + 1) / bins;
    }
    for (double v : values) {
        check_score(v);
        auto i = static_cast<std::size_t>(std::floor(v * bins));
        if (i >= out.size()) i = out.size() - 1;
        ++out[i].count;
    }
    return out;
}

SpeciesDistribution species_distribution(const Corpus& corpus, const std::vector<ScoreRecord>& scores,
                                         const std::string& species_id, int bins) {
    std::map<std::string, double> by_id;
    for (const auto& s : scores) by_id[s.record_id] = s.norm_score;

    SpeciesDistribution d;
    d.species_id = species_id;
    bool known = false;
    std::vector<double> values;
    for (const auto& r : corpus) {
        if (r.species_id != species_id) continue;
        known = true;
        auto it = by_id.find(r.record_id);
        if (it == by_id.end()) continue;
        d.by_office[r.office_id].push_back(it->second);
        values.push_back(it->second);
    }
    if (!known) throw InvalidArgument("unknown species '" + species_id + "'");
    if (values.empty()) throw InvalidArgument("species '" + species_id + "' has no scored records");

    d.histogram = histogram(values, bins);
    d.n = values.size();
    d.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(d.n);
    double ss = 0.0;
    for (double v : values) ss += (v - d.mean) * (v - d.mean);
    d.sd = std::sqrt(ss / static_cast<double>(d.n));
    std::sort(values.begin(), values.end());
    d.median = quantile_of(values, 0.5);
    d.min = values.front();
    d.max = values.back();
    return d;
}

std::string histogram_to_csv(const std::vector<HistogramBin>& bins) {
    std::ostringstream out;
    csv::write_row(out, {"bin_left", "bin_right", "count"});
    for (const auto& b : bins) {
        csv::write_row(out, {csv::format_number(b.left), csv::format_number(b.right), std::to_string(b.count)});
    }
    return out.str();
}

std::string distribution_summary_json(const SpeciesDistribution& d) {
    nlohmann::json offices = nlohmann::json::object();
    for (const auto& [office, values] : d.by_office) offices[office] = values;
    nlohmann::json j{{"species_id", d.species_id}, {"n", d.n},           {"mean", d.mean},
                     {"median", d.median},         {"sd", d.sd},         {"min", d.min},
                     {"max", d.max},               {"offices", offices}};
    return j.dump(2);
}

ClassScoreTable class_vs_score_table(const std::map<std::string, int>& labels,
                                     const std::vector<ScoreRecord>& scores) {
    std::map<int, std::vector<double>> groups;
    for (const auto& s : scores) {
        auto it = labels.find(s.record_id);
        if (it != labels.end()) groups[it->second].push_back(s.norm_score);
    }
    if (groups.empty()) throw InvalidArgument("class-vs-score: no record carries both a label and a score");

    ClassScoreTable t;
    for (const auto& [cls, values] : groups) {
        ClassScoreSummary row;
        row.frequency_class = cls;
        row.count = values.size();
        row.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
        const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
        row.min = *lo;
        row.max = *hi;
        t.rows.push_back(row);
    }
    for (std::size_t i = 1; i < t.rows.size(); ++i) {
        if (!(t.rows[i].mean > t.rows[i - 1].mean)) {
            t.violations.emplace_back(t.rows[i - 1].frequency_class, t.rows[i].frequency_class);
        }
    }
    return t;
}

std::map<std::string, int> multi_labels(const Corpus& corpus) {
    std::map<std::string, int> out;
    for (const auto& r : corpus) {
        if (r.multi_label) out[r.record_id] = *r.multi_label;
    }
    return out;
}

std::string class_table_to_csv(const ClassScoreTable& t) {
    std::ostringstream out;
    csv::write_row(out, {"class", "count", "mean", "min", "max"});
    for (const auto& r : t.rows) {
        csv::write_row(out, {std::to_string(r.frequency_class), std::to_string(r.count), csv::format_number(r.mean),
                             csv::format_number(r.min), csv::format_number(r.max)});
    }
    return out.str();
}

}  // namespace bwsq
