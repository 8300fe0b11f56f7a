#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chmnat/common.hpp"
#include "chmnat/models.hpp"

namespace chmnat {

// ---------------------------------------------------------------------------
// Binary classification metrics. Class 1 (high naturalness) is positive.

struct ConfusionCounts {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }

    void add(int predicted, int label) {
        if (label == 1)
            (predicted == 1 ? tp : fn)++;
        else
            (predicted == 1 ? fp : tn)++;
    }
};

struct Metrics {
    double accuracy = 0;
    double precision = 0;
    double recall = 0;
    double f1 = 0;
    double balanced_accuracy = 0;
    bool degenerate = false; // some ratio had a zero denominator
};

inline Metrics metrics(const ConfusionCounts& c) {
    if (c.total() == 0) throw ContractError("metrics: empty confusion counts");
    Metrics m;
    auto ratio = [&m](std::size_t num, std::size_t den) {
        if (den == 0) {
            m.degenerate = true;
            return 0.0;
        }
        return static_cast<double>(num) / static_cast<double>(den);
    };
    m.accuracy = static_cast<double>(c.tp + c.tn) / static_cast<double>(c.total());
    m.precision = ratio(c.tp, c.tp + c.fp);
    m.recall = ratio(c.tp, c.tp + c.fn);
    double tnr = ratio(c.tn, c.tn + c.fp);
    m.balanced_accuracy = 0.5 * (m.recall + tnr);
    double pr = m.precision + m.recall;
    if (pr > 0)
        m.f1 = 2.0 * m.precision * m.recall / pr;
    else
        m.degenerate = true;
    return m;
}

inline ConfusionCounts confusion_of(const TrainedModel& model, const Dataset& data) {
    ConfusionCounts c;
    for (const DataRow& r : data.rows) c.add(model.predict_raw(r.features), r.label);
    return c;
}

inline double dataset_accuracy(const TrainedModel& model, const Dataset& data) {
    if (data.rows.empty()) throw ContractError("dataset_accuracy: empty dataset");
    std::size_t ok = 0;
    for (const DataRow& r : data.rows)
        if (model.predict_raw(r.features) == r.label) ++ok;
    return static_cast<double>(ok) / static_cast<double>(data.rows.size());
}

// ---------------------------------------------------------------------------
// Single-feature optimal threshold

struct ThresholdRow {
    std::string feature;
    double threshold = 0;
    bool high_above = true; // true: value > threshold predicts class 1
    double train_accuracy = 0;
    double valid_accuracy = -1; // -1 when no validation set was supplied
};

// Sweeps candidate thresholds on one feature and returns the cut with the
// best training accuracy. Candidates are the midpoints between consecutive
// distinct sorted values plus one sentinel below the minimum, so a constant
// predictor is always reachable and the accuracy can never fall below the
// class prior. Ties prefer the smallest threshold, then the above-is-high
// orientation.
inline ThresholdRow optimal_threshold(const Dataset& train, const std::string& feature,
                                      const Dataset* valid = nullptr) {
    auto it = std::find(train.feature_names.begin(), train.feature_names.end(), feature);
    if (it == train.feature_names.end())
        throw ConfigError("optimal_threshold: unknown feature '" + feature + "'");
    std::size_t fi = static_cast<std::size_t>(it - train.feature_names.begin());
    train.check();
    if (train.rows.empty()) throw ContractError("optimal_threshold: empty training set");

    bool saw0 = false, saw1 = false;
    std::vector<double> values;
    values.reserve(train.rows.size());
    for (const DataRow& r : train.rows) {
        values.push_back(r.features[fi]);
        (r.label ? saw1 : saw0) = true;
    }
    if (!saw0 || !saw1)
        throw ContractError("optimal_threshold: training set has a single class");

    std::vector<double> sorted = values;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> candidates;
    candidates.push_back(sorted.front() - 1.0); // everything on the high side
    for (std::size_t i = 0; i + 1 < sorted.size(); ++i)
        if (sorted[i] != sorted[i + 1]) candidates.push_back((sorted[i] + sorted[i + 1]) * 0.5);

    auto accuracy_at = [&](const Dataset& d, std::size_t col, double t, bool above) {
        std::size_t ok = 0;
        for (const DataRow& r : d.rows) {
            int pred = (r.features[col] > t) == above ? 1 : 0;
            if (pred == r.label) ++ok;
        }
        return static_cast<double>(ok) / static_cast<double>(d.rows.size());
    };

    ThresholdRow best;
    best.feature = feature;
    best.train_accuracy = -1;
    for (double t : candidates)
        for (bool above : {true, false}) {
            double acc = accuracy_at(train, fi, t, above);
            if (acc > best.train_accuracy) {
                best.train_accuracy = acc;
                best.threshold = t;
                best.high_above = above;
            }
        }
    if (valid && !valid->rows.empty()) {
        auto vit = std::find(valid->feature_names.begin(), valid->feature_names.end(), feature);
        if (vit == valid->feature_names.end())
            throw ConfigError("optimal_threshold: feature '" + feature +
                              "' missing from validation set");
        best.valid_accuracy = accuracy_at(
            *valid, static_cast<std::size_t>(vit - valid->feature_names.begin()),
            best.threshold, best.high_above);
    }
    return best;
}

inline std::vector<ThresholdRow> threshold_table(const Dataset& train,
                                                 const Dataset* valid = nullptr) {
    std::vector<ThresholdRow> out;
    for (const std::string& f : train.feature_names)
        out.push_back(optimal_threshold(train, f, valid));
    return out;
}

// ---------------------------------------------------------------------------
// Experiment protocols. A Trainer wraps a model kind plus its options so the
// experiments can retrain per configuration.

using Trainer = std::function<TrainedModel(const Dataset& train, const Dataset* valid)>;

struct NamedTrainer {
    std::string name;
    Trainer train;
};

inline Trainer make_trainer(const TrainOptions& opt) {
    return [opt](const Dataset& train, const Dataset* valid) {
        return train_model(train, valid, opt);
    };
}

struct AreaPercentileRow {
    double percentile_low = 0;
    bool skipped = false;
    double area_min = 0;
    double area_max = 0;
    std::size_t n_train = 0;
    std::size_t n_valid = 0;
    std::size_t n_test = 0;
    double test_accuracy = 0;
};

// Trains on the rows whose area sits in the [P, 100] percentile range and
// evaluates on validation/test rows restricted to the surviving area range.
// Percentiles use the nearest-rank rule: the bottom floor(P/100 * n) rows of
// the area-sorted training set are dropped.
inline std::vector<AreaPercentileRow> area_percentile_experiment(
    const Dataset& train, const Dataset& valid, const Dataset& test,
    const std::vector<double>& percentile_lows, const Trainer& trainer) {
    train.check();
    valid.check();
    test.check();

    std::vector<std::size_t> order(train.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::tie(train.rows[a].area_m2, train.rows[a].source_id) <
               std::tie(train.rows[b].area_m2, train.rows[b].source_id);
    });

    std::vector<AreaPercentileRow> out;
    for (double p : percentile_lows) {
        AreaPercentileRow row;
        row.percentile_low = p;
        if (p < 0 || p > 100) throw ConfigError("area percentile outside [0, 100]");
        std::size_t drop = static_cast<std::size_t>(
            std::floor(p / 100.0 * static_cast<double>(order.size())));
        if (drop >= order.size()) {
            row.skipped = true;
            out.push_back(row);
            continue;
        }
        Dataset sub;
        sub.feature_names = train.feature_names;
        for (std::size_t k = drop; k < order.size(); ++k) sub.rows.push_back(train.rows[order[k]]);
        row.area_min = sub.rows.front().area_m2;
        row.area_max = sub.rows.back().area_m2;
        row.n_train = sub.rows.size();

        auto in_range = [&](const DataRow& r) {
            return r.area_m2 >= row.area_min && r.area_m2 <= row.area_max;
        };
        Dataset v, t;
        v.feature_names = valid.feature_names;
        t.feature_names = test.feature_names;
        for (const DataRow& r : valid.rows)
            if (in_range(r)) v.rows.push_back(r);
        for (const DataRow& r : test.rows)
            if (in_range(r)) t.rows.push_back(r);
        row.n_valid = v.rows.size();
        row.n_test = t.rows.size();
        if (t.rows.empty()) {
            row.skipped = true;
            out.push_back(row);
            continue;
        }
        TrainedModel model = trainer(sub, v.rows.empty() ? nullptr : &v);
        row.test_accuracy = dataset_accuracy(model, t);
        out.push_back(row);
    }
    return out;
}

struct FeatureSubsetRow {
    std::vector<std::string> subset;
    std::string model;
    double test_accuracy = 0;
};

// Retrains each model kind on each feature subset. Unknown or duplicated
// feature names surface as config errors from the selection step.
inline std::vector<FeatureSubsetRow> feature_subset_experiment(
    const Dataset& train, const Dataset& valid, const Dataset& test,
    const std::vector<std::vector<std::string>>& subsets,
    const std::vector<NamedTrainer>& trainers) {
    std::vector<FeatureSubsetRow> out;
    for (const std::vector<std::string>& subset : subsets) {
        Dataset tr = train.select_features(subset);
        Dataset va = valid.select_features(subset);
        Dataset te = test.select_features(subset);
        for (const NamedTrainer& nt : trainers) {
            FeatureSubsetRow row;
            row.subset = subset;
            row.model = nt.name;
            TrainedModel m = nt.train(tr, va.rows.empty() ? nullptr : &va);
            row.test_accuracy = dataset_accuracy(m, te);
            out.push_back(row);
        }
    }
    return out;
}

struct ConfidenceBin {
    double lo = 0;
    double hi = 0;
    std::size_t support = 0;
    double support_pct = 0;
    bool has_accuracy = false; // false for empty bins
    double accuracy = 0;
};

inline const std::vector<double>& default_confidence_edges() {
    static const std::vector<double> edges{0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    return edges;
}

// Buckets test rows by prediction confidence max(p, 1-p). Bins are closed
// on the left; the last bin also includes its upper edge so a confidence of
// exactly 1.0 is counted.
inline std::vector<ConfidenceBin> confidence_bins(
    const std::function<double(const DataRow&)>& proba, const Dataset& test,
    const std::vector<double>& edges = default_confidence_edges()) {
    if (edges.size() < 2) throw ConfigError("confidence bins need at least two edges");
    for (std::size_t i = 0; i + 1 < edges.size(); ++i)
        if (!(edges[i] < edges[i + 1])) throw ConfigError("confidence bin edges must increase");

    std::vector<ConfidenceBin> bins(edges.size() - 1);
    std::vector<std::size_t> correct(bins.size(), 0);
    for (std::size_t b = 0; b < bins.size(); ++b) {
        bins[b].lo = edges[b];
        bins[b].hi = edges[b + 1];
    }
    for (const DataRow& r : test.rows) {
        double p = proba(r);
        double conf = std::max(p, 1.0 - p);
        int pred = p >= 0.5 ? 1 : 0;
        std::size_t b = bins.size();
        for (std::size_t i = 0; i < bins.size(); ++i) {
            bool last = i + 1 == bins.size();
            if (conf >= bins[i].lo && (conf < bins[i].hi || (last && conf <= bins[i].hi))) {
                b = i;
                break;
            }
        }
        if (b == bins.size()) continue; // confidence outside the binned range
        bins[b].support++;
        if (pred == r.label) correct[b]++;
    }
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (!test.rows.empty())
            bins[b].support_pct =
                100.0 * static_cast<double>(bins[b].support) / static_cast<double>(test.rows.size());
        if (bins[b].support > 0) {
            bins[b].has_accuracy = true;
            bins[b].accuracy =
                static_cast<double>(correct[b]) / static_cast<double>(bins[b].support);
        }
    }
    return bins;
}

inline std::vector<ConfidenceBin> confidence_bins_experiment(
    const TrainedModel& model, const Dataset& test,
    const std::vector<double>& edges = default_confidence_edges()) {
    return confidence_bins(
        [&model](const DataRow& r) { return model.predict_proba_raw(r.features); }, test, edges);
}

} // namespace chmnat
