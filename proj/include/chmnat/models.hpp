#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "chmnat/common.hpp"

namespace chmnat {

// One labeled example. label is 0/1 for training data; -1 marks rows that
// only exist to be predicted.
struct DataRow {
    std::vector<double> features;
    int label = -1;
    double area_m2 = 0;
    std::string source_id;
};

struct Dataset {
    std::vector<std::string> feature_names;
    std::vector<DataRow> rows;

    std::size_t n_features() const { return feature_names.size(); }

    void check(bool require_labels = true) const {
        for (const DataRow& r : rows) {
            if (r.features.size() != feature_names.size())
                throw ContractError("dataset: row '" + r.source_id + "' has " +
                                    std::to_string(r.features.size()) + " features, expected " +
                                    std::to_string(feature_names.size()));
            if (require_labels && r.label != 0 && r.label != 1)
                throw ContractError("dataset: row '" + r.source_id + "' is unlabeled");
        }
    }

    // Restriction to a feature subset, in the order given.
    Dataset select_features(const std::vector<std::string>& names) const {
        std::vector<std::size_t> idx;
        for (const std::string& n : names) {
            auto it = std::find(feature_names.begin(), feature_names.end(), n);
            if (it == feature_names.end())
                throw ConfigError("unknown feature '" + n + "'");
            std::size_t i = static_cast<std::size_t>(it - feature_names.begin());
            if (std::find(idx.begin(), idx.end(), i) != idx.end())
                throw ConfigError("duplicate feature '" + n + "'");
            idx.push_back(i);
        }
        Dataset out;
        out.feature_names = names;
        out.rows.reserve(rows.size());
        for (const DataRow& r : rows) {
            DataRow nr;
            nr.label = r.label;
            nr.area_m2 = r.area_m2;
            nr.source_id = r.source_id;
            for (std::size_t i : idx) nr.features.push_back(r.features[i]);
            out.rows.push_back(std::move(nr));
        }
        return out;
    }
};

// Min-max scaling fitted on training rows. Constant features map to 0;
// out-of-range values (validation/test) clamp into [0,1].
struct Normalizer {
    std::vector<double> mins;
    std::vector<double> maxs;

    static Normalizer fit(const Dataset& d) {
        if (d.rows.empty()) throw ContractError("normalizer: empty dataset");
        Normalizer n;
        n.mins.assign(d.n_features(), std::numeric_limits<double>::infinity());
        n.maxs.assign(d.n_features(), -std::numeric_limits<double>::infinity());
        for (const DataRow& r : d.rows)
            for (std::size_t i = 0; i < r.features.size(); ++i) {
                n.mins[i] = std::min(n.mins[i], r.features[i]);
                n.maxs[i] = std::max(n.maxs[i], r.features[i]);
            }
        return n;
    }

    std::vector<double> transform(std::span<const double> x) const {
        if (x.size() != mins.size())
            throw ContractError("normalizer: expected " + std::to_string(mins.size()) +
                                " features, got " + std::to_string(x.size()));
        std::vector<double> out(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) {
            double span = maxs[i] - mins[i];
            double v = span > 0 ? (x[i] - mins[i]) / span : 0.0;
            out[i] = std::clamp(v, 0.0, 1.0);
        }
        return out;
    }

    Dataset transform(const Dataset& d) const {
        Dataset out = d;
        for (DataRow& r : out.rows) r.features = transform(r.features);
        return out;
    }
};

// ---------------------------------------------------------------------------
// Model types. All predict_proba overloads expect features already passed
// through the model's Normalizer; TrainedModel does that for callers.

struct PerceptronModel {
    std::vector<double> weights; // weights[0] is the bias
    double margin_scale = 1.0;   // std of training scores, scales erf
};

struct LogisticModel {
    std::vector<double> beta; // beta[0] is the intercept
    double lambda = 1.0;
};

struct TreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0;
    int left = -1;
    int right = -1;
    std::size_t count0 = 0; // training samples per class at this node
    std::size_t count1 = 0;
};

struct DecisionTreeModel {
    std::vector<TreeNode> nodes; // nodes[0] is the root
    int max_depth = 8;
};

inline double linear_score(const PerceptronModel& m, std::span<const double> x) {
    if (x.size() + 1 != m.weights.size())
        throw ContractError("perceptron: expected " + std::to_string(m.weights.size() - 1) +
                            " features, got " + std::to_string(x.size()));
    double s = m.weights[0];
    for (std::size_t i = 0; i < x.size(); ++i) s += m.weights[i + 1] * x[i];
    return s;
}

inline double linear_score(const LogisticModel& m, std::span<const double> x) {
    if (x.size() + 1 != m.beta.size())
        throw ContractError("logistic: expected " + std::to_string(m.beta.size() - 1) +
                            " features, got " + std::to_string(x.size()));
    double s = m.beta[0];
    for (std::size_t i = 0; i < x.size(); ++i) s += m.beta[i + 1] * x[i];
    return s;
}

inline double sigmoid(double t) {
    if (t >= 0) return 1.0 / (1.0 + std::exp(-t));
    double e = std::exp(t);
    return e / (1.0 + e);
}

inline double predict_proba(const PerceptronModel& m, std::span<const double> x) {
    double s = linear_score(m, x);
    return 0.5 * (1.0 + std::erf(s / (m.margin_scale * std::sqrt(2.0))));
}

inline double predict_proba(const LogisticModel& m, std::span<const double> x) {
    return sigmoid(linear_score(m, x));
}

inline double predict_proba(const DecisionTreeModel& m, std::span<const double> x) {
    if (m.nodes.empty()) throw ContractError("tree: model has no nodes");
    int i = 0;
    while (m.nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const TreeNode& n = m.nodes[static_cast<std::size_t>(i)];
        if (static_cast<std::size_t>(n.feature) >= x.size())
            throw ContractError("tree: expected more features than " + std::to_string(x.size()));
        i = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    const TreeNode& leaf = m.nodes[static_cast<std::size_t>(i)];
    return static_cast<double>(leaf.count1) / static_cast<double>(leaf.count0 + leaf.count1);
}

// Class decision: 1 when p_high >= 0.5 (a score of exactly zero counts as
// the high class).
template <typename Model>
int predict(const Model& m, std::span<const double> x) {
    return predict_proba(m, x) >= 0.5 ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Perceptron training

struct PerceptronOptions {
    double eta = 0.1;
    int max_epochs = 200;
    int patience = 20; // epochs without validation improvement before stopping
    std::uint64_t seed = 0;
};

struct PerceptronTraining {
    PerceptronModel model;
    int epochs_run = 0;
    double best_validation_accuracy = -1;
};

namespace detail {

inline double accuracy_of(const PerceptronModel& m, const Dataset& d) {
    if (d.rows.empty()) return 0;
    std::size_t ok = 0;
    for (const DataRow& r : d.rows) {
        int y = linear_score(m, r.features) >= 0 ? 1 : 0;
        if (y == r.label) ++ok;
    }
    return static_cast<double>(ok) / static_cast<double>(d.rows.size());
}

} // namespace detail

// Online perceptron: zero initial weights, one pass per epoch in a fresh
// seeded shuffle, w += eta * (d - y) * x with x augmented by a leading 1.
// With a validation set, keeps the weight snapshot with the best validation
// accuracy and stops after `patience` epochs without improvement.
inline PerceptronTraining train_perceptron(const Dataset& train, const PerceptronOptions& opt,
                                           const Dataset* valid = nullptr) {
    train.check();
    if (train.rows.empty()) throw ContractError("train_perceptron: empty training set");
    if (valid) valid->check();
    std::size_t n = train.n_features();

    PerceptronModel m;
    m.weights.assign(n + 1, 0.0);
    Rng rng(opt.seed);
    std::vector<std::size_t> order(train.rows.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    PerceptronModel best = m;
    double best_acc = -1;
    int stale = 0;
    int epochs = 0;
    for (int e = 0; e < opt.max_epochs; ++e) {
        rng.shuffle(order);
        for (std::size_t k : order) {
            const DataRow& r = train.rows[k];
            double s = linear_score(m, r.features);
            int y = s >= 0 ? 1 : 0;
            double delta = opt.eta * static_cast<double>(r.label - y);
            if (delta != 0) {
                m.weights[0] += delta;
                for (std::size_t i = 0; i < n; ++i) m.weights[i + 1] += delta * r.features[i];
            }
        }
        epochs = e + 1;
        if (valid) {
            double acc = detail::accuracy_of(m, *valid);
            if (acc > best_acc) {
                best_acc = acc;
                best = m;
                stale = 0;
            } else if (++stale >= opt.patience) {
                break;
            }
        }
    }
    PerceptronTraining out;
    out.model = valid ? best : m;
    out.epochs_run = epochs;
    out.best_validation_accuracy = best_acc;

    // Probability scale: spread of the training scores under the returned
    // weights. A degenerate spread falls back to 1.
    std::vector<double> scores;
    scores.reserve(train.rows.size());
    for (const DataRow& r : train.rows) scores.push_back(linear_score(out.model, r.features));
    double sd = pop_stddev(scores);
    out.model.margin_scale = sd > 0 ? sd : 1.0;
    return out;
}

// ---------------------------------------------------------------------------
// Logistic regression training

struct LogisticOptions {
    double lambda = 1.0; // L2 strength; intercept is never regularized
    double tolerance = 1e-8;
    int max_iters = 100;
};

struct LogisticTraining {
    LogisticModel model;
    bool converged = false;
    int iterations = 0;
};

// Regularized negative log-likelihood and its gradient; exposed so tests
// can check the gradient against finite differences.
inline double logistic_loss(std::span<const double> beta, const Dataset& d, double lambda) {
    double loss = 0;
    for (const DataRow& r : d.rows) {
        double z = beta[0];
        for (std::size_t i = 0; i < r.features.size(); ++i) z += beta[i + 1] * r.features[i];
        // log(1 + e^z) - d*z, computed stably on both tails.
        double log1pe = z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
        loss += log1pe - static_cast<double>(r.label) * z;
    }
    for (std::size_t i = 1; i < beta.size(); ++i) loss += 0.5 * lambda * beta[i] * beta[i];
    return loss;
}

inline std::vector<double> logistic_gradient(std::span<const double> beta, const Dataset& d,
                                             double lambda) {
    std::vector<double> g(beta.size(), 0.0);
    for (const DataRow& r : d.rows) {
        double z = beta[0];
        for (std::size_t i = 0; i < r.features.size(); ++i) z += beta[i + 1] * r.features[i];
        double e = sigmoid(z) - static_cast<double>(r.label);
        g[0] += e;
        for (std::size_t i = 0; i < r.features.size(); ++i) g[i + 1] += e * r.features[i];
    }
    for (std::size_t i = 1; i < beta.size(); ++i) g[i] += lambda * beta[i];
    return g;
}

namespace detail {

// Solves A x = b in place by Gaussian elimination with partial pivoting.
// Dimensions here are tiny (feature count + 1).
inline std::vector<double> solve_linear(std::vector<std::vector<double>> a,
                                        std::vector<double> b) {
    std::size_t n = b.size();
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t pivot = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a[r][col]) > std::abs(a[pivot][col])) pivot = r;
        std::swap(a[col], a[pivot]);
        std::swap(b[col], b[pivot]);
        double p = a[col][col];
        if (std::abs(p) < 1e-300) throw Error("singular system in logistic solver");
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = a[r][col] / p;
            if (f == 0) continue;
            for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n, 0.0);
    for (std::size_t ri = n; ri-- > 0;) {
        double v = b[ri];
        for (std::size_t c = ri + 1; c < n; ++c) v -= a[ri][c] * x[c];
        x[ri] = v / a[ri][ri];
    }
    return x;
}

} // namespace detail

// Newton iteration with step halving on the regularized log-loss.
// Deterministic: no randomness anywhere in the solve.
inline LogisticTraining train_logistic(const Dataset& train, const LogisticOptions& opt) {
    train.check();
    if (train.rows.empty()) throw ContractError("train_logistic: empty training set");
    std::size_t dim = train.n_features() + 1;

    std::vector<double> beta(dim, 0.0);
    double loss = logistic_loss(beta, train, opt.lambda);
    LogisticTraining out;
    for (int it = 0; it < opt.max_iters; ++it) {
        std::vector<double> g = logistic_gradient(beta, train, opt.lambda);
        double gmax = 0;
        for (double v : g) gmax = std::max(gmax, std::abs(v));
        out.iterations = it;
        if (gmax <= opt.tolerance) {
            out.converged = true;
            break;
        }
        // Hessian: sum sigma(1-sigma) x x^T plus lambda on non-intercept
        // diagonal.
        std::vector<std::vector<double>> h(dim, std::vector<double>(dim, 0.0));
        for (const DataRow& r : train.rows) {
            double z = beta[0];
            for (std::size_t i = 0; i < r.features.size(); ++i) z += beta[i + 1] * r.features[i];
            double s = sigmoid(z);
            double wgt = s * (1.0 - s);
            if (wgt < 1e-12) wgt = 1e-12;
            std::vector<double> x(dim);
            x[0] = 1.0;
            for (std::size_t i = 0; i < r.features.size(); ++i) x[i + 1] = r.features[i];
            for (std::size_t a = 0; a < dim; ++a)
                for (std::size_t b = 0; b < dim; ++b) h[a][b] += wgt * x[a] * x[b];
        }
        for (std::size_t i = 1; i < dim; ++i) h[i][i] += opt.lambda;

        std::vector<double> step = detail::solve_linear(h, g);
        double t = 1.0;
        bool moved = false;
        // Near the minimum a full Newton step changes the loss by less than
        // one rounding unit; the acceptance slack keeps the line search from
        // stalling on that noise while still forbidding real ascent.
        double slack = 1e-12 * (1.0 + std::abs(loss));
        for (int half = 0; half < 50; ++half) {
            std::vector<double> cand(dim);
            for (std::size_t i = 0; i < dim; ++i) cand[i] = beta[i] - t * step[i];
            double cand_loss = logistic_loss(cand, train, opt.lambda);
            if (cand_loss <= loss + slack) {
                beta = std::move(cand);
                loss = cand_loss;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if (!moved) break; // numerically stuck; metadata records non-convergence
    }
    out.model.beta = std::move(beta);
    out.model.lambda = opt.lambda;
    return out;
}

// ---------------------------------------------------------------------------
// CART training

struct TreeOptions {
    int max_depth = 8;
    int min_samples_leaf = 5;
};

namespace detail {

inline double gini_of(std::size_t c0, std::size_t c1) {
    double n = static_cast<double>(c0 + c1);
    if (n == 0) return 0;
    double p0 = static_cast<double>(c0) / n;
    double p1 = static_cast<double>(c1) / n;
    return 1.0 - p0 * p0 - p1 * p1;
}

inline int build_tree_node(const Dataset& d, std::vector<std::size_t>& samples, int depth,
                           const TreeOptions& opt, std::vector<TreeNode>& nodes) {
    std::size_t c0 = 0, c1 = 0;
    for (std::size_t i : samples) (d.rows[i].label ? c1 : c0)++;

    int self = static_cast<int>(nodes.size());
    nodes.push_back({});
    nodes.back().count0 = c0;
    nodes.back().count1 = c1;

    bool pure = c0 == 0 || c1 == 0;
    if (pure || depth >= opt.max_depth ||
        samples.size() < 2 * static_cast<std::size_t>(opt.min_samples_leaf))
        return self;

    // Best split: weighted child impurity strictly below the parent's,
    // candidates at midpoints of consecutive distinct values. Scanning
    // features and thresholds in ascending order makes "first strictly
    // better" the lowest-feature, lowest-threshold tie rule.
    double parent_score = static_cast<double>(samples.size()) * gini_of(c0, c1);
    int best_feature = -1;
    double best_threshold = 0;
    double best_score = parent_score;

    std::vector<std::pair<double, int>> vals(samples.size());
    for (std::size_t f = 0; f < d.n_features(); ++f) {
        for (std::size_t k = 0; k < samples.size(); ++k)
            vals[k] = {d.rows[samples[k]].features[f], d.rows[samples[k]].label};
        std::sort(vals.begin(), vals.end());
        std::size_t l0 = 0, l1 = 0;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
            (vals[k].second ? l1 : l0)++;
            if (vals[k].first == vals[k + 1].first) continue;
            std::size_t nl = k + 1, nr = vals.size() - nl;
            if (nl < static_cast<std::size_t>(opt.min_samples_leaf) ||
                nr < static_cast<std::size_t>(opt.min_samples_leaf))
                continue;
            double score = static_cast<double>(nl) * gini_of(l0, l1) +
                           static_cast<double>(nr) * gini_of(c0 - l0, c1 - l1);
            if (score < best_score) {
                best_score = score;
                best_feature = static_cast<int>(f);
                best_threshold = (vals[k].first + vals[k + 1].first) * 0.5;
            }
        }
    }
    if (best_feature < 0) return self;

    std::vector<std::size_t> left, right;
    for (std::size_t i : samples)
        (d.rows[i].features[static_cast<std::size_t>(best_feature)] <= best_threshold ? left
                                                                                      : right)
            .push_back(i);
    nodes[static_cast<std::size_t>(self)].feature = best_feature;
    nodes[static_cast<std::size_t>(self)].threshold = best_threshold;
    int l = build_tree_node(d, left, depth + 1, opt, nodes);
    nodes[static_cast<std::size_t>(self)].left = l;
    int r = build_tree_node(d, right, depth + 1, opt, nodes);
    nodes[static_cast<std::size_t>(self)].right = r;
    return self;
}

} // namespace detail

inline DecisionTreeModel train_tree(const Dataset& train, const TreeOptions& opt) {
    train.check();
    if (train.rows.empty()) throw ContractError("train_tree: empty training set");
    if (opt.max_depth < 0 || opt.min_samples_leaf < 1)
        throw ConfigError("train_tree: bad depth or leaf size");
    DecisionTreeModel m;
    m.max_depth = opt.max_depth;
    std::vector<std::size_t> all(train.rows.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    detail::build_tree_node(train, all, 0, opt, m.nodes);
    return m;
}

// ---------------------------------------------------------------------------
// Wrapper: kind dispatch, normalization, serialization

enum class ModelKind { perceptron, logistic, tree };

inline std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::perceptron: return "perceptron";
        case ModelKind::logistic: return "logistic";
        default: return "tree";
    }
}

inline ModelKind model_kind_from_string(const std::string& s) {
    if (s == "perceptron") return ModelKind::perceptron;
    if (s == "logistic") return ModelKind::logistic;
    if (s == "tree") return ModelKind::tree;
    throw ParseError("unknown model kind '" + s + "'");
}

struct TrainOptions {
    ModelKind kind = ModelKind::logistic;
    PerceptronOptions perceptron;
    LogisticOptions logistic;
    TreeOptions tree;
};

// A trained classifier plus everything needed to apply it to raw feature
// vectors: the feature subset and the fitted normalizer.
struct TrainedModel {
    ModelKind kind = ModelKind::logistic;
    std::vector<std::string> feature_names;
    Normalizer normalizer;
    std::variant<PerceptronModel, LogisticModel, DecisionTreeModel> variant;
    std::map<std::string, std::string> metadata;

    double predict_proba_raw(std::span<const double> raw) const {
        std::vector<double> x = normalizer.transform(raw);
        return std::visit([&](const auto& m) { return predict_proba(m, x); }, variant);
    }
    int predict_raw(std::span<const double> raw) const {
        return predict_proba_raw(raw) >= 0.5 ? 1 : 0;
    }
};

// Trains the requested kind on raw features: fits the normalizer on the
// training rows, trains on the transformed data, and records training
// metadata. The validation set (perceptron early stopping) goes through
// the same normalizer.
inline TrainedModel train_model(const Dataset& train, const Dataset* valid,
                                const TrainOptions& opt) {
    train.check();
    TrainedModel out;
    out.kind = opt.kind;
    out.feature_names = train.feature_names;
    out.normalizer = Normalizer::fit(train);
    Dataset norm_train = out.normalizer.transform(train);
    out.metadata["rows"] = std::to_string(train.rows.size());

    switch (opt.kind) {
        case ModelKind::perceptron: {
            std::optional<Dataset> norm_valid;
            if (valid) norm_valid = out.normalizer.transform(*valid);
            PerceptronTraining t = train_perceptron(norm_train, opt.perceptron,
                                                    norm_valid ? &*norm_valid : nullptr);
            out.metadata["eta"] = format_double(opt.perceptron.eta);
            out.metadata["seed"] = std::to_string(opt.perceptron.seed);
            out.metadata["epochs"] = std::to_string(t.epochs_run);
            if (t.best_validation_accuracy >= 0)
                out.metadata["best_validation_accuracy"] =
                    format_double(t.best_validation_accuracy);
            out.variant = std::move(t.model);
            break;
        }
        case ModelKind::logistic: {
            LogisticTraining t = train_logistic(norm_train, opt.logistic);
            out.metadata["lambda"] = format_double(opt.logistic.lambda);
            out.metadata["converged"] = t.converged ? "true" : "false";
            out.metadata["iterations"] = std::to_string(t.iterations);
            out.variant = std::move(t.model);
            break;
        }
        case ModelKind::tree: {
            DecisionTreeModel t = train_tree(norm_train, opt.tree);
            out.metadata["max_depth"] = std::to_string(opt.tree.max_depth);
            out.metadata["min_samples_leaf"] = std::to_string(opt.tree.min_samples_leaf);
            out.variant = std::move(t);
            break;
        }
    }
    return out;
}

inline constexpr int kModelSchemaVersion = 1;

inline nlohmann::json model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["schema_version"] = kModelSchemaVersion;
    j["kind"] = to_string(m.kind);
    j["feature_names"] = m.feature_names;
    j["normalizer"] = {{"min", m.normalizer.mins}, {"max", m.normalizer.maxs}};
    j["metadata"] = m.metadata;
    nlohmann::json body;
    if (const auto* p = std::get_if<PerceptronModel>(&m.variant)) {
        body["weights"] = p->weights;
        body["margin_scale"] = p->margin_scale;
    } else if (const auto* l = std::get_if<LogisticModel>(&m.variant)) {
        body["beta"] = l->beta;
        body["lambda"] = l->lambda;
    } else {
        const auto& t = std::get<DecisionTreeModel>(m.variant);
        body["max_depth"] = t.max_depth;
        nlohmann::json nodes = nlohmann::json::array();
        for (const TreeNode& n : t.nodes)
            nodes.push_back({{"feature", n.feature},
                             {"threshold", n.threshold},
                             {"left", n.left},
                             {"right", n.right},
                             {"count0", n.count0},
                             {"count1", n.count1}});
        body["nodes"] = std::move(nodes);
    }
    j["model"] = std::move(body);
    return j;
}

inline TrainedModel model_from_json(const nlohmann::json& j) {
    if (!j.contains("schema_version") || !j["schema_version"].is_number_integer())
        throw ParseError("model file: missing schema_version");
    if (j["schema_version"].get<int>() != kModelSchemaVersion)
        throw ParseError("model file: unsupported schema_version " +
                         j["schema_version"].dump());
    TrainedModel m;
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.normalizer.mins = j.at("normalizer").at("min").get<std::vector<double>>();
    m.normalizer.maxs = j.at("normalizer").at("max").get<std::vector<double>>();
    if (m.normalizer.mins.size() != m.feature_names.size() ||
        m.normalizer.maxs.size() != m.feature_names.size())
        throw ParseError("model file: normalizer size does not match feature_names");
    if (j.contains("metadata"))
        m.metadata = j.at("metadata").get<std::map<std::string, std::string>>();
    const nlohmann::json& body = j.at("model");
    switch (m.kind) {
        case ModelKind::perceptron: {
            PerceptronModel p;
            p.weights = body.at("weights").get<std::vector<double>>();
            p.margin_scale = body.at("margin_scale").get<double>();
            if (p.weights.size() != m.feature_names.size() + 1)
                throw ParseError("model file: weight count does not match feature_names");
            m.variant = std::move(p);
            break;
        }
        case ModelKind::logistic: {
            LogisticModel l;
            l.beta = body.at("beta").get<std::vector<double>>();
            l.lambda = body.at("lambda").get<double>();
            if (l.beta.size() != m.feature_names.size() + 1)
                throw ParseError("model file: coefficient count does not match feature_names");
            m.variant = std::move(l);
            break;
        }
        case ModelKind::tree: {
            DecisionTreeModel t;
            t.max_depth = body.at("max_depth").get<int>();
            for (const nlohmann::json& n : body.at("nodes")) {
                TreeNode node;
                node.feature = n.at("feature").get<int>();
                node.threshold = n.at("threshold").get<double>();
                node.left = n.at("left").get<int>();
                node.right = n.at("right").get<int>();
                node.count0 = n.at("count0").get<std::size_t>();
                node.count1 = n.at("count1").get<std::size_t>();
                if (node.feature >= 0 &&
                    (node.left < 0 || node.right < 0 ||
                     node.left >= static_cast<int>(body.at("nodes").size()) ||
                     node.right >= static_cast<int>(body.at("nodes").size())))
                    throw ParseError("model file: tree node with dangling children");
                t.nodes.push_back(node);
            }
            if (t.nodes.empty()) throw ParseError("model file: tree has no nodes");
            m.variant = std::move(t);
            break;
        }
    }
    return m;
}

inline void save_model(const TrainedModel& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write model file: " + path);
    out << model_to_json(m).dump(2) << "\n";
    if (!out) throw Error("write failed: " + path);
}

inline TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open model file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("model file '" + path + "': " + e.what());
    }
}

} // namespace chmnat
