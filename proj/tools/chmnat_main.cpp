// chmnat: canopy-height-model naturalness pipeline. Subcommands cover the
// whole batch flow: synthesize a scene, split polygons geographically,
// extract features, train a classifier, run the evaluation protocols, and
// score unlabeled polygons. Every command is deterministic given its inputs
// and seed; outputs carry no timestamps so reruns are byte-identical.

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "chmnat/common.hpp"
#include "chmnat/evaluation.hpp"
#include "chmnat/features.hpp"
#include "chmnat/geometry.hpp"
#include "chmnat/io.hpp"
#include "chmnat/models.hpp"
#include "chmnat/raster.hpp"
#include "chmnat/synth.hpp"

namespace {

using namespace chmnat;

struct RunConfig {
    std::string raster_path;
    std::string polygons_path;
    std::string out_dir;
    std::string train_csv;
    std::string valid_csv;
    std::string test_csv;
    std::string model_file;
    std::string features_csv;

    std::uint64_t seed = 42;
    unsigned jobs = 1;

    FeatureConfig features;

    double split_cell_m = 1280.0;
    std::vector<double> split_fractions{0.64, 0.16, 0.20};
    double min_area_m2 = 10000.0;

    std::string model_kind = "logistic";
    std::vector<std::string> feature_list; // empty: use every column
    PerceptronOptions perceptron;
    LogisticOptions logistic;
    TreeOptions tree;

    std::vector<std::string> experiments{"thresholds", "area", "subsets", "confidence"};
    std::vector<double> percentiles{0, 25, 50, 75, 90};

    SynthConfig synth;

    TrainOptions train_options() const {
        TrainOptions opt;
        opt.kind = model_kind_from_string(model_kind);
        opt.perceptron = perceptron;
        opt.perceptron.seed = seed;
        opt.logistic = logistic;
        opt.tree = tree;
        return opt;
    }
};

void ensure_out_dir(const std::string& dir) {
    if (dir.empty()) throw ConfigError("--out directory must not be empty");
    std::filesystem::create_directories(dir);
}

std::string out_path(const RunConfig& cfg, const std::string& name) {
    return (std::filesystem::path(cfg.out_dir) / name).string();
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write: " + path);
    out << body;
    if (!out) throw Error("write failed: " + path);
}

std::string hash_of_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for hashing: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    std::string bytes = buf.str();
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(fnv1a64({bytes.data(), bytes.size()})));
    return hex;
}

Dataset load_features_for(const RunConfig& cfg, const std::string& path) {
    Dataset d = load_dataset(path);
    if (!cfg.feature_list.empty()) d = d.select_features(cfg.feature_list);
    return d;
}

nlohmann::json metrics_to_json(const Metrics& m) {
    return {{"accuracy", m.accuracy},
            {"precision", m.precision},
            {"recall", m.recall},
            {"f1", m.f1},
            {"balanced_accuracy", m.balanced_accuracy},
            {"degenerate", m.degenerate}};
}

// ---------------------------------------------------------------------------

int run_synth(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    SynthConfig sc = cfg.synth;
    sc.seed = cfg.seed;
    Scene scene = generate_scene(sc);
    save_raster(scene.raster, out_path(cfg, "scene.asc"));
    save_polygons(scene.polygons, out_path(cfg, "polygons.json"));
    std::cout << "wrote " << out_path(cfg, "scene.asc") << " (" << scene.raster.n_rows() << "x"
              << scene.raster.n_cols() << ") and " << scene.polygons.size() << " polygons\n";
    return 0;
}

int run_split(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    RasterGrid raster = load_raster(cfg.raster_path);
    std::vector<LabeledPolygon> polygons = load_polygons(cfg.polygons_path);
    if (cfg.split_fractions.size() != 3)
        throw ConfigError("--fractions needs exactly three values");
    std::array<double, 3> fractions{cfg.split_fractions[0], cfg.split_fractions[1],
                                    cfg.split_fractions[2]};

    SplitAssignment split =
        build_split(polygons, raster_extent(raster), cfg.split_cell_m, cfg.seed, fractions);

    std::array<std::vector<LabeledPolygon>, 3> kept;
    std::map<std::string, std::size_t> rejected;
    for (RejectReason r : {RejectReason::no_pixels, RejectReason::chm_incomplete,
                           RejectReason::too_small, RejectReason::no_trees})
        rejected[to_string(r)] = 0;
    std::size_t pieces = 0;
    for (const LabeledPolygon& poly : polygons) {
        // Pieces below the area floor are counted here, so clip with the
        // filter disabled.
        for (auto& [piece, tag] : clip_to_split(poly, split, 0.0)) {
            ++pieces;
            if (polygon_area(piece) < cfg.min_area_m2) {
                rejected[to_string(RejectReason::too_small)]++;
                continue;
            }
            std::vector<PixelRC> trees;
            try {
                RegionOfInterest roi = rasterize(piece, raster);
                trees = tree_pixels(roi, raster, cfg.features);
            } catch (const RegionRejected& e) {
                rejected[to_string(e.reason())]++;
                continue;
            }
            if (trees.empty()) {
                rejected[to_string(RejectReason::no_trees)]++;
                continue;
            }
            kept[static_cast<std::size_t>(tag)].push_back(piece);
        }
    }

    std::size_t total_kept = kept[0].size() + kept[1].size() + kept[2].size();
    if (total_kept == 0) throw Error("split produced no usable polygons");

    save_polygons(kept[0], out_path(cfg, "train.json"));
    save_polygons(kept[1], out_path(cfg, "validation.json"));
    save_polygons(kept[2], out_path(cfg, "test.json"));

    nlohmann::json report;
    report["seed"] = cfg.seed;
    report["cell_size_m"] = cfg.split_cell_m;
    report["fractions"] = cfg.split_fractions;
    report["min_area_m2"] = cfg.min_area_m2;
    report["input_polygons"] = polygons.size();
    report["pieces_considered"] = pieces;
    report["kept"] = {{"train", kept[0].size()},
                      {"validation", kept[1].size()},
                      {"test", kept[2].size()}};
    report["rejected"] = rejected;
    write_text(out_path(cfg, "split_report.json"), report.dump(2) + "\n");
    std::cout << "split kept " << total_kept << " pieces (train " << kept[0].size()
              << ", validation " << kept[1].size() << ", test " << kept[2].size() << ")\n";
    return 0;
}

int run_extract(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    RasterGrid raster = load_raster(cfg.raster_path);
    std::vector<LabeledPolygon> polygons = load_polygons(cfg.polygons_path);
    cfg.features.check(raster.cell_size());

    struct Slot {
        bool ok = false;
        FeatureVector fv{};
        double area = 0;
        std::string reason;
        std::string detail;
    };
    std::vector<Slot> slots(polygons.size());
    parallel_for(polygons.size(), cfg.jobs, [&](std::size_t i) {
        try {
            RegionOfInterest roi = rasterize(polygons[i], raster);
            slots[i].fv = extract(roi, raster, cfg.features);
            slots[i].area = roi.area_m2;
            slots[i].ok = true;
        } catch (const RegionRejected& e) {
            slots[i].reason = to_string(e.reason());
            slots[i].detail = e.what();
        }
    });

    Dataset d;
    d.feature_names.assign(std::begin(kFeatureNames), std::end(kFeatureNames));
    std::string failures;
    std::size_t n_failed = 0;
    for (std::size_t i = 0; i < polygons.size(); ++i) {
        const Slot& s = slots[i];
        if (!s.ok) {
            ++n_failed;
            nlohmann::json line = {{"source_id", polygons[i].source_id},
                                   {"reason", s.reason},
                                   {"detail", s.detail}};
            failures += line.dump() + "\n";
            continue;
        }
        DataRow row;
        row.source_id = polygons[i].source_id;
        row.label = polygons[i].label == Label::high ? 1
                    : polygons[i].label == Label::low ? 0
                                                      : -1;
        row.area_m2 = s.area;
        row.features = {s.fv.td,   s.fv.thm,  s.fv.thv, s.fv.ttd,
                        s.fv.tthm, s.fv.tthv, s.fv.elp, s.fv.ttsd};
        d.rows.push_back(std::move(row));
    }
    save_dataset(d, out_path(cfg, "features.csv"));
    write_text(out_path(cfg, "extract_failures.jsonl"), failures);
    std::cout << "extracted " << d.rows.size() << " of " << polygons.size() << " polygons ("
              << n_failed << " rejected)\n";
    return 0;
}

int run_train(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    Dataset train = load_features_for(cfg, cfg.train_csv);
    std::optional<Dataset> valid;
    if (!cfg.valid_csv.empty()) valid = load_features_for(cfg, cfg.valid_csv);

    TrainedModel model = train_model(train, valid ? &*valid : nullptr, cfg.train_options());
    save_model(model, out_path(cfg, "model.json"));

    nlohmann::json report;
    report["kind"] = to_string(model.kind);
    report["feature_names"] = model.feature_names;
    report["metadata"] = model.metadata;
    report["train_metrics"] = metrics_to_json(metrics(confusion_of(model, train)));
    if (valid) report["valid_metrics"] = metrics_to_json(metrics(confusion_of(model, *valid)));
    write_text(out_path(cfg, "train_report.json"), report.dump(2) + "\n");
    std::cout << "trained " << to_string(model.kind) << " on " << train.rows.size()
              << " rows; model at " << out_path(cfg, "model.json") << "\n";
    return 0;
}

bool wants(const RunConfig& cfg, const std::string& name) {
    for (const std::string& e : cfg.experiments)
        if (e == name) return true;
    return false;
}

int run_eval(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    Dataset train = load_features_for(cfg, cfg.train_csv);
    Dataset valid = load_features_for(cfg, cfg.valid_csv);
    Dataset test = load_features_for(cfg, cfg.test_csv);
    TrainOptions opt = cfg.train_options();

    if (wants(cfg, "thresholds")) {
        std::string csv = "feature,threshold,direction,train_accuracy,valid_accuracy\n";
        for (const ThresholdRow& r : threshold_table(train, &valid)) {
            csv += r.feature + "," + format_double(r.threshold) + "," +
                   (r.high_above ? "above" : "below") + "," + format_double(r.train_accuracy) +
                   "," + (r.valid_accuracy >= 0 ? format_double(r.valid_accuracy) : "") + "\n";
        }
        write_text(out_path(cfg, "thresholds.csv"), csv);
    }

    if (wants(cfg, "area")) {
        std::string csv =
            "percentile_low,area_min,area_max,n_train,n_valid,n_test,test_accuracy,skipped\n";
        for (const AreaPercentileRow& r :
             area_percentile_experiment(train, valid, test, cfg.percentiles, make_trainer(opt))) {
            csv += format_double(r.percentile_low) + ",";
            if (r.skipped) {
                csv += ",,,,,,skipped\n";
                continue;
            }
            csv += format_double(r.area_min) + "," + format_double(r.area_max) + "," +
                   std::to_string(r.n_train) + "," + std::to_string(r.n_valid) + "," +
                   std::to_string(r.n_test) + "," + format_double(r.test_accuracy) + ",\n";
        }
        write_text(out_path(cfg, "area_percentile.csv"), csv);
    }

    if (wants(cfg, "subsets")) {
        std::vector<std::vector<std::string>> subsets{
            {"td", "thm", "thv", "ttd", "tthm", "tthv", "elp", "ttsd"},
            {"td", "thm", "thv", "ttd", "tthm", "tthv"},
            {"thm", "ttd", "tthm", "elp"},
            {"ttd", "tthm"}};
        std::vector<NamedTrainer> trainers;
        for (ModelKind kind : {ModelKind::perceptron, ModelKind::logistic, ModelKind::tree}) {
            TrainOptions o = opt;
            o.kind = kind;
            trainers.push_back({to_string(kind), make_trainer(o)});
        }
        std::string csv = "subset,model,test_accuracy\n";
        for (const FeatureSubsetRow& r :
             feature_subset_experiment(train, valid, test, subsets, trainers)) {
            std::string joined;
            for (const std::string& f : r.subset) joined += (joined.empty() ? "" : "+") + f;
            csv += joined + "," + r.model + "," + format_double(r.test_accuracy) + "\n";
        }
        write_text(out_path(cfg, "feature_subsets.csv"), csv);
    }

    if (wants(cfg, "confidence")) {
        TrainedModel model = cfg.model_file.empty() ? train_model(train, &valid, opt)
                                                    : load_model(cfg.model_file);
        std::string csv = "bin_low,bin_high,support,support_pct,accuracy\n";
        for (const ConfidenceBin& b : confidence_bins_experiment(model, test)) {
            csv += format_double(b.lo) + "," + format_double(b.hi) + "," +
                   std::to_string(b.support) + "," + format_double(b.support_pct) + "," +
                   (b.has_accuracy ? format_double(b.accuracy) : "") + "\n";
        }
        write_text(out_path(cfg, "confidence_bins.csv"), csv);
    }

    if (!cfg.model_file.empty()) {
        TrainedModel model = load_model(cfg.model_file);
        Metrics m = metrics(confusion_of(model, test.select_features(model.feature_names)));
        std::string csv = "accuracy,precision,recall,f1,balanced_accuracy,degenerate\n";
        csv += format_double(m.accuracy) + "," + format_double(m.precision) + "," +
               format_double(m.recall) + "," + format_double(m.f1) + "," +
               format_double(m.balanced_accuracy) + "," + (m.degenerate ? "true" : "false") + "\n";
        write_text(out_path(cfg, "metrics.csv"), csv);
    }

    std::string manifest = "run eval\n";
    manifest += "seed " + std::to_string(cfg.seed) + "\n";
    manifest += "model " + cfg.model_kind + "\n";
    manifest += "experiments";
    for (const std::string& e : cfg.experiments) manifest += " " + e;
    manifest += "\npercentiles";
    for (double p : cfg.percentiles) manifest += " " + format_double(p);
    manifest += "\n";
    manifest += "eta " + format_double(cfg.perceptron.eta) + "\n";
    manifest += "max_epochs " + std::to_string(cfg.perceptron.max_epochs) + "\n";
    manifest += "patience " + std::to_string(cfg.perceptron.patience) + "\n";
    manifest += "lambda " + format_double(cfg.logistic.lambda) + "\n";
    manifest += "max_depth " + std::to_string(cfg.tree.max_depth) + "\n";
    manifest += "min_samples_leaf " + std::to_string(cfg.tree.min_samples_leaf) + "\n";
    manifest += "input train " + cfg.train_csv + " fnv1a64 " + hash_of_file(cfg.train_csv) + "\n";
    manifest += "input valid " + cfg.valid_csv + " fnv1a64 " + hash_of_file(cfg.valid_csv) + "\n";
    manifest += "input test " + cfg.test_csv + " fnv1a64 " + hash_of_file(cfg.test_csv) + "\n";
    if (!cfg.model_file.empty())
        manifest +=
            "input model " + cfg.model_file + " fnv1a64 " + hash_of_file(cfg.model_file) + "\n";
    write_text(out_path(cfg, "manifest.txt"), manifest);
    std::cout << "eval outputs written to " << cfg.out_dir << "\n";
    return 0;
}

int run_predict(const RunConfig& cfg) {
    ensure_out_dir(cfg.out_dir);
    TrainedModel model = load_model(cfg.model_file);
    Dataset d = load_dataset(cfg.features_csv).select_features(model.feature_names);
    std::string csv = "source_id,p_high,class\n";
    for (const DataRow& r : d.rows) {
        double p = model.predict_proba_raw(r.features);
        csv += r.source_id + "," + format_double(p) + "," + (p >= 0.5 ? "1" : "0") + "\n";
    }
    write_text(out_path(cfg, "predictions.csv"), csv);
    std::cout << "scored " << d.rows.size() << " polygons\n";
    return 0;
}

void add_feature_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--h-min-dm", cfg.features.h_min_dm, "Minimum tree height, decimeters");
    cmd->add_option("--d-min-m", cfg.features.d_min_m, "Minimum treetop separation, meters");
    cmd->add_option("--lbp-points", cfg.features.lbp_points, "Texture sampling points");
    cmd->add_option("--lbp-radius", cfg.features.lbp_radius_px, "Texture circle radius, pixels");
    cmd->add_option("--ttsd-bin-width", cfg.features.ttsd_bin_width_m,
                    "Projection bin width, meters");
    cmd->add_option("--ttsd-directions", cfg.features.ttsd_directions,
                    "Projection direction count");
}

void add_model_flags(CLI::App* cmd, RunConfig& cfg) {
    cmd->add_option("--model", cfg.model_kind, "Model kind")
        ->check(CLI::IsMember({"perceptron", "logistic", "tree"}));
    cmd->add_option("--features", cfg.feature_list, "Feature subset (comma list)")
        ->delimiter(',');
    cmd->add_option("--eta", cfg.perceptron.eta, "Perceptron learning rate");
    cmd->add_option("--max-epochs", cfg.perceptron.max_epochs, "Perceptron epoch cap");
    cmd->add_option("--patience", cfg.perceptron.patience, "Early-stopping patience, epochs");
    cmd->add_option("--lambda", cfg.logistic.lambda, "Logistic L2 strength");
    cmd->add_option("--tolerance", cfg.logistic.tolerance, "Logistic gradient tolerance");
    cmd->add_option("--max-iters", cfg.logistic.max_iters, "Logistic iteration cap");
    cmd->add_option("--max-depth", cfg.tree.max_depth, "Tree depth cap");
    cmd->add_option("--min-samples-leaf", cfg.tree.min_samples_leaf, "Tree leaf size floor");
}

} // namespace

int main(int argc, char** argv) {
    RunConfig cfg;
    CLI::App app{"Forest naturalness classification from canopy height rasters"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from an INI file");
    app.option_defaults()->always_capture_default();

    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labeled scene");
    synth->add_option("--out", cfg.out_dir, "Output directory")->required();
    synth->add_option("--seed", cfg.seed, "Scene seed");
    synth->add_option("--extent-m", cfg.synth.extent_m, "Scene side, meters");
    synth->add_option("--stand-slots", cfg.synth.stand_slots, "Stand slots per axis");
    synth->add_option("--size-blend", cfg.synth.size_dependent_blend,
                      "Size-dependent class-character noise in [0,1]");
    synth->add_option("--plantation-spacing", cfg.synth.plantation.row_spacing_m,
                      "Plantation tree spacing, meters (rows and columns)");
    synth->add_option("--natural-intensity", cfg.synth.natural.intensity_per_ha,
                      "Natural treetop intensity per hectare");

    CLI::App* split = app.add_subcommand("split", "Split polygons on a geographic grid");
    split->add_option("--raster", cfg.raster_path, "Canopy height raster (.asc)")->required();
    split->add_option("--polygons", cfg.polygons_path, "Polygon file (GeoJSON)")->required();
    split->add_option("--out", cfg.out_dir, "Output directory")->required();
    split->add_option("--seed", cfg.seed, "Cell shuffle seed");
    split->add_option("--split-cell-m", cfg.split_cell_m, "Split grid cell size, meters");
    split->add_option("--fractions", cfg.split_fractions, "Train,validation,test fractions")
        ->delimiter(',')
        ->expected(3);
    split->add_option("--min-area-m2", cfg.min_area_m2, "Minimum kept piece area");
    add_feature_flags(split, cfg);

    CLI::App* extract = app.add_subcommand("extract", "Compute features per polygon");
    extract->add_option("--raster", cfg.raster_path, "Canopy height raster (.asc)")->required();
    extract->add_option("--polygons", cfg.polygons_path, "Polygon file (GeoJSON)")->required();
    extract->add_option("--out", cfg.out_dir, "Output directory")->required();
    extract->add_option("--jobs", cfg.jobs, "Worker threads");
    add_feature_flags(extract, cfg);

    CLI::App* train = app.add_subcommand("train", "Train a classifier on a feature CSV");
    train->add_option("--train-csv", cfg.train_csv, "Training features CSV")->required();
    train->add_option("--valid-csv", cfg.valid_csv, "Validation features CSV");
    train->add_option("--out", cfg.out_dir, "Output directory")->required();
    train->add_option("--seed", cfg.seed, "Training seed");
    add_model_flags(train, cfg);

    CLI::App* eval = app.add_subcommand("eval", "Run the evaluation experiment suite");
    eval->add_option("--train-csv", cfg.train_csv, "Training features CSV")->required();
    eval->add_option("--valid-csv", cfg.valid_csv, "Validation features CSV")->required();
    eval->add_option("--test-csv", cfg.test_csv, "Test features CSV")->required();
    eval->add_option("--out", cfg.out_dir, "Output directory")->required();
    eval->add_option("--seed", cfg.seed, "Training seed");
    eval->add_option("--model-file", cfg.model_file, "Trained model for metrics/confidence");
    eval->add_option("--experiments", cfg.experiments,
                     "Which experiments to run (thresholds,area,subsets,confidence)")
        ->delimiter(',');
    eval->add_option("--percentiles", cfg.percentiles, "Area percentile lower bounds")
        ->delimiter(',');
    add_model_flags(eval, cfg);

    CLI::App* predict = app.add_subcommand("predict", "Score polygons with a trained model");
    predict->add_option("--model-file", cfg.model_file, "Trained model JSON")->required();
    predict->add_option("--features-csv", cfg.features_csv, "Features CSV to score")->required();
    predict->add_option("--out", cfg.out_dir, "Output directory")->required();

    CLI::App* show = app.add_subcommand("show-config", "Print the full configuration");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (show->parsed()) {
            std::cout << app.config_to_str(true, true);
            return 0;
        }
        if (synth->parsed()) return run_synth(cfg);
        if (split->parsed()) return run_split(cfg);
        if (extract->parsed()) return run_extract(cfg);
        if (train->parsed()) return run_train(cfg);
        if (eval->parsed()) return run_eval(cfg);
        if (predict->parsed()) return run_predict(cfg);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
