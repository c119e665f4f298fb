// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#include "cli.hpp"

#include "bench.hpp"

#include <wbpref/datakit.hpp>
#include <wbpref/dng_meta.hpp>
#include <wbpref/error.hpp>
#include <wbpref/estimators.hpp>
#include <wbpref/evalkit.hpp>
#include <wbpref/mapping.hpp>
#include <wbpref/text_io.hpp>
#include <wbpref/training.hpp>

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <set>

namespace wbpref::cli {

namespace fs = std::filesystem;

namespace {

int exit_code(ErrorCategory c) {
    switch (c) {
        case ErrorCategory::Usage: return kExitUsage;
        case ErrorCategory::Data: return kExitData;
        case ErrorCategory::Numeric: return kExitNumeric;
    }
    return kExitData;
}

std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// ---------------------------------------------------------------------------
// estimate

struct EstimateArgs {
    std::string images;
    std::string method = "gray-world";
    double p = 6.0;
    int order = 1;
    double sigma = 1.0;
    double saturation = 0.98;
    double dark = 0.0;
    bool no_mask = false;
    std::string out;
};

int cmd_estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
    EstimatorConfig cfg;
    if (a.method == "gray-world")
        cfg.method = GrayWorld{};
    else if (a.method == "minkowski")
        cfg.method = Minkowski{a.p};
    else if (a.method == "max-rgb")
        cfg.method = Minkowski{std::numeric_limits<double>::infinity()};
    else if (a.method == "gray-edge")
        cfg.method = GrayEdge{a.order, a.p, a.sigma};
    else
        throw UsageError("unknown method '" + a.method + "'");
    cfg.saturation_threshold = a.saturation;
    cfg.dark_threshold = a.dark;
    cfg.masking = !a.no_mask;
    validate(cfg);

    if (!fs::is_directory(a.images)) throw IoError("not a directory: " + a.images);
    std::map<std::string, fs::path> files;
    for (const auto& entry : fs::directory_iterator(a.images)) {
        if (!entry.is_regular_file()) continue;
        const auto ext = lower(entry.path().extension().string());
        if (ext != ".ppm" && ext != ".pfm") continue;
        const std::string id = entry.path().stem().string();
        if (!files.emplace(id, entry.path()).second) throw UsageError("two images share the id '" + id + "'");
    }
    if (files.empty()) {
        err << "estimate: no .ppm or .pfm images in " << a.images << "\n";
        return kExitData;
    }
    Predictions preds;
    std::size_t failed = 0;
    for (const auto& [id, path] : files) {
        try {
            const RawImage img = load_raw_image(path);
            preds[id] = estimate(img, cfg).values();
        } catch (const Error& e) {
            ++failed;
            err << "estimate: " << path.string() << ": " << e.what() << "\n";
        }
    }
    out << "estimate: " << describe(cfg) << " images=" << files.size() << " ok=" << preds.size()
        << " failed=" << failed << "\n";
    if (preds.empty()) return kExitData;
    save_predictions(preds, a.out, "wbpref estimate " + describe(cfg));
    return kExitOk;
}

// ---------------------------------------------------------------------------
// shared helpers

const CameraProfile& pick_profile(const Dataset& ds, const std::string& camera, std::optional<CameraProfile>& override_p,
                                  std::string& chosen) {
    if (override_p) {
        chosen = override_p->sensor_name();
        return *override_p;
    }
    if (!camera.empty()) {
        chosen = camera;
        return ds.profile(camera);
    }
    if (ds.profiles.size() != 1) throw UsageError("dataset has several cameras; pass --camera");
    chosen = ds.profiles.begin()->first;
    return ds.profiles.begin()->second;
}

std::vector<DatasetRecord> records_of(const Dataset& ds, const std::string& camera) {
    std::vector<DatasetRecord> out;
    for (const auto& r : ds.records)
        if (r.camera == camera) out.push_back(r);
    return out;
}

LinearMapModel fit_linear_kind(const std::string& kind, std::span<const DatasetRecord> recs,
                               const std::string& front_end, const CameraProfile& profile, TrainingSpace space,
                               CstMode mode) {
    const auto pairs = prepare_pairs(recs, front_end, profile, space, mode);
    return kind == "polynomial" ? fit_polynomial(pairs) : fit_3x3(pairs);
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
    std::string dataset;
    std::string val_dataset;
    std::string camera;
    std::string profile;
    std::string front_end = "synthetic";
    std::string kind = "mlp";
    std::string space = "xyz";
    std::string cst_mode = "forward-then-invert";
    TrainConfig cfg;
    std::string out;
    std::string log;
};

int cmd_train(TrainArgs a, std::ostream& out) {
    validate(a.cfg);
    a.cfg.training_space = a.space == "raw" ? TrainingSpace::Raw : TrainingSpace::Xyz;
    const auto mode = parse_cst_mode(a.cst_mode);
    if (!mode) throw UsageError("unknown --cst-mode '" + a.cst_mode + "'");
    a.cfg.cst_mode = *mode;
    const Dataset ds = read_dataset(a.dataset);
    std::optional<CameraProfile> override_p;
    if (!a.profile.empty()) override_p = load_profile(a.profile);
    std::string camera;
    const CameraProfile& profile = pick_profile(ds, a.camera, override_p, camera);
    const auto train_recs = records_of(ds, camera);
    std::vector<DatasetRecord> val_recs;
    if (!a.val_dataset.empty()) val_recs = records_of(read_dataset(a.val_dataset), camera);

    MappingModel model;
    model.space = a.cfg.training_space;
    model.front_end = a.front_end;
    model.cst_mode = a.cfg.cst_mode;
    std::string log;
    out << "train: kind=" << a.kind << " space=" << a.space << " front_end=" << a.front_end << " camera=" << camera
        << " records=" << train_recs.size() << " val=" << val_recs.size() << "\n";
    if (a.kind == "mlp") {
        out << describe(a.cfg);
        TrainResult r = train(train_recs, val_recs, a.front_end, a.cfg, profile);
        model.g = r.model;
        log = r.report.log(false);
        out << "train: final_train_loss=" << text::format_fixed(r.report.epoch_loss.back(), 4)
            << " parameters=" << count_parameters(r.model).total
            << " wall_seconds=" << text::format_fixed(r.report.wall_seconds, 3) << "\n";
    } else {
        model.g = fit_linear_kind(a.kind, train_recs, a.front_end, profile, model.space, model.cst_mode);
        log = "# wbpref training log\nkind " + a.kind + "\nfit plain least squares\nfront_end " + a.front_end +
              "\ntraining_space " + a.space + "\ntrain_size " + std::to_string(train_recs.size()) + "\n";
    }
    save_model(model, a.out);
    text::write_file_atomic(a.log.empty() ? a.out + ".log" : a.log, log);
    return kExitOk;
}

// ---------------------------------------------------------------------------
// apply

struct ApplyArgs {
    std::string model;
    std::string profile;
    std::string predictions;
    std::string out;
    std::vector<std::string> render;
};

void render_image(const fs::path& in, const fs::path& out_path, const Vec3& illum) {
    RawImage img = load_raw_image(in);
    const double g0 = illum[1] / illum[0], g2 = illum[1] / illum[2];
    const double gains[3] = {g0, 1.0, g2};
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
        const double v = std::clamp(img.pixels[i] * gains[i % 3], 0.0, 1.0);
        img.pixels[i] = std::pow(v, 1.0 / 2.2);
    }
    const auto bytes = encode_ppm(img, 255);
    text::write_file_atomic(out_path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

int cmd_apply(const ApplyArgs& a, std::ostream& out) {
    const MappingModel model = load_model(a.model);
    const CameraProfile profile = load_profile(a.profile);
    const Predictions in = load_external_predictions(a.predictions);
    Predictions mapped;
    std::size_t clamped = 0;
    for (const auto& [id, v] : in) {
        try {
            const auto m = apply_mapping(model, profile, ColorVec(v, profile.raw_space()));
            if (!m.raw) throw NumericError("mapped illuminant has no positive raw component");
            clamped += m.clamped ? 1 : 0;
            mapped[id] = m.raw->values();
        } catch (const Error& e) {
            rethrow_with_context(e, "prediction '" + id + "'");
        }
    }
    const std::string echo = "wbpref apply model=" + model.kind_name() + " space=" + to_string(model.space) +
                             " front_end=" + model.front_end + " cst_mode=" + to_string(model.cst_mode) +
                             " sensor=" + profile.sensor_name();
    save_predictions(mapped, a.out, echo);
    out << echo << " count=" << mapped.size() << " clamped=" << clamped << "\n";
    if (!a.render.empty()) {
        if (a.render.size() != 2) throw UsageError("--render takes <image> <out>");
        const fs::path img(a.render[0]);
        const std::string id = img.stem().string();
        const auto it = mapped.find(id);
        if (it == mapped.end() && mapped.size() != 1)
            throw UsageError("no mapped illuminant with id '" + id + "' for --render");
        render_image(img, a.render[1], it != mapped.end() ? it->second : mapped.begin()->second);
        out << "apply: rendered " << a.render[1] << " (display only, gamma 2.2, not colorimetric)\n";
    }
    return kExitOk;
}

// ---------------------------------------------------------------------------
// eval

struct EvalArgs {
    std::string dataset;
    std::vector<std::string> models;
    std::vector<std::string> front_ends;
    std::string camera;
    std::string out_prefix;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    const Dataset ds = read_dataset(a.dataset);
    std::vector<DatasetRecord> recs = a.camera.empty() ? ds.records : records_of(ds, a.camera);
    if (recs.empty()) throw ParseError("no records to evaluate");
    std::vector<std::string> fes = a.front_ends;
    if (fes.empty()) {
        std::set<std::string> common;
        for (const auto& [k, v] : recs.front().neutral_estimates) common.insert(k);
        for (const auto& r : recs)
            for (auto it = common.begin(); it != common.end();)
                it = r.neutral_estimates.count(*it) ? std::next(it) : common.erase(it);
        fes.assign(common.begin(), common.end());
        if (fes.empty()) throw ParseError("records share no front end");
    }
    std::vector<std::pair<std::string, MappingModel>> models;
    std::set<std::string> labels;
    for (const auto& path : a.models) {
        MappingModel m = load_model(path);
        std::string label = m.kind_name() + (m.space == TrainingSpace::Raw ? "-raw" : "");
        if (!labels.insert(label).second) {
            label += ":" + fs::path(path).stem().string();
            if (!labels.insert(label).second) throw UsageError("duplicate model '" + path + "'");
        }
        models.emplace_back(label, std::move(m));
    }
    ReportTable table;
    table.title = "evaluation of " + fs::path(a.dataset).filename().string();
    table.metadata = {{"dataset", a.dataset}, {"records", std::to_string(recs.size())}};
    if (!a.camera.empty()) table.metadata.push_back({"camera", a.camera});
    for (const auto& [label, m] : models)
        table.metadata.push_back({"model " + label, "front_end=" + m.front_end + " space=" + to_string(m.space) +
                                                        " cst_mode=" + to_string(m.cst_mode)});
    for (const auto& fe : fes) {
        table.rows.push_back({fe, "none", evaluate(std::nullopt, recs, fe, ds.profiles)});
        for (const auto& [label, m] : models) table.rows.push_back({fe, label, evaluate(m, recs, fe, ds.profiles)});
    }
    table.normalize();
    const std::vector<ReportTable> tables{table};
    const std::string report = render_report(tables);
    text::write_file_atomic(a.out_prefix + ".txt", report);
    text::write_file_atomic(a.out_prefix + ".csv", render_csv(tables));
    out << report;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// synth

struct SynthSensorsArgs {
    std::size_t n = 3;
    std::uint64_t seed = 7;
    double scale = 1.0;
    std::string prefix = "sensor";
    std::string out_dir;
};

int cmd_synth_sensors(const SynthSensorsArgs& a, std::ostream& out) {
    if (a.n < 1) throw UsageError("--n must be >= 1");
    fs::create_directories(a.out_dir);
    SensorOptions so;
    so.perturbation_scale = a.scale;
    for (std::size_t i = 0; i < a.n; ++i) {
        const std::string name = a.prefix + std::to_string(i);
        const auto [vs, profile] = make_virtual_sensor(a.seed * 1000 + i, name, so);
        const fs::path p = fs::path(a.out_dir) / (name + ".profile");
        save_profile(profile, p);
        out << "synth sensors: wrote " << p.string() << "\n";
    }
    return kExitOk;
}

struct SynthDatasetArgs {
    std::string out_dir;
    std::string name = "A";
    std::string profile;
    std::uint64_t sensor_seed = 7;
    std::size_t n = 1000;
    std::uint64_t seed = 7;
    double cct_low = 2000.0;
    double cct_high = 10000.0;
    double chroma_noise = 0.003;
    PreferencePolicy policy;
    std::vector<std::string> front_ends;
};

int cmd_synth_dataset(const SynthDatasetArgs& a, std::ostream& out) {
    fs::create_directories(a.out_dir);
    std::optional<CameraProfile> profile;
    std::string profile_file;
    if (!a.profile.empty()) {
        profile = load_profile(a.profile);
        profile_file = profile->sensor_name() + ".profile";
    } else {
        profile = make_virtual_sensor(a.sensor_seed, a.name).second;
        profile_file = a.name + ".profile";
    }
    save_profile(*profile, fs::path(a.out_dir) / profile_file);
    GenerationOptions opts;
    opts.policy = a.policy;
    opts.seed = a.seed;
    opts.id_prefix = "s";
    if (!a.front_ends.empty()) {
        opts.front_ends.clear();
        for (const auto& spec : a.front_ends) {
            const auto colon = spec.find(':');
            const auto deg = colon == std::string::npos ? std::nullopt : text::parse_real(spec.substr(colon + 1));
            if (!deg || colon == 0) throw UsageError("--front-end expects <name>:<noise-degrees>, got '" + spec + "'");
            opts.front_ends.push_back({spec.substr(0, colon), *deg});
        }
    }
    Dataset ds;
    ds.records =
        generate_synthetic_dataset(*profile, a.n, a.cct_low, a.cct_high, a.chroma_noise, opts);
    ds.profiles.emplace(profile->sensor_name(), *profile);
    ds.profile_paths.emplace(profile->sensor_name(), profile_file);
    const fs::path dpath = fs::path(a.out_dir) / (profile->sensor_name() + ".dataset");
    write_dataset(ds, dpath);
    out << "synth dataset: " << ds.records.size() << " records for " << profile->sensor_name() << " -> "
        << dpath.string() << "\n";
    return kExitOk;
}

struct SynthBenchArgs {
    bench::BenchConfig cfg;
    std::string out_prefix;
};

int cmd_synth_bench(const SynthBenchArgs& a, std::ostream& out) {
    const auto res = bench::run_bench(a.cfg);
    if (!a.out_prefix.empty()) {
        text::write_file_atomic(a.out_prefix + ".txt", res.report);
        text::write_file_atomic(a.out_prefix + ".csv", res.csv);
    }
    out << res.report;
    return kExitOk;
}

// ---------------------------------------------------------------------------
// inspect-dng

struct InspectArgs {
    std::string file;
    std::string profile_out;
    std::string name;
};

int cmd_inspect(const InspectArgs& a, std::ostream& out) {
    const auto bytes = text::read_binary_file(a.file);
    const auto meta = dng::parse_dng_metadata(bytes);
    out << dng::describe(meta);
    if (!a.profile_out.empty()) {
        std::string name = a.name;
        if (name.empty()) name = meta.camera_model.value_or("dng-camera");
        std::replace_if(name.begin(), name.end(), [](char c) { return c == ' ' || c == '\t' || c == '|' || c == '#'; },
                        '_');
        save_profile(dng::profile_from_dng(meta, name), a.profile_out);
        out << "inspect-dng: wrote profile " << a.profile_out << "\n";
    }
    return kExitOk;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"wbpref: cross-camera white-balance preference mapping"};
    app.require_subcommand(1);
    std::function<int()> action;

    EstimateArgs ea;
    auto* est = app.add_subcommand("estimate", "Estimate neutral illuminants for a directory of PPM/PFM images");
    est->add_option("--images", ea.images, "Directory of .ppm/.pfm images")->required();
    est->add_option("--method", ea.method, "gray-world | minkowski | max-rgb | gray-edge")->capture_default_str();
    est->add_option("--p", ea.p, "Minkowski norm for minkowski and gray-edge")->capture_default_str();
    est->add_option("--order", ea.order, "Gray-edge derivative order (1 or 2)")->capture_default_str();
    est->add_option("--sigma", ea.sigma, "Gray-edge Gaussian sigma in pixels")->capture_default_str();
    est->add_option("--saturation", ea.saturation, "Exclude pixels with any channel >= this")->capture_default_str();
    est->add_option("--dark", ea.dark, "Exclude pixels with any channel <= this")->capture_default_str();
    est->add_flag("--no-mask", ea.no_mask, "Use every pixel irrespective of thresholds");
    est->add_option("--out", ea.out, "Predictions file to write")->required();
    est->callback([&] { action = [&] { return cmd_estimate(ea, out, err); }; });

    TrainArgs ta;
    auto* tr = app.add_subcommand("train", "Train a preference mapping on a dataset");
    tr->add_option("--dataset", ta.dataset, "Training dataset file")->required();
    tr->add_option("--val-dataset", ta.val_dataset, "Optional validation dataset file");
    tr->add_option("--camera", ta.camera, "Camera whose records are used (default: the only one)");
    tr->add_option("--profile", ta.profile, "Profile file overriding the dataset's camera profile");
    tr->add_option("--front-end", ta.front_end, "Front end whose estimates are the inputs")->capture_default_str();
    tr->add_option("--kind", ta.kind, "mlp | three-by-three | polynomial")
        ->check(CLI::IsMember({"mlp", "three-by-three", "polynomial"}))
        ->capture_default_str();
    tr->add_option("--space", ta.space, "Training space: xyz | raw")
        ->check(CLI::IsMember({"xyz", "raw"}))
        ->capture_default_str();
    tr->add_option("--cst-mode", ta.cst_mode, "forward-then-invert | invert-then-blend")->capture_default_str();
    tr->add_option("--epochs", ta.cfg.epochs, "Training epochs")->capture_default_str();
    tr->add_option("--lr-max", ta.cfg.lr_max, "Initial learning rate")->capture_default_str();
    tr->add_option("--lr-min", ta.cfg.lr_min, "Final learning rate")->capture_default_str();
    tr->add_option("--batch-size", ta.cfg.batch_size, "Minibatch size")->capture_default_str();
    tr->add_option("--bn-momentum", ta.cfg.bn_momentum, "Batch-norm running-stat momentum")->capture_default_str();
    tr->add_option("--weight-decay", ta.cfg.weight_decay, "Coupled L2 weight decay")->capture_default_str();
    tr->add_option("--seed", ta.cfg.seed, "Seed for initialization and shuffling")->capture_default_str();
    tr->add_option("--out", ta.out, "Model file to write")->required();
    tr->add_option("--log", ta.log, "Training log file (default: <out>.log)");
    tr->callback([&] { action = [&] { return cmd_train(ta, out); }; });

    ApplyArgs aa;
    auto* ap = app.add_subcommand("apply", "Map neutral illuminant predictions to the learned preference");
    ap->add_option("--model", aa.model, "Model file")->required();
    ap->add_option("--profile", aa.profile, "Profile of the camera the predictions belong to")->required();
    ap->add_option("--predictions", aa.predictions, "Input predictions file")->required();
    ap->add_option("--out", aa.out, "Mapped predictions file to write")->required();
    ap->add_option("--render", aa.render, "<image> <out>: white-balanced, gamma-encoded PPM for display only")
        ->expected(2);
    ap->callback([&] { action = [&] { return cmd_apply(aa, out); }; });

    EvalArgs va;
    auto* ev = app.add_subcommand("eval", "Evaluate mappings on a dataset");
    ev->add_option("--dataset", va.dataset, "Dataset file")->required();
    ev->add_option("--model", va.models, "Model file (repeatable); no-mapping is always included");
    ev->add_option("--front-end", va.front_ends, "Front end (repeatable; default: all shared by the records)");
    ev->add_option("--camera", va.camera, "Restrict to one camera's records");
    ev->add_option("--out-prefix", va.out_prefix, "Writes <prefix>.txt and <prefix>.csv")->required();
    ev->callback([&] { action = [&] { return cmd_eval(va, out); }; });

    auto* sy = app.add_subcommand("synth", "Synthesize virtual sensors, datasets, or run the benchmark");
    sy->require_subcommand(1);

    SynthSensorsArgs ssa;
    auto* ss = sy->add_subcommand("sensors", "Write N virtual sensor profiles");
    ss->add_option("--n", ssa.n, "Number of sensors")->capture_default_str();
    ss->add_option("--seed", ssa.seed, "Generation seed")->capture_default_str();
    ss->add_option("--scale", ssa.scale, "Perturbation scale (0 gives identity matrices)")->capture_default_str();
    ss->add_option("--prefix", ssa.prefix, "Sensor name prefix")->capture_default_str();
    ss->add_option("--out-dir", ssa.out_dir, "Output directory")->required();
    ss->callback([&] { action = [&] { return cmd_synth_sensors(ssa, out); }; });

    SynthDatasetArgs sda;
    auto* sd = sy->add_subcommand("dataset", "Write a synthetic dataset and its profile");
    sd->add_option("--out-dir", sda.out_dir, "Output directory")->required();
    sd->add_option("--name", sda.name, "Sensor name for a generated profile")->capture_default_str();
    sd->add_option("--profile", sda.profile, "Use this profile instead of generating one");
    sd->add_option("--sensor-seed", sda.sensor_seed, "Seed of the generated sensor")->capture_default_str();
    sd->add_option("--n", sda.n, "Number of records")->capture_default_str();
    sd->add_option("--seed", sda.seed, "Scene and noise seed")->capture_default_str();
    sd->add_option("--cct-low", sda.cct_low, "Lowest scene CCT in kelvin")->capture_default_str();
    sd->add_option("--cct-high", sda.cct_high, "Highest scene CCT in kelvin")->capture_default_str();
    sd->add_option("--chroma-noise", sda.chroma_noise, "Scene uv noise sigma")->capture_default_str();
    sd->add_option("--lambda", sda.policy.lambda, "Preference blend strength")->capture_default_str();
    sd->add_option("--delta-mired", sda.policy.delta_mired, "Preference CCT offset")->capture_default_str();
    sd->add_option("--tint-gain", sda.policy.tint_gain, "Preference off-locus gain")->capture_default_str();
    sd->add_option("--front-end", sda.front_ends, "<name>:<noise-degrees> (repeatable; default synthetic:0)");
    sd->callback([&] { action = [&] { return cmd_synth_dataset(sda, out); }; });

    SynthBenchArgs sba;
    auto* sb = sy->add_subcommand("bench", "Cross-camera benchmark on three virtual sensors");
    sb->add_option("--seed", sba.cfg.seed, "Benchmark seed")->capture_default_str();
    sb->add_option("--epochs", sba.cfg.epochs, "Training epochs per network")->capture_default_str();
    sb->add_option("--threads", sba.cfg.threads, "Parallel trainings")->capture_default_str();
    sb->add_option("--out-prefix", sba.out_prefix, "Writes <prefix>.txt and <prefix>.csv");
    sb->callback([&] { action = [&] { return cmd_synth_bench(sba, out); }; });

    InspectArgs ia;
    auto* in = app.add_subcommand("inspect-dng", "Print DNG color metadata");
    in->add_option("file", ia.file, "DNG or TIFF file")->required();
    in->add_option("--profile-out", ia.profile_out, "Write a camera profile built from the metadata");
    in->add_option("--name", ia.name, "Sensor name for --profile-out (default: the Model tag)");
    in->callback([&] { action = [&] { return cmd_inspect(ia, out); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e, out, err);
        return rc == 0 ? kExitOk : kExitUsage;
    }
    try {
        return action ? action() : kExitUsage;
    } catch (const Error& e) {
        err << "error: " << e.what() << "\n";
        return exit_code(e.category());
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

}  // namespace wbpref::cli
