// rfadv: synthesize LoRa fingerprint datasets, train classifiers, run
// white-box evasion attacks, and aggregate the results.
//
// Exit codes: 0 success, 1 config/usage error, 2 I/O error, 3 numeric error.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfadv/errors.hpp"
#include "rfadv/evaluation.hpp"
#include "rfadv/io.hpp"
#include "rfadv/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rfadv;

namespace {

constexpr int kConfigFormatVersion = 1;

struct ExperimentConfig {
    uint64_t seed = 42;
    LoRaConfig lora;
    FingerprintRanges ranges;
    PipelineConfig pipeline;
    int n_devices = 10;
    int n_packets = 1000;
    double snr_db = 70.0;
    std::string model_kind = "cnn";
    double model_scale = 0.25;
    TrainConfig train_cfg;
    AttackConfig attack_cfg;
};

json to_json(const ExperimentConfig& c) {
    json j;
    j["format_version"] = kConfigFormatVersion;
    j["seed"] = c.seed;
    j["lora"] = {{"spreading_factor", c.lora.spreading_factor},
                 {"bandwidth_hz", c.lora.bandwidth_hz},
                 {"sample_rate_hz", c.lora.sample_rate_hz},
                 {"n_preamble_symbols", c.lora.n_preamble_symbols}};
    j["fingerprint_ranges"] = {{"cfo_abs_hz", c.ranges.cfo_abs_hz},
                               {"gain_lo", c.ranges.gain_lo},
                               {"gain_hi", c.ranges.gain_hi},
                               {"phase_abs_rad", c.ranges.phase_abs_rad},
                               {"a3_lo", c.ranges.a3_lo},
                               {"a3_hi", c.ranges.a3_hi},
                               {"a5_lo", c.ranges.a5_lo},
                               {"a5_hi", c.ranges.a5_hi},
                               {"min_separation", c.ranges.min_separation},
                               {"max_retries", c.ranges.max_retries}};
    j["pipeline"] = {{"stft_win", c.pipeline.stft_win},
                     {"stft_hop", c.pipeline.stft_hop},
                     {"coarse_cfo_only", c.pipeline.coarse_cfo_only}};
    j["dataset"] = {{"n_devices", c.n_devices},
                    {"n_packets", c.n_packets},
                    {"snr_db", std::isinf(c.snr_db) ? json("clean") : json(c.snr_db)}};
    j["model"] = {{"kind", c.model_kind}, {"scale", c.model_scale}};
    j["train"] = {{"epochs", c.train_cfg.epochs},
                  {"batch_size", c.train_cfg.batch_size},
                  {"learning_rate", c.train_cfg.learning_rate},
                  {"weight_decay", c.train_cfg.weight_decay}};
    j["attack"] = {{"method", to_string(c.attack_cfg.method)},
                   {"psr_db", c.attack_cfg.psr_db},
                   {"pgd_iters", c.attack_cfg.pgd_iters},
                   {"pgd_step_fraction", c.attack_cfg.pgd_step_fraction},
                   {"pgd_random_start", c.attack_cfg.pgd_random_start},
                   {"clamp01", c.attack_cfg.clamp01}};
    return j;
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

void from_json_file(const fs::path& path, ExperimentConfig& c) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded())
        throw ConfigError("config: malformed JSON in " + path.string());
    if (j.contains("format_version") && j["format_version"].get<int>() != kConfigFormatVersion)
        throw ConfigError("config: unsupported format version in " + path.string());
    maybe(j, "seed", c.seed);
    if (j.contains("lora")) {
        const json& l = j["lora"];
        maybe(l, "spreading_factor", c.lora.spreading_factor);
        maybe(l, "bandwidth_hz", c.lora.bandwidth_hz);
        maybe(l, "sample_rate_hz", c.lora.sample_rate_hz);
        maybe(l, "n_preamble_symbols", c.lora.n_preamble_symbols);
    }
    if (j.contains("fingerprint_ranges")) {
        const json& r = j["fingerprint_ranges"];
        maybe(r, "cfo_abs_hz", c.ranges.cfo_abs_hz);
        maybe(r, "gain_lo", c.ranges.gain_lo);
        maybe(r, "gain_hi", c.ranges.gain_hi);
        maybe(r, "phase_abs_rad", c.ranges.phase_abs_rad);
        maybe(r, "a3_lo", c.ranges.a3_lo);
        maybe(r, "a3_hi", c.ranges.a3_hi);
        maybe(r, "a5_lo", c.ranges.a5_lo);
        maybe(r, "a5_hi", c.ranges.a5_hi);
        maybe(r, "min_separation", c.ranges.min_separation);
        maybe(r, "max_retries", c.ranges.max_retries);
    }
    if (j.contains("pipeline")) {
        const json& p = j["pipeline"];
        maybe(p, "stft_win", c.pipeline.stft_win);
        maybe(p, "stft_hop", c.pipeline.stft_hop);
        maybe(p, "coarse_cfo_only", c.pipeline.coarse_cfo_only);
    }
    if (j.contains("dataset")) {
        const json& d = j["dataset"];
        maybe(d, "n_devices", c.n_devices);
        maybe(d, "n_packets", c.n_packets);
        if (d.contains("snr_db"))
            c.snr_db = d["snr_db"].is_string() ? kCleanSnrDb : d["snr_db"].get<double>();
    }
    if (j.contains("model")) {
        maybe(j["model"], "kind", c.model_kind);
        maybe(j["model"], "scale", c.model_scale);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        maybe(t, "epochs", c.train_cfg.epochs);
        maybe(t, "batch_size", c.train_cfg.batch_size);
        maybe(t, "learning_rate", c.train_cfg.learning_rate);
        maybe(t, "weight_decay", c.train_cfg.weight_decay);
    }
    if (j.contains("attack")) {
        const json& a = j["attack"];
        if (a.contains("method"))
            c.attack_cfg.method = attack_method_from_string(a["method"].get<std::string>());
        maybe(a, "psr_db", c.attack_cfg.psr_db);
        maybe(a, "pgd_iters", c.attack_cfg.pgd_iters);
        maybe(a, "pgd_step_fraction", c.attack_cfg.pgd_step_fraction);
        maybe(a, "pgd_random_start", c.attack_cfg.pgd_random_start);
        maybe(a, "clamp01", c.attack_cfg.clamp01);
    }
}

double parse_snr(const std::string& s) {
    if (s == "clean" || s == "inf")
        return kCleanSnrDb;
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("bad --snr value '" + s + "' (number or 'clean')");
    }
}

std::vector<double> parse_grid(const std::string& s) {
    double lo = 0, hi = 0, step = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || step <= 0 || hi < lo)
        throw ConfigError("bad grid '" + s + "' (expected lo:hi:step with step > 0)");
    std::vector<double> out;
    for (double v = lo; v <= hi + 1e-9; v += step)
        out.push_back(v);
    return out;
}

// Spectrogram cache keyed by (dataset manifest hash, pipeline params).
// Values pass through f32 on disk; on a cache miss the in-memory copies are
// quantized the same way, so hit and miss paths feed identical inputs.
SpectrogramCache ensure_cache(const fs::path& data_dir, const Dataset& ds,
                              const PipelineConfig& pc) {
    std::string dh = dataset_hash(data_dir);
    fs::path dir = data_dir / "cache" / cache_key(dh, pc);
    if (fs::exists(dir / "manifest.json"))
        return load_spectrogram_cache(dir);

    SpectrogramCache cache;
    cache.frames.resize(ds.frames.size());
    cache.norm_stats.resize(ds.frames.size());
    parallel_for(ds.frames.size(), [&](std::size_t i) {
        Spectrogram sg = preprocess(ds.frames[i], ds.cfg, pc);
        Tensor t = sg.to_tensor();
        for (double& v : t.data)
            v = static_cast<double>(static_cast<float>(v));
        cache.frames[i] = std::move(t);
        cache.norm_stats[i] = {sg.norm_min, sg.norm_max};
    });
    cache.freq_bins = cache.frames.front().shape[0];
    cache.time_frames = cache.frames.front().shape[1];
    save_spectrogram_cache(dir, cache, dh, pc);
    return cache;
}

SampleSet subset(const SpectrogramCache& cache, const std::vector<int>& idx,
                 const std::vector<int>& labels) {
    SampleSet s;
    for (int i : idx) {
        s.x.push_back(cache.frames[static_cast<std::size_t>(i)]);
        s.labels.push_back(labels[static_cast<std::size_t>(i)]);
    }
    return s;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

// ---- generate ----

int cmd_generate(const ExperimentConfig& cfg, const fs::path& out) {
    Dataset ds =
        build_dataset(cfg.lora, cfg.n_devices, cfg.n_packets, cfg.snr_db, cfg.seed, cfg.ranges);
    save_dataset(out, ds);
    json merged = to_json(cfg);
    merged["config_hash"] = fnv1a_hex(to_json(cfg).dump());
    atomic_write(out / "config.json", merged.dump(2) + "\n");

    std::printf("wrote %zu frames (%d devices x %d packets) to %s\n", ds.frames.size(),
                cfg.n_devices, cfg.n_packets, out.string().c_str());
    std::printf("%-10s %10s %8s %8s %9s %9s\n", "device", "cfo_hz", "gain", "phase", "a3", "a5");
    for (const auto& fp : ds.fingerprints)
        std::printf("Device %-3d %10.1f %8.4f %8.4f %9.4f %9.4f\n", fp.device_id + 1, fp.cfo_hz,
                    fp.iq_gain_mismatch, fp.iq_phase_mismatch_rad, fp.pa_a3, fp.pa_a5);
    return 0;
}

// ---- train ----

int cmd_train(const ExperimentConfig& cfg, const fs::path& data_dir, const fs::path& out) {
    if (!fs::exists(data_dir / "manifest.json"))
        throw IoError("dataset not found at " + data_dir.string());
    Dataset ds = load_dataset(data_dir);
    SpectrogramCache cache = ensure_cache(data_dir, ds, cfg.pipeline);
    SampleSet train_set = subset(cache, ds.split.train, ds.labels);
    SampleSet test_set = subset(cache, ds.split.test, ds.labels);

    Model model =
        build_preset(preset_kind_from_string(cfg.model_kind), {cache.freq_bins, cache.time_frames},
                     ds.n_devices, cfg.model_scale, cfg.seed);
    TrainConfig tc = cfg.train_cfg;
    tc.seed = cfg.seed;

    std::string curve = "epoch,train_loss\n";
    model = train(std::move(model), train_set, tc, [&](int epoch, double loss) {
        curve += std::to_string(epoch) + "," + fmt(loss) + "\n";
        std::printf("epoch %3d  train loss %.4f\n", epoch, loss);
        std::fflush(stdout);
    });
    double acc = accuracy(model, test_set);

    save_checkpoint(out, model);
    fs::path curve_path = out;
    curve_path += ".curve.csv";
    atomic_write(curve_path, curve);

    json manifest = to_json(cfg);
    manifest["config_hash"] = fnv1a_hex(to_json(cfg).dump());
    manifest["test_accuracy"] = acc;
    fs::path man_path = out;
    man_path += ".manifest.json";
    atomic_write(man_path, manifest.dump(2) + "\n");

    std::printf("%s: test accuracy %.4f (%zu train / %zu test)\n", cfg.model_kind.c_str(), acc,
                train_set.x.size(), test_set.x.size());
    return 0;
}

// ---- attack ----

std::string cell_dir_name(const AttackReport& r) {
    std::string id = r.experiment_id;
    for (char& c : id)
        if (c == '/' || c == ' ')
            c = '_';
    return "cell_" + id;
}

int cmd_attack(const ExperimentConfig& cfg, const fs::path& data_dir,
               const std::vector<std::string>& model_files, const fs::path& out,
               const std::string& sweep, const std::string& grid_str, int targeted,
               bool target_matrix_flag) {
    if (!fs::exists(data_dir / "manifest.json"))
        throw IoError("dataset not found at " + data_dir.string());
    Dataset ds = load_dataset(data_dir);
    SpectrogramCache cache = ensure_cache(data_dir, ds, cfg.pipeline);
    SampleSet test_set = subset(cache, ds.split.test, ds.labels);

    std::vector<Model> models;
    for (const auto& f : model_files) {
        if (!fs::exists(f))
            throw IoError("checkpoint not found: " + f);
        Model m = load_checkpoint(f);
        if (m.input_shape() != std::vector<int>{cache.freq_bins, cache.time_frames} ||
            m.n_classes() != ds.n_devices)
            throw InputError("model/dataset shape mismatch for " + f);
        models.push_back(std::move(m));
    }
    std::vector<ModelRef> refs;
    for (auto& m : models)
        refs.push_back({m.kind, &m});

    const std::string config_hash = fnv1a_hex(to_json(cfg).dump());
    fs::create_directories(out);
    std::vector<AttackReport> reports;

    if (sweep == "psr") {
        std::vector<double> grid = grid_str.empty()
                                       ? std::vector<double>{-45, -40, -35, -30, -25, -20}
                                       : parse_grid(grid_str);
        std::vector<AttackMethod> methods{AttackMethod::fgsm, AttackMethod::pgd,
                                          AttackMethod::awgn};
        reports = psr_sweep(refs, methods, grid, test_set, cfg.seed);
    } else if (sweep == "snr") {
        std::vector<double> grid = grid_str.empty() ? std::vector<double>{20, 30, 40, 50, 60, 70}
                                                    : parse_grid(grid_str);
        std::vector<AttackMethod> methods{AttackMethod::fgsm, AttackMethod::pgd,
                                          AttackMethod::awgn};
        reports = snr_sweep(refs, methods, grid, cfg.attack_cfg.psr_db, ds, cfg.pipeline, cfg.seed);
    } else if (target_matrix_flag) {
        AttackConfig ac = cfg.attack_cfg;
        ac.seed = cfg.seed;
        for (const auto& r : refs) {
            std::vector<double> tm = target_matrix(*r.model, test_set, ac);
            write_matrix_csv(out / ("target_matrix_" + r.kind + ".csv"), tm, ds.n_devices);
            double mean = 0.0;
            for (double v : tm)
                mean += v;
            mean /= static_cast<double>(tm.size());
            std::printf("%s: target matrix mean %.4f\n", r.kind.c_str(), mean);
        }
        json manifest = to_json(cfg);
        manifest["config_hash"] = config_hash;
        atomic_write(out / "attack_manifest.json", manifest.dump(2) + "\n");
        return 0;
    } else {
        AttackConfig ac = cfg.attack_cfg;
        ac.seed = cfg.seed;
        if (targeted >= 0) {
            ac.mode = AttackMode::targeted;
            ac.target_label = targeted;
        }
        for (const auto& r : refs) {
            std::vector<AdversarialExample> advs;
            char id[128];
            std::snprintf(id, sizeof id, "%s-%s-%s-psr%g", r.kind.c_str(),
                          to_string(ac.method).c_str(), to_string(ac.mode).c_str(), ac.psr_db);
            // snr_db in a report tracks artificially injected noise; a cell
            // on the dataset as captured is "clean"
            AttackReport rep = evaluate_cell(*r.model, test_set, ac, kCleanSnrDb, id, &advs);
            fs::path cdir = out / cell_dir_name(rep);
            fs::create_directories(cdir);
            write_per_sample_csv(cdir / "per_sample.csv", rep);
            write_matrix_csv(cdir / "confusion.csv", rep.confusion, rep.n_classes);
            save_adv_batch(cdir / "adv", advs, ac, config_hash);
            std::printf("%s %s %s psr %g dB: SR %.4f accuracy %.4f\n", r.kind.c_str(),
                        to_string(ac.method).c_str(), to_string(ac.mode).c_str(), ac.psr_db,
                        rep.sr, rep.accuracy);
            reports.push_back(std::move(rep));
        }
    }

    write_reports_csv(out / "report.csv", reports, config_hash);
    json manifest = to_json(cfg);
    manifest["config_hash"] = config_hash;
    atomic_write(out / "attack_manifest.json", manifest.dump(2) + "\n");
    if (!sweep.empty())
        std::printf("wrote %zu cells to %s\n", reports.size(),
                    (out / "report.csv").string().c_str());
    return 0;
}

// ---- report ----

int cmd_report(const fs::path& in, const fs::path& out) {
    std::vector<fs::path> files;
    if (fs::exists(in))
        for (const auto& e : fs::recursive_directory_iterator(in))
            if (e.is_regular_file() && e.path().filename() == "report.csv")
                files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty())
        throw ConfigError("no reports found in " + in.string());

    std::string hash;
    std::vector<AttackReport> cells;
    for (const auto& f : files) {
        auto part = read_reports_csv(f, &hash);
        cells.insert(cells.end(), part.begin(), part.end());
    }

    fs::create_directories(out);
    // SR-vs-PSR curves on clean data and SR-vs-SNR curves at fixed PSR,
    // one file per (model, method).
    std::map<std::pair<std::string, std::string>, std::vector<std::pair<double, double>>>
        psr_curves, snr_curves;
    for (const auto& c : cells) {
        if (c.mode != "nontargeted")
            continue;
        if (std::isinf(c.snr_db))
            psr_curves[{c.model_kind, c.method}].emplace_back(c.psr_db, c.sr);
        else
            snr_curves[{c.model_kind, c.method}].emplace_back(c.snr_db, c.sr);
    }
    auto emit = [&](const char* prefix, auto& curves) {
        for (auto& [key, xy] : curves) {
            std::sort(xy.begin(), xy.end());
            write_curve_dat(out /
                                (std::string(prefix) + "_" + key.first + "_" + key.second + ".dat"),
                            key.first, key.second, xy);
        }
    };
    emit("curve_psr", psr_curves);
    emit("curve_snr", snr_curves);

    json summary;
    summary["format_version"] = kReportFormatVersion;
    summary["config_hash"] = hash;
    summary["n_cells"] = cells.size();
    json rows = json::array();
    for (const auto& c : cells)
        rows.push_back({{"id", c.experiment_id},
                        {"model", c.model_kind},
                        {"method", c.method},
                        {"mode", c.mode},
                        {"psr_db", std::isinf(c.psr_db) ? json("-inf") : json(c.psr_db)},
                        {"snr_db", std::isinf(c.snr_db) ? json("clean") : json(c.snr_db)},
                        {"sr", c.sr},
                        {"accuracy", c.accuracy}});
    summary["cells"] = rows;
    atomic_write(out / "summary.json", summary.dump(2) + "\n");
    std::printf("aggregated %zu cells from %zu report files into %s\n", cells.size(), files.size(),
                out.string().c_str());
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"LoRa RF-fingerprint adversarial-attack benchmark"};
    app.require_subcommand(1);

    std::string config_path, out_path, data_path, snr_str, sweep, grid_str, method_str;
    std::vector<std::string> model_files;
    int devices = -1, packets = -1, epochs = -1, batch = -1, iters = -1, targeted = -1;
    double lr = -1, scale = -1, psr = std::numeric_limits<double>::quiet_NaN(), step_frac = -1,
           wd = -1;
    long long seed = -1;
    bool no_random_start = false, clamp01 = false, target_matrix_flag = false;
    std::string model_kind;

    auto add_common = [&](CLI::App* c) {
        c->add_option("--config", config_path, "experiment config JSON");
        c->add_option("--seed", seed, "master seed (overrides config)");
    };

    CLI::App* gen = app.add_subcommand("generate", "synthesize a labeled IQ dataset");
    add_common(gen);
    gen->add_option("--out", out_path, "output dataset directory")->required();
    gen->add_option("--devices", devices, "number of devices");
    gen->add_option("--packets", packets, "packets per device");
    gen->add_option("--snr", snr_str, "capture SNR in dB, or 'clean'");

    CLI::App* tr = app.add_subcommand("train", "train a classifier on a dataset");
    add_common(tr);
    tr->add_option("--data", data_path, "dataset directory")->required();
    tr->add_option("--out", out_path, "checkpoint output path")->required();
    tr->add_option("--model", model_kind, "cnn | lstm | gru");
    tr->add_option("--scale", scale, "hidden-width scale in (0, 1]");
    tr->add_option("--epochs", epochs, "training epochs");
    tr->add_option("--batch", batch, "minibatch size");
    tr->add_option("--lr", lr, "Adam learning rate");
    tr->add_option("--weight-decay", wd, "decoupled weight decay coefficient");

    CLI::App* at = app.add_subcommand("attack", "generate adversarial examples and reports");
    add_common(at);
    at->add_option("--data", data_path, "dataset directory")->required();
    at->add_option("--model-file", model_files, "checkpoint path (repeatable)")->required();
    at->add_option("--out", out_path, "output directory")->required();
    at->add_option("--method", method_str, "fgsm | pgd | awgn");
    at->add_option("--psr", psr, "perturbation-to-signal ratio budget in dB");
    at->add_option("--targeted", targeted, "target device index (0-based); enables targeted mode");
    at->add_option("--iters", iters, "PGD iterations");
    at->add_option("--step-frac", step_frac, "PGD step size as a fraction of epsilon");
    at->add_flag("--no-random-start", no_random_start, "disable the PGD random start");
    at->add_flag("--clamp01", clamp01, "clamp adversarial examples to [0, 1]");
    at->add_option("--sweep", sweep, "psr | snr: run a grid instead of one cell");
    at->add_option("--grid", grid_str, "sweep grid lo:hi:step");
    at->add_flag("--target-matrix", target_matrix_flag,
                 "run the full targets x sources grid over every device");

    CLI::App* rp = app.add_subcommand("report", "aggregate attack reports into curves");
    rp->add_option("--in", data_path, "directory containing report.csv files")->required();
    rp->add_option("--out", out_path, "output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? 0 : 1;
    }

    try {
        ExperimentConfig cfg;
        if (!config_path.empty())
            from_json_file(config_path, cfg);
        if (seed >= 0)
            cfg.seed = static_cast<uint64_t>(seed);
        if (devices > 0)
            cfg.n_devices = devices;
        if (packets > 0)
            cfg.n_packets = packets;
        if (!snr_str.empty())
            cfg.snr_db = parse_snr(snr_str);
        if (!model_kind.empty())
            cfg.model_kind = model_kind;
        if (scale > 0)
            cfg.model_scale = scale;
        if (epochs >= 0)
            cfg.train_cfg.epochs = epochs;
        if (batch > 0)
            cfg.train_cfg.batch_size = batch;
        if (lr > 0)
            cfg.train_cfg.learning_rate = lr;
        if (wd >= 0)
            cfg.train_cfg.weight_decay = wd;
        if (!method_str.empty())
            cfg.attack_cfg.method = attack_method_from_string(method_str);
        if (!std::isnan(psr))
            cfg.attack_cfg.psr_db = psr;
        if (iters > 0)
            cfg.attack_cfg.pgd_iters = iters;
        if (step_frac > 0)
            cfg.attack_cfg.pgd_step_fraction = step_frac;
        if (no_random_start)
            cfg.attack_cfg.pgd_random_start = false;
        if (clamp01)
            cfg.attack_cfg.clamp01 = true;

        if (gen->parsed())
            return cmd_generate(cfg, out_path);
        if (tr->parsed())
            return cmd_train(cfg, data_path, out_path);
        if (at->parsed())
            return cmd_attack(cfg, data_path, model_files, out_path, sweep, grid_str, targeted,
                              target_matrix_flag);
        if (rp->parsed())
            return cmd_report(data_path, out_path);
        return 1;
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const InputError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const IoError& e) {
        std::fprintf(stderr, "I/O error: %s\n", e.what());
        return 2;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "numeric error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 3;
    }
}
