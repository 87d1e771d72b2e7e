#include "rfadv/io.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "rfadv/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "on-disk formats are little-endian; big-endian hosts are unsupported");

namespace rfadv {

using nlohmann::json;

void atomic_write(const std::filesystem::path& path, const std::string& bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw IoError("cannot open for writing: " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out)
            throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec)
        throw IoError("rename failed: " + path.string() + " (" + ec.message() + ")");
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string fnv1a_hex(const std::string& bytes) {
    uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

namespace {

std::string f32_blob(const std::vector<float>& v) {
    std::string out(v.size() * sizeof(float), '\0');
    std::memcpy(out.data(), v.data(), out.size());
    return out;
}

json snr_to_json(double snr_db) {
    if (std::isinf(snr_db) && snr_db > 0)
        return "clean";
    return snr_db;
}

double snr_from_json(const json& j) {
    if (j.is_string()) {
        if (j.get<std::string>() == "clean")
            return kCleanSnrDb;
        throw IoError("manifest: bad snr value");
    }
    return j.get<double>();
}

json fingerprint_to_json(const DeviceFingerprint& fp) {
    return json{{"device_id", fp.device_id},
                {"cfo_hz", fp.cfo_hz},
                {"iq_gain_mismatch", fp.iq_gain_mismatch},
                {"iq_phase_mismatch_rad", fp.iq_phase_mismatch_rad},
                {"pa_a1", fp.pa_a1},
                {"pa_a3", fp.pa_a3},
                {"pa_a5", fp.pa_a5}};
}

DeviceFingerprint fingerprint_from_json(const json& j) {
    DeviceFingerprint fp;
    fp.device_id = j.at("device_id").get<int>();
    fp.cfo_hz = j.at("cfo_hz").get<double>();
    fp.iq_gain_mismatch = j.at("iq_gain_mismatch").get<double>();
    fp.iq_phase_mismatch_rad = j.at("iq_phase_mismatch_rad").get<double>();
    fp.pa_a1 = j.at("pa_a1").get<double>();
    fp.pa_a3 = j.at("pa_a3").get<double>();
    fp.pa_a5 = j.at("pa_a5").get<double>();
    return fp;
}

json lora_to_json(const LoRaConfig& c) {
    return json{{"spreading_factor", c.spreading_factor},
                {"bandwidth_hz", c.bandwidth_hz},
                {"sample_rate_hz", c.sample_rate_hz},
                {"n_preamble_symbols", c.n_preamble_symbols}};
}

LoRaConfig lora_from_json(const json& j) {
    LoRaConfig c;
    c.spreading_factor = j.at("spreading_factor").get<int>();
    c.bandwidth_hz = j.at("bandwidth_hz").get<double>();
    c.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    c.n_preamble_symbols = j.at("n_preamble_symbols").get<int>();
    return c;
}

json ranges_to_json(const FingerprintRanges& r) {
    return json{{"cfo_abs_hz", r.cfo_abs_hz}, {"gain_lo", r.gain_lo},
                {"gain_hi", r.gain_hi},       {"phase_abs_rad", r.phase_abs_rad},
                {"a3_lo", r.a3_lo},           {"a3_hi", r.a3_hi},
                {"a5_lo", r.a5_lo},           {"a5_hi", r.a5_hi},
                {"min_separation", r.min_separation}, {"max_retries", r.max_retries}};
}

FingerprintRanges ranges_from_json(const json& j) {
    FingerprintRanges r;
    r.cfo_abs_hz = j.at("cfo_abs_hz").get<double>();
    r.gain_lo = j.at("gain_lo").get<double>();
    r.gain_hi = j.at("gain_hi").get<double>();
    r.phase_abs_rad = j.at("phase_abs_rad").get<double>();
    r.a3_lo = j.at("a3_lo").get<double>();
    r.a3_hi = j.at("a3_hi").get<double>();
    r.a5_lo = j.at("a5_lo").get<double>();
    r.a5_hi = j.at("a5_hi").get<double>();
    r.min_separation = j.at("min_separation").get<double>();
    r.max_retries = j.at("max_retries").get<int>();
    return r;
}

json pipeline_to_json(const PipelineConfig& pc) {
    return json{{"stft_win", pc.stft_win},
                {"stft_hop", pc.stft_hop},
                {"coarse_cfo_only", pc.coarse_cfo_only}};
}

json parse_json_file(const std::filesystem::path& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded())
        throw IoError("malformed JSON: " + path.string());
    return j;
}

} // namespace

void save_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory: " + dir.string());

    json manifest;
    manifest["format_version"] = kDatasetFormatVersion;
    manifest["kind"] = "rfadv-dataset";
    manifest["lora"] = lora_to_json(ds.cfg);
    manifest["fingerprint_ranges"] = ranges_to_json(ds.ranges);
    manifest["snr_db"] = snr_to_json(ds.snr_db);
    manifest["seed"] = ds.seed;
    manifest["n_devices"] = ds.n_devices;
    manifest["n_packets"] = ds.n_packets;
    manifest["frame_length"] = ds.cfg.frame_length();
    manifest["fingerprints"] = json::array();
    for (const auto& fp : ds.fingerprints)
        manifest["fingerprints"].push_back(fingerprint_to_json(fp));
    manifest["labels"] = ds.labels;
    manifest["split"] = json{{"train", ds.split.train}, {"test", ds.split.test}};
    manifest["config_hash"] = fnv1a_hex(json{{"lora", lora_to_json(ds.cfg)},
                                             {"ranges", ranges_to_json(ds.ranges)},
                                             {"snr", snr_to_json(ds.snr_db)},
                                             {"seed", ds.seed},
                                             {"n_devices", ds.n_devices},
                                             {"n_packets", ds.n_packets}}
                                            .dump());

    std::vector<float> iq;
    iq.reserve(ds.frames.size() * static_cast<std::size_t>(ds.cfg.frame_length()) * 2);
    for (const auto& f : ds.frames)
        for (const auto& s : f.samples) {
            iq.push_back(static_cast<float>(s.real()));
            iq.push_back(static_cast<float>(s.imag()));
        }

    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
    atomic_write(dir / "iq.bin", f32_blob(iq));
}

Dataset load_dataset(const std::filesystem::path& dir) {
    json manifest = parse_json_file(dir / "manifest.json");
    if (manifest.value("format_version", -1) != kDatasetFormatVersion)
        throw IoError("dataset: unsupported format version in " + dir.string());

    Dataset ds;
    ds.cfg = lora_from_json(manifest.at("lora"));
    ds.ranges = ranges_from_json(manifest.at("fingerprint_ranges"));
    ds.snr_db = snr_from_json(manifest.at("snr_db"));
    ds.seed = manifest.at("seed").get<uint64_t>();
    ds.n_devices = manifest.at("n_devices").get<int>();
    ds.n_packets = manifest.at("n_packets").get<int>();
    for (const auto& j : manifest.at("fingerprints"))
        ds.fingerprints.push_back(fingerprint_from_json(j));
    ds.labels = manifest.at("labels").get<std::vector<int>>();
    ds.split.train = manifest.at("split").at("train").get<std::vector<int>>();
    ds.split.test = manifest.at("split").at("test").get<std::vector<int>>();

    const int frame_len = manifest.at("frame_length").get<int>();
    std::string blob = read_file(dir / "iq.bin");
    const std::size_t expect = ds.labels.size() * static_cast<std::size_t>(frame_len) * 2 * sizeof(float);
    if (blob.size() != expect)
        throw IoError("iq.bin: size mismatch in " + dir.string());

    const float* p = reinterpret_cast<const float*>(blob.data());
    ds.frames.resize(ds.labels.size());
    for (std::size_t i = 0; i < ds.frames.size(); ++i) {
        IQFrame& f = ds.frames[i];
        f.sample_rate_hz = ds.cfg.sample_rate_hz;
        f.true_label = ds.labels[i];
        f.samples.resize(static_cast<std::size_t>(frame_len));
        for (int n = 0; n < frame_len; ++n) {
            f.samples[static_cast<std::size_t>(n)] = {static_cast<double>(p[0]),
                                                      static_cast<double>(p[1])};
            p += 2;
        }
    }
    return ds;
}

std::string dataset_hash(const std::filesystem::path& dir) {
    return fnv1a_hex(read_file(dir / "manifest.json"));
}

std::string cache_key(const std::string& dataset_hash, const PipelineConfig& pc) {
    return fnv1a_hex(dataset_hash + pipeline_to_json(pc).dump());
}

void save_spectrogram_cache(const std::filesystem::path& dir, const SpectrogramCache& cache,
                            const std::string& dataset_hash, const PipelineConfig& pc) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory: " + dir.string());

    json manifest;
    manifest["format_version"] = kCacheFormatVersion;
    manifest["kind"] = "rfadv-spectrogram-cache";
    manifest["dataset_hash"] = dataset_hash;
    manifest["pipeline"] = pipeline_to_json(pc);
    manifest["shape"] = {cache.freq_bins, cache.time_frames};
    manifest["count"] = cache.frames.size();
    json stats = json::array();
    for (const auto& [lo, hi] : cache.norm_stats)
        stats.push_back({lo, hi});
    manifest["norm_stats"] = stats;

    std::vector<float> blob;
    blob.reserve(cache.frames.size() * static_cast<std::size_t>(cache.freq_bins) *
                 static_cast<std::size_t>(cache.time_frames));
    for (const auto& t : cache.frames)
        for (double v : t.data)
            blob.push_back(static_cast<float>(v));

    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
    atomic_write(dir / "spec.bin", f32_blob(blob));
}

SpectrogramCache load_spectrogram_cache(const std::filesystem::path& dir) {
    json manifest = parse_json_file(dir / "manifest.json");
    if (manifest.value("format_version", -1) != kCacheFormatVersion)
        throw IoError("cache: unsupported format version in " + dir.string());

    SpectrogramCache cache;
    cache.freq_bins = manifest.at("shape")[0].get<int>();
    cache.time_frames = manifest.at("shape")[1].get<int>();
    const std::size_t count = manifest.at("count").get<std::size_t>();
    for (const auto& s : manifest.at("norm_stats"))
        cache.norm_stats.emplace_back(s[0].get<double>(), s[1].get<double>());

    std::string blob = read_file(dir / "spec.bin");
    const std::size_t per = static_cast<std::size_t>(cache.freq_bins) * cache.time_frames;
    if (blob.size() != count * per * sizeof(float))
        throw IoError("spec.bin: size mismatch in " + dir.string());
    const float* p = reinterpret_cast<const float*>(blob.data());
    cache.frames.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Tensor t({cache.freq_bins, cache.time_frames});
        for (std::size_t k = 0; k < per; ++k)
            t.data[k] = static_cast<double>(*p++);
        cache.frames.push_back(std::move(t));
    }
    return cache;
}

// ---- checkpoint ----

namespace {
constexpr char kCheckpointMagic[8] = {'R', 'F', 'A', 'D', 'V', 'M', 'D', 'L'};
}

void save_checkpoint(const std::filesystem::path& path, const Model& model) {
    json header;
    header["format_version"] = kCheckpointFormatVersion;
    header["kind"] = model.kind;
    header["scale"] = model.scale;
    header["init_seed"] = model.init_seed;
    header["input_shape"] = model.input_shape();
    header["n_classes"] = model.n_classes();
    json tensors = json::array();
    std::size_t total = 0;
    auto named = model.named_params();
    for (const auto& [name, t] : named) {
        tensors.push_back({{"name", name}, {"shape", t->shape}});
        total += t->data.size();
    }
    header["tensors"] = tensors;

    std::string hdr = header.dump();
    std::string out;
    out.reserve(sizeof kCheckpointMagic + 8 + hdr.size() + total * sizeof(double));
    out.append(kCheckpointMagic, sizeof kCheckpointMagic);
    uint64_t hlen = hdr.size();
    out.append(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.append(hdr);
    for (const auto& [name, t] : named)
        out.append(reinterpret_cast<const char*>(t->data.data()), t->data.size() * sizeof(double));
    atomic_write(path, out);
}

Model load_checkpoint(const std::filesystem::path& path) {
    std::string blob = read_file(path);
    if (blob.size() < sizeof kCheckpointMagic + 8 ||
        std::memcmp(blob.data(), kCheckpointMagic, sizeof kCheckpointMagic) != 0)
        throw IoError("checkpoint: bad magic in " + path.string());
    uint64_t hlen = 0;
    std::memcpy(&hlen, blob.data() + sizeof kCheckpointMagic, sizeof hlen);
    const std::size_t hdr_off = sizeof kCheckpointMagic + 8;
    if (blob.size() < hdr_off + hlen)
        throw IoError("checkpoint: truncated header in " + path.string());
    json header = json::parse(blob.substr(hdr_off, hlen), nullptr, false);
    if (header.is_discarded())
        throw IoError("checkpoint: malformed header in " + path.string());
    if (header.value("format_version", -1) != kCheckpointFormatVersion)
        throw IoError("checkpoint: unsupported format version in " + path.string());

    Model model = build_preset(preset_kind_from_string(header.at("kind").get<std::string>()),
                               header.at("input_shape").get<std::vector<int>>(),
                               header.at("n_classes").get<int>(), header.at("scale").get<double>(),
                               header.at("init_seed").get<uint64_t>());

    auto named = model.named_params();
    const auto& tensors = header.at("tensors");
    if (tensors.size() != named.size())
        throw IoError("checkpoint: tensor list mismatch in " + path.string());
    std::size_t off = hdr_off + hlen;
    for (std::size_t i = 0; i < named.size(); ++i) {
        if (tensors[i].at("name").get<std::string>() != named[i].first)
            throw IoError("checkpoint: tensor name mismatch in " + path.string());
        if (tensors[i].at("shape").get<std::vector<int>>() != named[i].second->shape)
            throw IoError("checkpoint: tensor shape mismatch in " + path.string());
        std::size_t bytes = named[i].second->data.size() * sizeof(double);
        if (blob.size() < off + bytes)
            throw IoError("checkpoint: truncated tensor data in " + path.string());
        std::memcpy(named[i].second->data.data(), blob.data() + off, bytes);
        off += bytes;
    }
    if (off != blob.size())
        throw IoError("checkpoint: trailing bytes in " + path.string());
    return model;
}

// ---- adversarial batch ----

void save_adv_batch(const std::filesystem::path& dir, const std::vector<AdversarialExample>& advs,
                    const AttackConfig& cfg, const std::string& config_hash) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw IoError("cannot create directory: " + dir.string());

    json manifest;
    manifest["format_version"] = kCacheFormatVersion;
    manifest["kind"] = "rfadv-adv-batch";
    manifest["method"] = to_string(cfg.method);
    manifest["mode"] = to_string(cfg.mode);
    manifest["target_label"] = cfg.target_label;
    manifest["psr_db"] = cfg.psr_db;
    manifest["pgd_iters"] = cfg.pgd_iters;
    manifest["pgd_step_fraction"] = cfg.pgd_step_fraction;
    manifest["pgd_random_start"] = cfg.pgd_random_start;
    manifest["seed"] = cfg.seed;
    manifest["clamp01"] = cfg.clamp01;
    manifest["config_hash"] = config_hash;
    manifest["count"] = advs.size();
    if (!advs.empty())
        manifest["shape"] = advs.front().x_adv.shape;
    json psrs = json::array();
    for (const auto& a : advs)
        psrs.push_back(a.achieved_psr_db);
    manifest["realized_psr_db"] = psrs;

    std::string blob;
    for (const auto& a : advs)
        blob.append(reinterpret_cast<const char*>(a.x_adv.data.data()),
                    a.x_adv.data.size() * sizeof(double));

    atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
    atomic_write(dir / "adv.bin", blob);
}

// ---- report CSVs ----

namespace {

std::string fmt_double(double v) {
    if (std::isinf(v))
        return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

double parse_double(const std::string& s, const std::filesystem::path& file, std::size_t line) {
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    try {
        std::size_t pos = 0;
        double v = std::stod(s, &pos);
        if (pos != s.size())
            throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw IoError("malformed CSV: " + file.string() + " line " + std::to_string(line) +
                      ": bad number '" + s + "'");
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

const char* kReportHeader =
    "experiment_id,model,method,mode,target,psr_db,snr_db,n_samples,n_excluded,sr,accuracy,seed,"
    "config_hash,format_version";

} // namespace

void write_reports_csv(const std::filesystem::path& path, const std::vector<AttackReport>& reports,
                       const std::string& config_hash) {
    std::string out = std::string(kReportHeader) + "\n";
    for (const auto& r : reports) {
        out += r.experiment_id + "," + r.model_kind + "," + r.method + "," + r.mode + "," +
               std::to_string(r.target_label) + "," + fmt_double(r.psr_db) + "," +
               fmt_double(r.snr_db) + "," + std::to_string(r.per_sample.size()) + "," +
               std::to_string(r.n_excluded) + "," + fmt_double(r.sr) + "," +
               fmt_double(r.accuracy) + "," + std::to_string(r.seed) + "," + config_hash + "," +
               std::to_string(kReportFormatVersion) + "\n";
    }
    atomic_write(path, out);
}

std::vector<AttackReport> read_reports_csv(const std::filesystem::path& path,
                                           std::string* config_hash) {
    std::istringstream in(read_file(path));
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line))
        throw IoError("malformed CSV: " + path.string() + ": empty file");
    ++lineno;
    if (line != kReportHeader)
        throw IoError("malformed CSV: " + path.string() + " line 1: unexpected header");

    std::vector<AttackReport> out;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        auto f = split_csv_line(line);
        if (f.size() != 14)
            throw IoError("malformed CSV: " + path.string() + " line " + std::to_string(lineno) +
                          ": expected 14 fields, got " + std::to_string(f.size()));
        AttackReport r;
        r.experiment_id = f[0];
        r.model_kind = f[1];
        r.method = f[2];
        r.mode = f[3];
        r.target_label = static_cast<int>(parse_double(f[4], path, lineno));
        r.psr_db = parse_double(f[5], path, lineno);
        r.snr_db = parse_double(f[6], path, lineno);
        // f[7] n_samples, f[8] n_excluded: counts live in per_sample normally
        r.n_excluded = static_cast<int>(parse_double(f[8], path, lineno));
        r.sr = parse_double(f[9], path, lineno);
        r.accuracy = parse_double(f[10], path, lineno);
        r.seed = static_cast<uint64_t>(parse_double(f[11], path, lineno));
        int version = static_cast<int>(parse_double(f[13], path, lineno));
        if (version != kReportFormatVersion)
            throw IoError("report version mismatch: " + path.string() + " line " +
                          std::to_string(lineno));
        if (config_hash) {
            if (config_hash->empty())
                *config_hash = f[12];
            else if (*config_hash != f[12])
                throw IoError("mixed config hashes across reports: " + path.string() + " line " +
                              std::to_string(lineno));
        }
        out.push_back(std::move(r));
    }
    return out;
}

void write_per_sample_csv(const std::filesystem::path& path, const AttackReport& report) {
    std::string out = "index,true_label,clean_pred,adv_pred,realized_psr_db\n";
    for (std::size_t i = 0; i < report.per_sample.size(); ++i) {
        const auto& s = report.per_sample[i];
        out += std::to_string(i) + "," + std::to_string(s.true_label) + "," +
               std::to_string(s.clean_pred) + "," + std::to_string(s.adv_pred) + "," +
               fmt_double(s.realized_psr_db) + "\n";
    }
    atomic_write(path, out);
}

namespace {

template <typename T>
void write_matrix_impl(const std::filesystem::path& path, const std::vector<T>& m, int n,
                       const char* fmt) {
    std::string out = "true\\pred";
    for (int j = 0; j < n; ++j)
        out += ",Device " + std::to_string(j + 1);
    out += "\n";
    char buf[40];
    for (int i = 0; i < n; ++i) {
        out += "Device " + std::to_string(i + 1);
        for (int j = 0; j < n; ++j) {
            std::snprintf(buf, sizeof buf, fmt, m[static_cast<std::size_t>(i) * n + j]);
            out += ",";
            out += buf;
        }
        out += "\n";
    }
    atomic_write(path, out);
}

} // namespace

void write_matrix_csv(const std::filesystem::path& path, const std::vector<int>& m, int n) {
    write_matrix_impl(path, m, n, "%d");
}

void write_matrix_csv(const std::filesystem::path& path, const std::vector<double>& m, int n) {
    write_matrix_impl(path, m, n, "%.6f");
}

void write_curve_dat(const std::filesystem::path& path, const std::string& model,
                     const std::string& method, const std::vector<std::pair<double, double>>& xy) {
    std::string out = "# " + model + " " + method + "\n";
    for (const auto& [x, y] : xy)
        out += fmt_double(x) + " " + fmt_double(y) + "\n";
    atomic_write(path, out);
}

} // namespace rfadv
