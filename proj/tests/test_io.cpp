#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "rfadv/errors.hpp"
#include "rfadv/io.hpp"

using namespace rfadv;
using namespace rfadv::testing;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("rfadv-test-" + std::to_string(::getpid()) + "-" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

LoRaConfig small_cfg() {
    LoRaConfig c;
    c.spreading_factor = 5;
    c.sample_rate_hz = 250e3;
    c.n_preamble_symbols = 2;
    return c;
}

} // namespace

TEST_CASE("dataset round-trip is byte-stable") {
    TempDir tmp;
    Dataset ds = build_dataset(small_cfg(), 2, 10, 50.0, 7);
    auto dir1 = tmp.path / "d1";
    auto dir2 = tmp.path / "d2";
    save_dataset(dir1, ds);

    Dataset loaded = load_dataset(dir1);
    CHECK(loaded.labels == ds.labels);
    CHECK(loaded.split.train == ds.split.train);
    CHECK(loaded.split.test == ds.split.test);
    CHECK(loaded.n_devices == ds.n_devices);
    CHECK(loaded.fingerprints.size() == ds.fingerprints.size());
    for (std::size_t i = 0; i < ds.fingerprints.size(); ++i)
        CHECK(loaded.fingerprints[i].cfo_hz == ds.fingerprints[i].cfo_hz);
    // samples pass through f32 on disk
    for (std::size_t i = 0; i < ds.frames.size(); ++i)
        for (std::size_t n = 0; n < ds.frames[i].samples.size(); ++n) {
            CHECK(loaded.frames[i].samples[n].real() ==
                  static_cast<double>(static_cast<float>(ds.frames[i].samples[n].real())));
            CHECK(loaded.frames[i].samples[n].imag() ==
                  static_cast<double>(static_cast<float>(ds.frames[i].samples[n].imag())));
        }

    save_dataset(dir2, loaded);
    CHECK(read_file(dir1 / "iq.bin") == read_file(dir2 / "iq.bin"));
    CHECK(read_file(dir1 / "manifest.json") == read_file(dir2 / "manifest.json"));
    CHECK(dataset_hash(dir1) == dataset_hash(dir2));

    CHECK_THROWS_AS((void)load_dataset(tmp.path / "missing"), IoError);
}

TEST_CASE("checkpoint round-trip is bit-exact") {
    TempDir tmp;
    Model m = build_preset(PresetKind::gru, {20, 12}, 4, 0.25, 99);
    auto path = tmp.path / "model.bin";
    save_checkpoint(path, m);
    Model back = load_checkpoint(path);

    CHECK(back.kind == "gru");
    CHECK(back.scale == 0.25);
    CHECK(back.n_classes() == 4);
    auto a = m.named_params();
    auto b = back.named_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].first == b[i].first);
        CHECK(a[i].second->data == b[i].second->data);
    }

    Rng rng(4);
    Tensor x = random_tensor({20, 12}, rng, 0.0, 1.0);
    CHECK(m.forward(x).data == back.forward(x).data);

    // save(load(x)) is byte-identical
    auto path2 = tmp.path / "model2.bin";
    save_checkpoint(path2, back);
    CHECK(read_file(path) == read_file(path2));

    atomic_write(tmp.path / "junk.bin", "not a checkpoint");
    CHECK_THROWS_AS((void)load_checkpoint(tmp.path / "junk.bin"), IoError);
}

TEST_CASE("spectrogram cache round-trip") {
    TempDir tmp;
    SpectrogramCache cache;
    cache.freq_bins = 6;
    cache.time_frames = 4;
    Rng rng(5);
    for (int i = 0; i < 3; ++i) {
        Tensor t = random_tensor({6, 4}, rng, 0.0, 1.0);
        // canonical cache values are f32-quantized
        for (auto& v : t.data)
            v = static_cast<double>(static_cast<float>(v));
        cache.frames.push_back(std::move(t));
        cache.norm_stats.emplace_back(-1.5 * i, 2.5 * i);
    }
    PipelineConfig pc;
    save_spectrogram_cache(tmp.path / "cache", cache, "abc123", pc);
    SpectrogramCache back = load_spectrogram_cache(tmp.path / "cache");
    CHECK(back.freq_bins == 6);
    CHECK(back.time_frames == 4);
    REQUIRE(back.frames.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back.frames[static_cast<std::size_t>(i)].data ==
              cache.frames[static_cast<std::size_t>(i)].data);
        CHECK(back.norm_stats[static_cast<std::size_t>(i)] ==
              cache.norm_stats[static_cast<std::size_t>(i)]);
    }
    CHECK(cache_key("abc", pc) != cache_key("abd", pc));
    PipelineConfig pc2 = pc;
    pc2.stft_hop = 64;
    CHECK(cache_key("abc", pc) != cache_key("abc", pc2));
}

TEST_CASE("report CSV round-trip and error reporting") {
    TempDir tmp;
    AttackReport r;
    r.experiment_id = "cnn-pgd-psr-40-clean";
    r.model_kind = "cnn";
    r.method = "pgd";
    r.mode = "nontargeted";
    r.psr_db = -40.0;
    r.snr_db = kCleanSnrDb;
    r.per_sample = {{0, 0, 1, -40.2}, {1, 1, 0, -40.1}};
    r.sr = 1.0;
    r.accuracy = 0.0;
    r.seed = 17;

    auto path = tmp.path / "report.csv";
    write_reports_csv(path, {r}, "deadbeef");
    std::string hash;
    auto back = read_reports_csv(path, &hash);
    REQUIRE(back.size() == 1);
    CHECK(hash == "deadbeef");
    CHECK(back[0].experiment_id == r.experiment_id);
    CHECK(back[0].model_kind == "cnn");
    CHECK(back[0].method == "pgd");
    CHECK(back[0].psr_db == -40.0);
    CHECK(std::isinf(back[0].snr_db));
    CHECK(back[0].sr == 1.0);
    CHECK(back[0].seed == 17);

    // malformed line -> IoError naming file and line
    atomic_write(tmp.path / "bad.csv",
                 read_file(path) + "cnn,pgd,nontargeted\n");
    try {
        (void)read_reports_csv(tmp.path / "bad.csv");
        FAIL("expected IoError");
    } catch (const IoError& e) {
        std::string msg = e.what();
        CHECK(msg.find("bad.csv") != std::string::npos);
        CHECK(msg.find("line 3") != std::string::npos);
    }

    // version mismatch is rejected
    std::string txt = read_file(path);
    auto pos = txt.rfind(",1\n");
    REQUIRE(pos != std::string::npos);
    txt.replace(pos, 3, ",2\n");
    atomic_write(tmp.path / "vers.csv", txt);
    CHECK_THROWS_AS((void)read_reports_csv(tmp.path / "vers.csv"), IoError);
}

TEST_CASE("per-sample, matrix and curve writers") {
    TempDir tmp;
    AttackReport r;
    r.per_sample = {{0, 0, 1, -40.25}};
    write_per_sample_csv(tmp.path / "ps.csv", r);
    std::string ps = read_file(tmp.path / "ps.csv");
    CHECK(ps.find("0,0,0,1,-40.25") != std::string::npos);

    std::vector<int> conf{5, 0, 1, 4};
    write_matrix_csv(tmp.path / "conf.csv", conf, 2);
    std::string cm = read_file(tmp.path / "conf.csv");
    CHECK(cm.find("Device 1") != std::string::npos);
    CHECK(cm.find("Device 2,1,4") != std::string::npos);

    write_curve_dat(tmp.path / "c.dat", "cnn", "pgd", {{-45.0, 0.1}, {-40.0, 0.9}});
    std::string cd = read_file(tmp.path / "c.dat");
    CHECK(cd.find("# cnn pgd") == 0);
    CHECK(cd.find("-40 0.9") != std::string::npos);
}

TEST_CASE("config hash is stable") {
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    CHECK(fnv1a_hex("rfadv") == fnv1a_hex("rfadv"));
    CHECK(fnv1a_hex("a") != fnv1a_hex("b"));
}
