#include "rfadv/lora.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rfadv/errors.hpp"

namespace rfadv {

int LoRaConfig::samples_per_symbol() const {
    double v = std::ldexp(1.0, spreading_factor) * sample_rate_hz / bandwidth_hz;
    double r = std::round(v);
    if (!(r >= 1.0) || std::abs(v - r) > 1e-9 * std::max(1.0, v))
        throw ConfigError("lora: samples per symbol (2^sf*fs/bw) must be a positive integer");
    return static_cast<int>(r);
}

void LoRaConfig::validate() const {
    if (spreading_factor < 1 || spreading_factor > 16)
        throw ConfigError("lora: spreading factor out of range");
    if (!(bandwidth_hz > 0.0) || !(sample_rate_hz > 0.0))
        throw ConfigError("lora: bandwidth and sample rate must be positive");
    if (sample_rate_hz < bandwidth_hz)
        throw ConfigError("lora: sample rate must be >= bandwidth");
    if (n_preamble_symbols < 1)
        throw ConfigError("lora: need at least one preamble symbol");
    (void)samples_per_symbol();
}

IQFrame gen_ideal_preamble(const LoRaConfig& cfg) {
    cfg.validate();
    const int sps = cfg.samples_per_symbol();
    const double fs = cfg.sample_rate_hz;
    const double bw = cfg.bandwidth_hz;
    const double tsym = cfg.symbol_duration_s();

    IQFrame out;
    out.sample_rate_hz = fs;
    out.samples.resize(static_cast<std::size_t>(cfg.frame_length()));
    for (int n = 0; n < sps; ++n) {
        double t = n / fs;
        // f(t) = -bw/2 + (bw/tsym) t; phase is its integral, zero at t = 0.
        double phase = 2.0 * M_PI * (-0.5 * bw * t + 0.5 * (bw / tsym) * t * t);
        out.samples[static_cast<std::size_t>(n)] = std::polar(1.0, phase);
    }
    // The upchirp's phase returns to 0 (mod 2 pi) at the symbol boundary, so
    // repeating the first symbol keeps the frame phase-continuous.
    for (int s = 1; s < cfg.n_preamble_symbols; ++s)
        std::copy_n(out.samples.begin(), sps, out.samples.begin() + static_cast<std::ptrdiff_t>(s) * sps);
    return out;
}

FingerprintSampler::FingerprintSampler(uint64_t seed, const LoRaConfig& cfg, FingerprintRanges ranges)
    : rng_(seed), ranges_(ranges) {
    cfg.validate();
    cfo_wrap_hz_ = cfg.sample_rate_hz / cfg.samples_per_symbol();
    if (ranges_.cfo_abs_hz > 0.1 * cfg.bandwidth_hz)
        throw ConfigError("fingerprints: CFO range exceeds 0.1 * bandwidth");
    if (!(ranges_.gain_lo > 0.0))
        throw ConfigError("fingerprints: gain range must be positive");
}

double FingerprintSampler::separation(const DeviceFingerprint& a, const DeviceFingerprint& b) const {
    // CFO distance is taken modulo the coarse-compensation bin: two devices
    // whose offsets differ by a whole bin leave the same residual and are
    // not distinguishable through the spectrogram.
    double dc = std::fmod(std::abs(a.cfo_hz - b.cfo_hz), cfo_wrap_hz_);
    dc = std::min(dc, cfo_wrap_hz_ - dc) / cfo_wrap_hz_;
    double dg = std::abs(a.iq_gain_mismatch - b.iq_gain_mismatch) /
                std::max(ranges_.gain_hi - ranges_.gain_lo, 1e-12);
    double dp = std::abs(a.iq_phase_mismatch_rad - b.iq_phase_mismatch_rad) /
                std::max(2.0 * ranges_.phase_abs_rad, 1e-12);
    return std::max({dc, dg, dp});
}

DeviceFingerprint FingerprintSampler::sample(int device_id) {
    for (int attempt = 0; attempt < ranges_.max_retries; ++attempt) {
        DeviceFingerprint fp;
        fp.device_id = device_id;
        fp.cfo_hz = rng_.uniform(-ranges_.cfo_abs_hz, ranges_.cfo_abs_hz);
        fp.iq_gain_mismatch = rng_.uniform(ranges_.gain_lo, ranges_.gain_hi);
        fp.iq_phase_mismatch_rad = rng_.uniform(-ranges_.phase_abs_rad, ranges_.phase_abs_rad);
        fp.pa_a1 = 1.0;
        fp.pa_a3 = rng_.uniform(ranges_.a3_lo, ranges_.a3_hi);
        fp.pa_a5 = rng_.uniform(ranges_.a5_lo, ranges_.a5_hi);

        bool ok = true;
        for (const auto& prev : drawn_) {
            if (separation(fp, prev) < ranges_.min_separation) {
                ok = false;
                break;
            }
        }
        if (ok) {
            drawn_.push_back(fp);
            return fp;
        }
    }
    throw NumericError("fingerprints: could not separate device " + std::to_string(device_id) +
                       " after " + std::to_string(ranges_.max_retries) + " retries");
}

IQFrame apply_fingerprint(const IQFrame& frame, const DeviceFingerprint& fp, const LoRaConfig& cfg) {
    if (frame.samples.empty())
        throw InputError("apply_fingerprint: empty frame");
    if (!(fp.iq_gain_mismatch > 0.0) || !(fp.pa_a1 > 0.0))
        throw InputError("apply_fingerprint: gain and a1 must be positive");
    if (std::abs(fp.cfo_hz) > 0.1 * cfg.bandwidth_hz)
        throw InputError("apply_fingerprint: |cfo| above 0.1 * bandwidth");

    const std::complex<double> ejphi = std::polar(1.0, fp.iq_phase_mismatch_rad);
    const std::complex<double> mu = 0.5 * (1.0 + fp.iq_gain_mismatch * ejphi);
    const std::complex<double> nu = 0.5 * (1.0 - fp.iq_gain_mismatch * ejphi);
    const double w = 2.0 * M_PI * fp.cfo_hz / frame.sample_rate_hz;

    IQFrame out = frame;
    for (std::size_t n = 0; n < out.samples.size(); ++n) {
        std::complex<double> x = frame.samples[n];
        // modulator IQ imbalance
        std::complex<double> y = mu * x + nu * std::conj(x);
        // memoryless odd-order PA
        double p2 = std::norm(y);
        y *= fp.pa_a1 + fp.pa_a3 * p2 + fp.pa_a5 * p2 * p2;
        // oscillator offset as equivalent baseband rotation
        out.samples[n] = y * std::polar(1.0, w * static_cast<double>(n));
    }
    return out;
}

namespace {

double frame_power(const IQFrame& f) {
    double acc = 0.0;
    for (const auto& s : f.samples)
        acc += std::norm(s);
    return f.samples.empty() ? 0.0 : acc / static_cast<double>(f.samples.size());
}

} // namespace

IQFrame add_awgn(const IQFrame& frame, double snr_db, Rng& rng) {
    if (std::isinf(snr_db) && snr_db > 0.0)
        return frame;
    double px = frame_power(frame);
    if (!(px > 0.0))
        throw NumericError("add_awgn: zero-power frame");
    double pn = px / std::pow(10.0, snr_db / 10.0);
    double sigma = std::sqrt(pn);
    IQFrame out = frame;
    for (auto& s : out.samples)
        s += sigma * rng.circular_gaussian();
    return out;
}

Dataset build_dataset(const LoRaConfig& cfg, int n_devices, int n_packets, double snr_db,
                      uint64_t seed, const FingerprintRanges& ranges) {
    if (n_devices < 2)
        throw InputError("build_dataset: need at least 2 devices");
    if (n_packets < 10)
        throw InputError("build_dataset: need at least 10 packets per device");
    cfg.validate();

    Dataset ds;
    ds.cfg = cfg;
    ds.ranges = ranges;
    ds.snr_db = snr_db;
    ds.seed = seed;
    ds.n_devices = n_devices;
    ds.n_packets = n_packets;

    FingerprintSampler sampler(derive_seed(seed, "fingerprints"), cfg, ranges);
    for (int d = 0; d < n_devices; ++d)
        ds.fingerprints.push_back(sampler.sample(d));

    const IQFrame ideal = gen_ideal_preamble(cfg);
    ds.frames.reserve(static_cast<std::size_t>(n_devices) * n_packets);
    ds.labels.reserve(ds.frames.capacity());
    for (int d = 0; d < n_devices; ++d) {
        IQFrame tx = apply_fingerprint(ideal, ds.fingerprints[static_cast<std::size_t>(d)], cfg);
        tx.true_label = d;
        for (int p = 0; p < n_packets; ++p) {
            Rng noise(derive_seed(seed, "awgn", static_cast<uint64_t>(d) * n_packets + p));
            ds.frames.push_back(add_awgn(tx, snr_db, noise));
            ds.labels.push_back(d);
        }
    }

    // Stratified split: per device, shuffle packet slots and hold out
    // round(kTestFraction * n_packets) of them (at least one per side).
    int n_test = static_cast<int>(std::lround(kTestFraction * n_packets));
    n_test = std::clamp(n_test, 1, n_packets - 1);
    for (int d = 0; d < n_devices; ++d) {
        std::vector<int> idx(static_cast<std::size_t>(n_packets));
        for (int p = 0; p < n_packets; ++p)
            idx[static_cast<std::size_t>(p)] = d * n_packets + p;
        Rng shuffle(derive_seed(seed, "split", static_cast<uint64_t>(d)));
        for (int i = n_packets - 1; i > 0; --i)
            std::swap(idx[static_cast<std::size_t>(i)],
                      idx[static_cast<std::size_t>(shuffle.uniform_index(static_cast<uint64_t>(i + 1)))]);
        for (int i = 0; i < n_packets; ++i)
            (i < n_test ? ds.split.test : ds.split.train).push_back(idx[static_cast<std::size_t>(i)]);
    }
    std::sort(ds.split.train.begin(), ds.split.train.end());
    std::sort(ds.split.test.begin(), ds.split.test.end());
    return ds;
}

} // namespace rfadv
