#include "rfadv/dsp.hpp"

#include <algorithm>
#include <cmath>

#include "rfadv/errors.hpp"
#include "rfadv/fft.hpp"

namespace rfadv {

IQFrame normalize(const IQFrame& frame) {
    double acc = 0.0;
    for (const auto& s : frame.samples)
        acc += std::norm(s);
    if (frame.samples.empty() || !(acc > 0.0))
        throw NumericError("normalize: zero-power frame");
    double scale = 1.0 / std::sqrt(acc / static_cast<double>(frame.samples.size()));
    IQFrame out = frame;
    for (auto& s : out.samples)
        s *= scale;
    return out;
}

double cfo_bin_width_hz(const LoRaConfig& cfg) {
    return cfg.sample_rate_hz / cfg.samples_per_symbol();
}

double estimate_cfo(const IQFrame& frame, const LoRaConfig& cfg) {
    const int sps = cfg.samples_per_symbol();
    const std::size_t len = frame.samples.size();
    if (len < 2 * static_cast<std::size_t>(sps))
        throw InputError("estimate_cfo: need at least 2 preamble symbols");
    const double fs = frame.sample_rate_hz;
    const int n_sym = static_cast<int>(len) / sps;

    // Dechirp against the ideal upchirp; a pure CFO becomes a tone.
    LoRaConfig one = cfg;
    one.n_preamble_symbols = 1;
    const IQFrame up = gen_ideal_preamble(one);
    std::vector<std::complex<double>> d(static_cast<std::size_t>(n_sym) * sps);
    for (std::size_t n = 0; n < d.size(); ++n)
        d[n] = frame.samples[n] * std::conj(up.samples[n % static_cast<std::size_t>(sps)]);

    // Coarse stage: peak of the symbol-averaged periodogram, resolution fs/N.
    std::vector<double> pgram(static_cast<std::size_t>(sps), 0.0);
    for (int s = 0; s < n_sym; ++s) {
        auto X = fft_forward(std::span<const std::complex<double>>(d.data() + static_cast<std::ptrdiff_t>(s) * sps,
                                                                   static_cast<std::size_t>(sps)));
        for (int k = 0; k < sps; ++k)
            pgram[static_cast<std::size_t>(k)] += std::norm(X[static_cast<std::size_t>(k)]);
    }
    int peak = static_cast<int>(std::max_element(pgram.begin(), pgram.end()) - pgram.begin());
    int signed_bin = peak <= sps / 2 ? peak : peak - sps;
    double coarse = signed_bin * fs / sps;

    // Fine stage: lag-N phase of the coarse-corrected dechirped tone,
    // unambiguous within +-fs/(2N) around the coarse value.
    const double w = 2.0 * M_PI * coarse / fs;
    std::complex<double> acc(0.0, 0.0);
    for (std::size_t n = static_cast<std::size_t>(sps); n < d.size(); ++n) {
        std::complex<double> a = d[n] * std::polar(1.0, -w * static_cast<double>(n));
        std::complex<double> b = d[n - static_cast<std::size_t>(sps)] *
                                 std::polar(1.0, -w * static_cast<double>(n - static_cast<std::size_t>(sps)));
        acc += a * std::conj(b);
    }
    double fine = std::arg(acc) * fs / (2.0 * M_PI * sps);
    return coarse + fine;
}

IQFrame compensate_cfo(const IQFrame& frame, double cfo_hz) {
    const double w = -2.0 * M_PI * cfo_hz / frame.sample_rate_hz;
    IQFrame out = frame;
    for (std::size_t n = 0; n < out.samples.size(); ++n)
        out.samples[n] *= std::polar(1.0, w * static_cast<double>(n));
    return out;
}

ComplexMatrix stft(const IQFrame& frame, int win_len, int hop) {
    const int len = static_cast<int>(frame.samples.size());
    if (win_len <= 0 || hop <= 0 || hop > win_len)
        throw ConfigError("stft: need 0 < hop <= win_len");
    if (win_len > len)
        throw ConfigError("stft: window longer than frame");
    const int cols = (len - win_len) / hop + 1;
    ComplexMatrix out(win_len, cols);
    for (int c = 0; c < cols; ++c) {
        auto X = fft_forward(std::span<const std::complex<double>>(
            frame.samples.data() + static_cast<std::ptrdiff_t>(c) * hop, static_cast<std::size_t>(win_len)));
        // DC-centered rows: row r holds frequency (r - win/2) * fs / win.
        for (int r = 0; r < win_len; ++r)
            out.at(r, c) = X[static_cast<std::size_t>((r + (win_len + 1) / 2) % win_len)];
    }
    return out;
}

Spectrogram channel_independent_spectrogram(const ComplexMatrix& S) {
    if (S.cols < 2)
        throw InputError("channel_independent_spectrogram: need >= 2 STFT columns");
    Spectrogram q;
    q.freq_bins = S.rows;
    q.time_frames = S.cols - 1;
    q.values.resize(static_cast<std::size_t>(q.freq_bins) * q.time_frames);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < q.freq_bins; ++k) {
        for (int m = 0; m < q.time_frames; ++m) {
            double a = std::abs(S.at(k, m + 1));
            double b = std::abs(S.at(k, m));
            double val = std::log(a / std::max(b, 1e-300) + kSpectrogramLogDelta);
            q.at(k, m) = val;
            lo = std::min(lo, val);
            hi = std::max(hi, val);
        }
    }
    q.norm_min = lo;
    q.norm_max = hi;
    const double span = hi - lo;
    if (span > 0.0) {
        for (double& v : q.values)
            v = (v - lo) / span;
    } else {
        std::fill(q.values.begin(), q.values.end(), 0.0);
    }
    return q;
}

Spectrogram preprocess(const IQFrame& frame, const LoRaConfig& cfg, const PipelineConfig& pc) {
    IQFrame x = normalize(frame);
    double est = estimate_cfo(x, cfg);
    double comp = est;
    if (pc.coarse_cfo_only) {
        double bin = cfo_bin_width_hz(cfg);
        comp = std::round(est / bin) * bin;
    }
    x = compensate_cfo(x, comp);
    return channel_independent_spectrogram(stft(x, pc.stft_win, pc.stft_hop));
}

} // namespace rfadv
