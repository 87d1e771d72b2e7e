#pragma once

#include <complex>
#include <vector>

#include "rfadv/lora.hpp"
#include "rfadv/tensor.hpp"

namespace rfadv {

struct ComplexMatrix {
    int rows = 0;
    int cols = 0;
    std::vector<std::complex<double>> v; // row-major

    ComplexMatrix() = default;
    ComplexMatrix(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c) {}
    std::complex<double>& at(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
    const std::complex<double>& at(int r, int c) const {
        return v[static_cast<std::size_t>(r) * cols + c];
    }
};

// Classifier input: log-magnitude-ratio time-frequency matrix, min-max
// scaled to [0, 1] with the scaling stats kept for reporting.
struct Spectrogram {
    int freq_bins = 0;
    int time_frames = 0;
    std::vector<double> values; // row-major [freq_bins][time_frames]
    double norm_min = 0.0;
    double norm_max = 0.0;

    double& at(int k, int m) { return values[static_cast<std::size_t>(k) * time_frames + m]; }
    double at(int k, int m) const { return values[static_cast<std::size_t>(k) * time_frames + m]; }

    Tensor to_tensor() const { return Tensor({freq_bins, time_frames}, values); }
};

struct PipelineConfig {
    int stft_win = 256;
    int stft_hop = 128;
    // Compensate only the bin-quantized part of the CFO estimate, keeping the
    // sub-bin residual in the signal as a device feature.
    bool coarse_cfo_only = true;
};

// Scales to unit mean-square magnitude.
IQFrame normalize(const IQFrame& frame);

// Two-stage estimate on a dechirped preamble: integer-bin peak of the
// averaged symbol FFT, then the lag-N phase term for the sub-bin part.
// The lag-N term alone is unambiguous only within +-fs/(2N), far less than
// realistic offsets, hence the coarse stage.
double estimate_cfo(const IQFrame& frame, const LoRaConfig& cfg);

// Multiplies sample n by exp(-j 2 pi cfo n / fs).
IQFrame compensate_cfo(const IQFrame& frame, double cfo_hz);

// Rectangular-window sliding DFT, no padding, DC-centered rows.
ComplexMatrix stft(const IQFrame& frame, int win_len, int hop);

// Q[k,m] = log(|S[k,m+1]| / |S[k,m]| + delta), then min-max scaled to [0,1].
// A flat complex channel gain cancels in the ratio.
Spectrogram channel_independent_spectrogram(const ComplexMatrix& S);

// normalize -> estimate/compensate CFO -> stft -> channel-independent map.
Spectrogram preprocess(const IQFrame& frame, const LoRaConfig& cfg, const PipelineConfig& pc = {});

// Width of one dechirped-FFT bin; the coarse CFO stage quantizes to it.
double cfo_bin_width_hz(const LoRaConfig& cfg);

constexpr double kSpectrogramLogDelta = 1e-12;

} // namespace rfadv
