#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "rfadv/attacks.hpp"
#include "rfadv/dsp.hpp"
#include "rfadv/evaluation.hpp"
#include "rfadv/lora.hpp"
#include "rfadv/nn.hpp"

namespace rfadv {

constexpr int kDatasetFormatVersion = 1;
constexpr int kCacheFormatVersion = 1;
constexpr int kCheckpointFormatVersion = 1;
constexpr int kReportFormatVersion = 1;

// Whole-file atomic write (temp file + rename).
void atomic_write(const std::filesystem::path& path, const std::string& bytes);
std::string read_file(const std::filesystem::path& path);

// FNV-1a over a canonical string (sorted-key JSON dump), 16 hex chars.
std::string fnv1a_hex(const std::string& bytes);

// ---- dataset directory: manifest.json + iq.bin (f32 LE, interleaved I,Q) ----

void save_dataset(const std::filesystem::path& dir, const Dataset& ds);
Dataset load_dataset(const std::filesystem::path& dir);
// Hash of the dataset's manifest (identity for cache keys).
std::string dataset_hash(const std::filesystem::path& dir);

// ---- spectrogram cache: manifest.json + spec.bin (f32 LE row-major) ----

struct SpectrogramCache {
    int freq_bins = 0;
    int time_frames = 0;
    std::vector<Tensor> frames; // values quantized through f32
    std::vector<std::pair<double, double>> norm_stats;
};

void save_spectrogram_cache(const std::filesystem::path& dir, const SpectrogramCache& cache,
                            const std::string& dataset_hash, const PipelineConfig& pc);
SpectrogramCache load_spectrogram_cache(const std::filesystem::path& dir);
// Cache key for (dataset identity, preprocessing parameters).
std::string cache_key(const std::string& dataset_hash, const PipelineConfig& pc);

// ---- model checkpoint: one file, JSON header + f64 LE tensor blob ----

void save_checkpoint(const std::filesystem::path& path, const Model& model);
Model load_checkpoint(const std::filesystem::path& path);

// ---- adversarial batch: adv.bin (f64 LE) + manifest.json ----

void save_adv_batch(const std::filesystem::path& dir, const std::vector<AdversarialExample>& advs,
                    const AttackConfig& cfg, const std::string& config_hash);

// ---- reports ----

void write_reports_csv(const std::filesystem::path& path, const std::vector<AttackReport>& reports,
                       const std::string& config_hash);
std::vector<AttackReport> read_reports_csv(const std::filesystem::path& path,
                                           std::string* config_hash = nullptr);
void write_per_sample_csv(const std::filesystem::path& path, const AttackReport& report);

// Integer count matrix (confusion) or fraction matrix (targeted grid) with
// "Device k" row/column labels.
void write_matrix_csv(const std::filesystem::path& path, const std::vector<int>& m, int n);
void write_matrix_csv(const std::filesystem::path& path, const std::vector<double>& m, int n);

// Gnuplot-style curve files: "# model method" header, "x sr" rows.
void write_curve_dat(const std::filesystem::path& path, const std::string& model,
                     const std::string& method, const std::vector<std::pair<double, double>>& xy);

} // namespace rfadv
