#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rfadv/attacks.hpp"
#include "rfadv/dsp.hpp"
#include "rfadv/lora.hpp"
#include "rfadv/nn.hpp"

namespace rfadv {

struct PerSample {
    int true_label = -1;
    int clean_pred = -1;
    int adv_pred = -1;
    double realized_psr_db = 0.0;
};

// One experiment cell: a (model, method, mode, psr, snr) combination
// evaluated over a test set.
struct AttackReport {
    std::string experiment_id;
    std::string model_kind;
    std::string method; // fgsm | pgd | awgn | none
    std::string mode;   // nontargeted | targeted
    int target_label = -1;
    double psr_db = 0.0;
    double snr_db = kCleanSnrDb;
    double sr = 0.0;
    double accuracy = 0.0; // vs ground truth, after the attack
    int n_classes = 0;
    std::vector<int> confusion; // n x n row-major, true label x post-attack prediction
    std::vector<PerSample> per_sample;
    int n_excluded = 0; // targeted mode: samples whose true label equals the target
    uint64_t seed = 0;
};

// SR/accuracy recomputed from the per-sample records; the report fields must
// match these exactly.
double recompute_sr(const AttackReport& r);
double recompute_accuracy(const AttackReport& r);

// Fraction of test samples whose prediction equals the true label.
double accuracy(const Model& model, const SampleSet& test);

// Runs cfg over every test sample (per-sample seeds derived from cfg.seed)
// and assembles the full report. Non-targeted SR counts predictions that
// moved away from the model's own clean prediction; targeted SR counts
// predictions equal to the target, excluding samples already labeled as it.
// advs_out, when given, receives the per-sample adversarial examples.
AttackReport evaluate_cell(const Model& model, const SampleSet& test, const AttackConfig& cfg,
                           double snr_db = kCleanSnrDb, std::string experiment_id = {},
                           std::vector<AdversarialExample>* advs_out = nullptr);

// Assembles a report from precomputed adversarial predictions; evaluate_cell
// delegates here, and tests can drive the counting rules directly.
AttackReport assemble_report(const Model& model, const SampleSet& test, const AttackConfig& cfg,
                             const std::vector<PerSample>& per_sample);

double sr_nontargeted(const Model& model, const SampleSet& test, AttackConfig cfg);
double sr_targeted(const Model& model, const SampleSet& test, AttackConfig cfg, int target);

// n x n counts; with a config, predictions are taken after the attack.
std::vector<int> confusion(const Model& model, const SampleSet& test,
                           const AttackConfig* cfg = nullptr);

// Row t = targeted attack with target t; entry (t, source) = fraction of
// source-device test samples identified as t.
std::vector<double> target_matrix(const Model& model, const SampleSet& test, AttackConfig base);

struct ModelRef {
    std::string kind;
    const Model* model = nullptr;
};

// Full factorial over models x methods x PSR grid on a fixed test set.
std::vector<AttackReport> psr_sweep(std::span<const ModelRef> models,
                                    std::span<const AttackMethod> methods,
                                    std::span<const double> psr_grid, const SampleSet& test,
                                    uint64_t seed);

// Re-noises the raw test frames at each SNR, re-runs preprocessing, then
// attacks at a fixed PSR. Models are used as trained (on clean data).
std::vector<AttackReport> snr_sweep(std::span<const ModelRef> models,
                                    std::span<const AttackMethod> methods,
                                    std::span<const double> snr_grid, double psr_db,
                                    const Dataset& data, const PipelineConfig& pc, uint64_t seed);

// Preprocesses the dataset's frames into classifier inputs for the given
// index subset (parallel across frames).
SampleSet preprocess_set(const Dataset& data, std::span<const int> indices,
                         const PipelineConfig& pc);

} // namespace rfadv
