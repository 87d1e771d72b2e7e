#include "rfadv/evaluation.hpp"

#include <cmath>
#include <cstdio>

#include "rfadv/errors.hpp"
#include "rfadv/parallel.hpp"

namespace rfadv {

double recompute_sr(const AttackReport& r) {
    if (r.per_sample.empty())
        return 0.0;
    if (r.mode == "targeted") {
        long n = 0, hits = 0;
        for (const auto& s : r.per_sample) {
            if (s.true_label == r.target_label)
                continue;
            ++n;
            if (s.adv_pred == r.target_label)
                ++hits;
        }
        return n == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(n);
    }
    long hits = 0;
    for (const auto& s : r.per_sample)
        if (s.adv_pred != s.clean_pred)
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(r.per_sample.size());
}

double recompute_accuracy(const AttackReport& r) {
    if (r.per_sample.empty())
        return 0.0;
    long hits = 0;
    for (const auto& s : r.per_sample)
        if (s.adv_pred == s.true_label)
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(r.per_sample.size());
}

double accuracy(const Model& model, const SampleSet& test) {
    const std::size_t n = test.x.size();
    if (n == 0)
        throw InputError("accuracy: empty test set");
    std::vector<int> preds(n);
    parallel_for(n, [&](std::size_t i) { preds[i] = model.predict(test.x[i]); });
    long hits = 0;
    for (std::size_t i = 0; i < n; ++i)
        if (preds[i] == test.labels[i])
            ++hits;
    return static_cast<double>(hits) / static_cast<double>(n);
}

AttackReport assemble_report(const Model& model, const SampleSet& test, const AttackConfig& cfg,
                             const std::vector<PerSample>& per_sample) {
    AttackReport r;
    r.model_kind = model.kind;
    r.method = to_string(cfg.method);
    r.mode = to_string(cfg.mode);
    r.target_label = cfg.mode == AttackMode::targeted ? cfg.target_label : -1;
    r.psr_db = cfg.psr_db;
    r.seed = cfg.seed;
    r.n_classes = model.n_classes();
    r.per_sample = per_sample;
    r.confusion.assign(static_cast<std::size_t>(r.n_classes) * r.n_classes, 0);
    for (const auto& s : per_sample) {
        r.confusion[static_cast<std::size_t>(s.true_label) * r.n_classes + s.adv_pred] += 1;
        if (cfg.mode == AttackMode::targeted && s.true_label == cfg.target_label)
            ++r.n_excluded;
    }
    r.sr = recompute_sr(r);
    r.accuracy = recompute_accuracy(r);
    (void)test;
    return r;
}

AttackReport evaluate_cell(const Model& model, const SampleSet& test, const AttackConfig& cfg,
                           double snr_db, std::string experiment_id,
                           std::vector<AdversarialExample>* advs_out) {
    const std::size_t n = test.x.size();
    if (n == 0)
        throw InputError("evaluate_cell: empty test set");
    std::vector<PerSample> ps(n);
    if (advs_out)
        advs_out->resize(n);
    parallel_for(n, [&](std::size_t i) {
        PerSample s;
        s.true_label = test.labels[i];
        s.clean_pred = model.predict(test.x[i]);
        AttackConfig per = cfg;
        per.seed = derive_seed(cfg.seed, "sample", i);
        AdversarialExample adv = run_attack(model, test.x[i], per);
        s.adv_pred = model.predict(adv.x_adv);
        s.realized_psr_db = adv.achieved_psr_db;
        ps[i] = s;
        if (advs_out)
            (*advs_out)[i] = std::move(adv);
    });
    AttackReport r = assemble_report(model, test, cfg, ps);
    r.snr_db = snr_db;
    r.experiment_id = std::move(experiment_id);
    return r;
}

double sr_nontargeted(const Model& model, const SampleSet& test, AttackConfig cfg) {
    cfg.mode = AttackMode::nontargeted;
    return evaluate_cell(model, test, cfg).sr;
}

double sr_targeted(const Model& model, const SampleSet& test, AttackConfig cfg, int target) {
    if (target < 0 || target >= model.n_classes())
        throw InputError("sr_targeted: target out of range");
    cfg.mode = AttackMode::targeted;
    cfg.target_label = target;
    return evaluate_cell(model, test, cfg).sr;
}

std::vector<int> confusion(const Model& model, const SampleSet& test, const AttackConfig* cfg) {
    const std::size_t n = test.x.size();
    if (n == 0)
        throw InputError("confusion: empty test set");
    const int k = model.n_classes();
    std::vector<int> preds(n);
    if (cfg) {
        parallel_for(n, [&](std::size_t i) {
            AttackConfig per = *cfg;
            per.seed = derive_seed(cfg->seed, "sample", i);
            preds[i] = model.predict(run_attack(model, test.x[i], per).x_adv);
        });
    } else {
        parallel_for(n, [&](std::size_t i) { preds[i] = model.predict(test.x[i]); });
    }
    std::vector<int> m(static_cast<std::size_t>(k) * k, 0);
    for (std::size_t i = 0; i < n; ++i)
        m[static_cast<std::size_t>(test.labels[i]) * k + preds[i]] += 1;
    return m;
}

std::vector<double> target_matrix(const Model& model, const SampleSet& test, AttackConfig base) {
    const int k = model.n_classes();
    std::vector<double> out(static_cast<std::size_t>(k) * k, 0.0);
    base.mode = AttackMode::targeted;
    for (int t = 0; t < k; ++t) {
        AttackConfig cfg = base;
        cfg.target_label = t;
        cfg.seed = derive_seed(base.seed, "target-row", static_cast<uint64_t>(t));
        AttackReport r = evaluate_cell(model, test, cfg);
        // per-source fraction identified as t
        std::vector<int> total(static_cast<std::size_t>(k), 0);
        std::vector<int> hit(static_cast<std::size_t>(k), 0);
        for (const auto& s : r.per_sample) {
            total[static_cast<std::size_t>(s.true_label)] += 1;
            if (s.adv_pred == t)
                hit[static_cast<std::size_t>(s.true_label)] += 1;
        }
        for (int src = 0; src < k; ++src)
            out[static_cast<std::size_t>(t) * k + src] =
                total[static_cast<std::size_t>(src)] == 0
                    ? 0.0
                    : static_cast<double>(hit[static_cast<std::size_t>(src)]) /
                          static_cast<double>(total[static_cast<std::size_t>(src)]);
    }
    return out;
}

namespace {

std::string cell_id(const std::string& model_kind, AttackMethod method, double psr_db,
                    double snr_db) {
    char buf[128];
    if (std::isinf(snr_db))
        std::snprintf(buf, sizeof buf, "%s-%s-psr%g-clean", model_kind.c_str(),
                      to_string(method).c_str(), psr_db);
    else
        std::snprintf(buf, sizeof buf, "%s-%s-psr%g-snr%g", model_kind.c_str(),
                      to_string(method).c_str(), psr_db, snr_db);
    return buf;
}

} // namespace

std::vector<AttackReport> psr_sweep(std::span<const ModelRef> models,
                                    std::span<const AttackMethod> methods,
                                    std::span<const double> psr_grid, const SampleSet& test,
                                    uint64_t seed) {
    if (models.empty() || methods.empty() || psr_grid.empty())
        throw InputError("psr_sweep: empty grid");
    std::vector<AttackReport> out;
    uint64_t cell = 0;
    for (const auto& mr : models) {
        for (AttackMethod method : methods) {
            for (double psr : psr_grid) {
                AttackConfig cfg;
                cfg.method = method;
                cfg.mode = AttackMode::nontargeted;
                cfg.psr_db = psr;
                cfg.seed = derive_seed(seed, "psr-sweep", cell++);
                out.push_back(evaluate_cell(*mr.model, test, cfg, kCleanSnrDb,
                                            cell_id(mr.kind, method, psr, kCleanSnrDb)));
            }
        }
    }
    return out;
}

SampleSet preprocess_set(const Dataset& data, std::span<const int> indices,
                         const PipelineConfig& pc) {
    SampleSet out;
    out.x.resize(indices.size());
    out.labels.resize(indices.size());
    parallel_for(indices.size(), [&](std::size_t i) {
        const int idx = indices[i];
        out.x[i] = preprocess(data.frames[static_cast<std::size_t>(idx)], data.cfg, pc).to_tensor();
        out.labels[i] = data.labels[static_cast<std::size_t>(idx)];
    });
    return out;
}

std::vector<AttackReport> snr_sweep(std::span<const ModelRef> models,
                                    std::span<const AttackMethod> methods,
                                    std::span<const double> snr_grid, double psr_db,
                                    const Dataset& data, const PipelineConfig& pc, uint64_t seed) {
    if (models.empty() || methods.empty() || snr_grid.empty())
        throw InputError("snr_sweep: empty grid");
    std::vector<AttackReport> out;
    uint64_t cell = 0;
    for (std::size_t gi = 0; gi < snr_grid.size(); ++gi) {
        const double snr = snr_grid[gi];
        // Noisy copies of the raw test frames, then the full preprocessing
        // chain again.
        SampleSet noisy;
        noisy.x.resize(data.split.test.size());
        noisy.labels.resize(data.split.test.size());
        parallel_for(data.split.test.size(), [&](std::size_t i) {
            const int idx = data.split.test[i];
            Rng rng(derive_seed(seed, "snr-noise", gi * 1000003ULL + i));
            IQFrame f = add_awgn(data.frames[static_cast<std::size_t>(idx)], snr, rng);
            noisy.x[i] = preprocess(f, data.cfg, pc).to_tensor();
            noisy.labels[i] = data.labels[static_cast<std::size_t>(idx)];
        });
        for (const auto& mr : models) {
            for (AttackMethod method : methods) {
                AttackConfig cfg;
                cfg.method = method;
                cfg.mode = AttackMode::nontargeted;
                cfg.psr_db = psr_db;
                cfg.seed = derive_seed(seed, "snr-sweep", cell++);
                out.push_back(
                    evaluate_cell(*mr.model, noisy, cfg, snr, cell_id(mr.kind, method, psr_db, snr)));
            }
        }
    }
    return out;
}

} // namespace rfadv
