#include "rfadv/attacks.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rfadv/errors.hpp"
#include "rfadv/rng.hpp"

namespace rfadv {

AttackMethod attack_method_from_string(const std::string& s) {
    if (s == "fgsm")
        return AttackMethod::fgsm;
    if (s == "pgd")
        return AttackMethod::pgd;
    if (s == "awgn")
        return AttackMethod::awgn;
    throw ConfigError("unknown attack method: " + s);
}

std::string to_string(AttackMethod m) {
    switch (m) {
    case AttackMethod::fgsm:
        return "fgsm";
    case AttackMethod::pgd:
        return "pgd";
    case AttackMethod::awgn:
        return "awgn";
    }
    throw ConfigError("unknown attack method");
}

std::string to_string(AttackMode m) {
    return m == AttackMode::targeted ? "targeted" : "nontargeted";
}

double epsilon_for_psr(const Tensor& x, double psr_db) {
    double px = mean_square(x);
    if (!(px > 0.0))
        throw NumericError("epsilon_for_psr: zero-power input");
    return std::sqrt(px * std::pow(10.0, psr_db / 10.0));
}

double measure_psr(const Tensor& x, const Tensor& x_adv) {
    if (!x.same_shape(x_adv))
        throw InputError("measure_psr: shape mismatch");
    double px = mean_square(x);
    if (!(px > 0.0))
        throw NumericError("measure_psr: zero-power reference");
    double pv = 0.0;
    for (std::int64_t i = 0; i < x.size(); ++i) {
        double d = x_adv[i] - x[i];
        pv += d * d;
    }
    pv /= static_cast<double>(x.size());
    if (pv == 0.0)
        return -std::numeric_limits<double>::infinity(); // no perturbation
    return 10.0 * std::log10(pv / px);
}

namespace {

double sign(double v) {
    if (v > 0.0)
        return 1.0;
    if (v < 0.0)
        return -1.0;
    return 0.0; // zero gradient leaves the entry untouched
}

int attack_label(const Model& model, const Tensor& x, const AttackConfig& cfg) {
    if (cfg.mode == AttackMode::targeted) {
        if (cfg.target_label < 0 || cfg.target_label >= model.n_classes())
            throw ConfigError("attack: targeted mode needs a valid target label");
        return cfg.target_label;
    }
    // Non-targeted attacks ascend the loss at the model's own prediction,
    // not at the ground truth.
    return model.predict(x);
}

AdversarialExample finish(const Tensor& x, Tensor x_adv) {
    AdversarialExample out;
    out.perturbation = Tensor(x.shape);
    for (std::int64_t i = 0; i < x.size(); ++i)
        out.perturbation[i] = x_adv[i] - x[i];
    // Re-derive x_adv from the stored perturbation so that
    // x_adv == x_clean + perturbation holds bit-for-bit.
    for (std::int64_t i = 0; i < x.size(); ++i)
        x_adv[i] = x[i] + out.perturbation[i];
    out.x_clean = x;
    out.x_adv = std::move(x_adv);
    out.achieved_psr_db = measure_psr(out.x_clean, out.x_adv);
    return out;
}

} // namespace

AdversarialExample fgsm(const Model& model, const Tensor& x, const AttackConfig& cfg) {
    const double eps = epsilon_for_psr(x, cfg.psr_db);
    const int label = attack_label(model, x, cfg);
    const double dir = cfg.mode == AttackMode::targeted ? -1.0 : 1.0;

    Tensor grad = model.backward(x, label).input;
    Tensor adv = x;
    for (std::int64_t i = 0; i < adv.size(); ++i)
        adv[i] += dir * eps * sign(grad[i]);
    if (cfg.clamp01)
        for (double& v : adv.data)
            v = std::clamp(v, 0.0, 1.0);
    return finish(x, std::move(adv));
}

AdversarialExample pgd(const Model& model, const Tensor& x, const AttackConfig& cfg) {
    if (cfg.pgd_iters < 1)
        throw ConfigError("pgd: need at least one iteration");
    if (!(cfg.pgd_step_fraction > 0.0) || cfg.pgd_step_fraction > 1.0)
        throw ConfigError("pgd: step fraction must lie in (0, 1]");
    const double eps = epsilon_for_psr(x, cfg.psr_db);
    const double alpha = eps * cfg.pgd_step_fraction;
    const int label = attack_label(model, x, cfg);
    const double dir = cfg.mode == AttackMode::targeted ? -1.0 : 1.0;

    Tensor cur = x;
    if (cfg.pgd_random_start) {
        Rng rng(derive_seed(cfg.seed, "pgd-init"));
        for (std::int64_t i = 0; i < cur.size(); ++i)
            cur[i] = x[i] + rng.uniform(-eps, eps);
    }
    for (int it = 0; it < cfg.pgd_iters; ++it) {
        Tensor grad = model.backward(cur, label).input;
        for (std::int64_t i = 0; i < cur.size(); ++i) {
            double v = cur[i] + dir * alpha * sign(grad[i]);
            // project onto the L-inf epsilon ball around the clean input
            v = std::clamp(v, x[i] - eps, x[i] + eps);
            if (cfg.clamp01)
                v = std::clamp(v, 0.0, 1.0);
            cur[i] = v;
        }
    }
    return finish(x, std::move(cur));
}

AdversarialExample awgn_perturbation(const Tensor& x, double psr_db, uint64_t seed) {
    double px = mean_square(x);
    if (!(px > 0.0))
        throw NumericError("awgn_perturbation: zero-power input");
    Rng rng(derive_seed(seed, "awgn-pert"));
    Tensor v(x.shape);
    for (std::int64_t i = 0; i < v.size(); ++i)
        v[i] = rng.gaussian();
    double pv = mean_square(v);
    double target = px * std::pow(10.0, psr_db / 10.0);
    double scale = std::sqrt(target / pv);
    Tensor adv = x;
    for (std::int64_t i = 0; i < adv.size(); ++i)
        adv[i] += scale * v[i];
    return finish(x, std::move(adv));
}

AdversarialExample run_attack(const Model& model, const Tensor& x, const AttackConfig& cfg) {
    switch (cfg.method) {
    case AttackMethod::fgsm:
        return fgsm(model, x, cfg);
    case AttackMethod::pgd:
        return pgd(model, x, cfg);
    case AttackMethod::awgn:
        return awgn_perturbation(x, cfg.psr_db, cfg.seed);
    }
    throw ConfigError("unknown attack method");
}

} // namespace rfadv
