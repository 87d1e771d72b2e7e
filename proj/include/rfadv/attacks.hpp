#pragma once

#include <cstdint>
#include <string>

#include "rfadv/nn.hpp"
#include "rfadv/tensor.hpp"

namespace rfadv {

enum class AttackMethod { fgsm, pgd, awgn };
enum class AttackMode { nontargeted, targeted };

AttackMethod attack_method_from_string(const std::string& s);
std::string to_string(AttackMethod m);
std::string to_string(AttackMode m);

struct AttackConfig {
    AttackMethod method = AttackMethod::pgd;
    AttackMode mode = AttackMode::nontargeted;
    int target_label = -1;         // required in targeted mode
    double psr_db = -40.0;         // perturbation budget, sets epsilon
    int pgd_iters = 15;
    double pgd_step_fraction = 0.15; // alpha = epsilon * fraction
    bool pgd_random_start = true;
    uint64_t seed = 0;             // PGD random start / AWGN draw
    bool clamp01 = false;          // optional clamp of x' to the [0,1] input range
};

struct AdversarialExample {
    Tensor x_adv;
    Tensor x_clean;
    Tensor perturbation; // x_adv - x_clean
    double achieved_psr_db = 0.0;
};

// epsilon such that a fully saturated sign perturbation (every entry at
// +-epsilon) has power P_x * 10^(psr/10): epsilon = sqrt(P_x 10^(psr/10)).
double epsilon_for_psr(const Tensor& x, double psr_db);

// 10 log10(P_{x_adv - x} / P_x); -inf when the tensors are identical.
double measure_psr(const Tensor& x, const Tensor& x_adv);

// Single signed-gradient step. Non-targeted ascends the loss at the model's
// own clean prediction; targeted descends the loss toward cfg.target_label.
AdversarialExample fgsm(const Model& model, const Tensor& x, const AttackConfig& cfg);

// Iterated signed-gradient steps with projection onto the L-inf epsilon ball
// around the clean input, optional uniform random start inside the ball.
AdversarialExample pgd(const Model& model, const Tensor& x, const AttackConfig& cfg);

// Gaussian perturbation rescaled to the exact requested power; the
// non-adversarial baseline.
AdversarialExample awgn_perturbation(const Tensor& x, double psr_db, uint64_t seed);

// Dispatch on cfg.method.
AdversarialExample run_attack(const Model& model, const Tensor& x, const AttackConfig& cfg);

} // namespace rfadv
