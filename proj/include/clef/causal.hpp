#ifndef CLEF_CAUSAL_HPP
#define CLEF_CAUSAL_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "clef/rng.hpp"
#include "clef/tensor.hpp"

namespace clef::causal {

using Scores = std::vector<double>;

// Per-sample class-score triple: context branch, ensemble model, and the
// shared no-treatment scores standing in for the blocked ensemble path.
struct ScoreSet {
    Scores y_c;
    Scores y_e;
    Scores y_e_star;
};

// Fused factual/counterfactual outcomes plus the effect decomposition.
struct CausalEffects {
    Scores factual;         // phi(y_c, y_e)
    Scores counterfactual;  // phi(y_c, y_e_star)
    Scores te;              // factual - reference
    Scores nde;             // counterfactual - reference
    Scores tie;             // factual - counterfactual
};

enum class NoTreatmentKind { learnable_uniform, average_prior, random_fixed };

std::string no_treatment_name(NoTreatmentKind k);
NoTreatmentKind no_treatment_from_name(const std::string& name);

// Shared per-class score vector for the no-treatment condition. Trainable
// only for the learnable-uniform kind; the two ablation kinds are frozen.
struct NoTreatmentEstimator {
    NoTreatmentKind kind = NoTreatmentKind::learnable_uniform;
    diff::Tensor logits;  // [K], requires_grad iff learnable_uniform
    double init_low = -0.01;
    double init_high = 0.01;
    std::uint64_t seed = 0;  // random_fixed provenance

    Scores scores() const;
    bool trainable() const { return kind == NoTreatmentKind::learnable_uniform; }
};

// The class-uniform outcome both effects are measured against. It cancels
// from TIE; materialized only so TE and NDE are inspectable.
struct ReferenceOutcome {
    Scores y_ref;
};

// Elementwise log sigma(y_a + y_b).
Scores fuse(const Scores& y_a, const Scores& y_b);
Scores factual_score(const ScoreSet& s);
Scores counterfactual_score(const ScoreSet& s);

// fuse(u, u) with u = mean of the no-treatment logits.
ReferenceOutcome make_reference(const Scores& no_treatment_logits);

CausalEffects compute_effects(const ScoreSet& s, const ReferenceOutcome& ref);

// TIE vector, the debiased prediction signal. Multi-class decisions take the
// argmax; multi-label evaluation consumes the values as ranking scores.
Scores predict_tie(const ScoreSet& s);
std::size_t argmax(const Scores& s);

struct NoTreatmentInit {
    NoTreatmentKind kind = NoTreatmentKind::learnable_uniform;
    double init_low = -0.01;
    double init_high = 0.01;
    std::uint64_t seed = 0;                 // learnable init / random_fixed draws
    std::vector<int> training_labels;       // average_prior only
};

// K >= 2. learnable_uniform draws i.i.d. from U(init_low, init_high);
// average_prior fixes log empirical class frequencies of the training split;
// random_fixed draws a frozen seeded standard normal vector.
NoTreatmentEstimator estimate_no_treatment(const NoTreatmentInit& init, std::size_t k);

}  // namespace clef::causal

#endif  // CLEF_CAUSAL_HPP
