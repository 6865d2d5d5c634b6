#include "clef/causal.hpp"

#include <cmath>

#include "clef/errors.hpp"
#include "clef/ops.hpp"

namespace clef::causal {
namespace {

void require_same_length(const Scores& a, const Scores& b, const char* op) {
    if (a.size() != b.size()) throw ShapeError(std::string(op) + ": score length mismatch");
}

void require_valid(const ScoreSet& s) {
    require_same_length(s.y_c, s.y_e, "score set");
    require_same_length(s.y_c, s.y_e_star, "score set");
    if (s.y_c.empty()) throw ShapeError("score set: empty class scores");
    for (const Scores* v : {&s.y_c, &s.y_e, &s.y_e_star}) {
        for (double x : *v) {
            if (!std::isfinite(x)) throw ValidationError("score set contains non-finite entries");
        }
    }
}

Scores sub(const Scores& a, const Scores& b) {
    Scores out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

}  // namespace

std::string no_treatment_name(NoTreatmentKind k) {
    switch (k) {
        case NoTreatmentKind::learnable_uniform: return "learnable_uniform";
        case NoTreatmentKind::average_prior: return "average_prior";
        case NoTreatmentKind::random_fixed: return "random_fixed";
    }
    return "learnable_uniform";
}

NoTreatmentKind no_treatment_from_name(const std::string& name) {
    if (name == "learnable_uniform") return NoTreatmentKind::learnable_uniform;
    if (name == "average_prior") return NoTreatmentKind::average_prior;
    if (name == "random_fixed") return NoTreatmentKind::random_fixed;
    throw ValidationError("unknown no-treatment kind: " + name);
}

Scores NoTreatmentEstimator::scores() const {
    auto v = logits.values();
    return Scores(v.begin(), v.end());
}

Scores fuse(const Scores& y_a, const Scores& y_b) {
    require_same_length(y_a, y_b, "fuse");
    Scores out(y_a.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = diff::ops::log_sigmoid_value(y_a[i] + y_b[i]);
    }
    return out;
}

Scores factual_score(const ScoreSet& s) {
    require_valid(s);
    return fuse(s.y_c, s.y_e);
}

Scores counterfactual_score(const ScoreSet& s) {
    require_valid(s);
    return fuse(s.y_c, s.y_e_star);
}

ReferenceOutcome make_reference(const Scores& no_treatment_logits) {
    if (no_treatment_logits.empty()) throw ShapeError("make_reference: empty logits");
    double mean = 0.0;
    for (double v : no_treatment_logits) mean += v;
    mean /= static_cast<double>(no_treatment_logits.size());
    double fused = diff::ops::log_sigmoid_value(mean + mean);
    return ReferenceOutcome{Scores(no_treatment_logits.size(), fused)};
}

CausalEffects compute_effects(const ScoreSet& s, const ReferenceOutcome& ref) {
    CausalEffects eff;
    eff.factual = factual_score(s);
    eff.counterfactual = counterfactual_score(s);
    require_same_length(eff.factual, ref.y_ref, "compute_effects");
    eff.te = sub(eff.factual, ref.y_ref);
    eff.nde = sub(eff.counterfactual, ref.y_ref);
    eff.tie = sub(eff.factual, eff.counterfactual);
    return eff;
}

Scores predict_tie(const ScoreSet& s) {
    return sub(factual_score(s), counterfactual_score(s));
}

std::size_t argmax(const Scores& s) {
    if (s.empty()) throw ShapeError("argmax of empty scores");
    std::size_t best = 0;
    for (std::size_t i = 1; i < s.size(); ++i) {
        if (s[i] > s[best]) best = i;
    }
    return best;
}

NoTreatmentEstimator estimate_no_treatment(const NoTreatmentInit& init, std::size_t k) {
    if (k < 2) throw ValidationError("estimate_no_treatment: class count must be >= 2");
    NoTreatmentEstimator est;
    est.kind = init.kind;
    est.init_low = init.init_low;
    est.init_high = init.init_high;
    est.seed = init.seed;
    switch (init.kind) {
        case NoTreatmentKind::learnable_uniform: {
            if (init.init_low > init.init_high) {
                throw ValidationError("estimate_no_treatment: init range is inverted");
            }
            Rng rng(init.seed);
            std::vector<double> v(k);
            for (double& x : v) x = rng.uniform(init.init_low, init.init_high);
            est.logits = diff::Tensor::from_values({k}, std::move(v), /*requires_grad=*/true);
            break;
        }
        case NoTreatmentKind::average_prior: {
            if (init.training_labels.empty()) {
                throw ValidationError("estimate_no_treatment: average prior needs a training set");
            }
            std::vector<double> counts(k, 0.0);
            for (int label : init.training_labels) {
                if (label < 0 || static_cast<std::size_t>(label) >= k) {
                    throw ValidationError("estimate_no_treatment: label out of range");
                }
                counts[static_cast<std::size_t>(label)] += 1.0;
            }
            std::vector<double> v(k);
            for (std::size_t i = 0; i < k; ++i) {
                if (counts[i] == 0.0) {
                    throw ValidationError(
                        "estimate_no_treatment: class absent from training set; "
                        "average prior undefined");
                }
                v[i] = std::log(counts[i] / static_cast<double>(init.training_labels.size()));
            }
            est.logits = diff::Tensor::from_values({k}, std::move(v), /*requires_grad=*/false);
            break;
        }
        case NoTreatmentKind::random_fixed: {
            Rng rng(init.seed);
            std::vector<double> v(k);
            for (double& x : v) x = rng.normal();
            est.logits = diff::Tensor::from_values({k}, std::move(v), /*requires_grad=*/false);
            break;
        }
    }
    return est;
}

}  // namespace clef::causal
