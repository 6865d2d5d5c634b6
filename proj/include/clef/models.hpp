#ifndef CLEF_MODELS_HPP
#define CLEF_MODELS_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clef/causal.hpp"
#include "clef/nn.hpp"
#include "clef/synthbench.hpp"
#include "clef/tensor.hpp"

namespace clef::models {

enum class Mode { clef, vanilla, te_only, no_kl };

std::string mode_name(Mode m);
Mode mode_from_name(const std::string& name);

// Non-invasive context branch: consumes the masked feature view (subject
// slots zeroed) and nothing else.
struct ContextBranch {
    diff::Mlp encoder;      // relu stack over the masked view
    diff::DenseLayer head;  // -> K scores

    diff::Tensor forward(diff::Tape* tape, const diff::Tensor& masked_input) const;
    std::vector<diff::Tensor> parameters() const;
};

// Vanilla two-stream model: subject and context encoders, concatenation
// fusion into the ensemble representation e, then a linear head.
struct EnsembleModel {
    diff::Mlp subject_encoder;
    diff::Mlp context_encoder;
    diff::Mlp fusion;
    diff::DenseLayer head;

    // Returns (e, y_e); e stays inspectable.
    std::pair<diff::Tensor, diff::Tensor> forward(diff::Tape* tape, const diff::Tensor& subject,
                                                  const diff::Tensor& context) const;
    std::vector<diff::Tensor> parameters() const;
};

struct ModelConfig {
    std::size_t d_s = 16;
    std::size_t d_c = 16;
    std::size_t k = 6;
    std::size_t width = 32;
    std::size_t depth = 2;
    Mode mode = Mode::clef;
    bool mask_context = true;  // false reproduces the no-masking ablation
    causal::NoTreatmentKind no_treatment = causal::NoTreatmentKind::learnable_uniform;
    double nt_init_low = -0.01;
    double nt_init_high = 0.01;
};

struct ClefModel {
    ModelConfig config;
    ContextBranch context_branch;
    EnsembleModel ensemble;
    causal::NoTreatmentEstimator no_treatment;
    std::string config_hash;  // stamped by the experiment layer
    std::string tag;          // grid-cell name for reporting (defaults to mode name)
    std::uint64_t seed = 0;   // training seed the parameters came from

    // Deterministic init from seed. `train_labels` feeds the average-prior
    // no-treatment kind and may be empty otherwise.
    static ClefModel init(const ModelConfig& config, std::uint64_t seed,
                          const std::vector<int>& train_labels = {});

    std::vector<diff::Tensor> parameters() const;  // includes no-treatment if trainable
    std::vector<double> snapshot() const;          // flat copy of all parameter values
    void restore(const std::vector<double>& snap);
};

// Context-branch scores from the masked view [B x (d_s + d_c)]. When the
// model expects masked input, nonzero subject slots are a contract error.
diff::Tensor forward_context(diff::Tape* tape, const ClefModel& m, const diff::Tensor& context_view);

// (e, y_e) from subject [B x d_s] and context [B x d_c] inputs.
std::pair<diff::Tensor, diff::Tensor> forward_ensemble(diff::Tape* tape, const ClefModel& m,
                                                       const diff::Tensor& subject,
                                                       const diff::Tensor& context);

// Single-sample ScoreSet (no gradient recording).
causal::ScoreSet forward_all(const ClefModel& m, const synth::SceneSample& sample);

enum class Scorer { tie, factual, te, context_only, ensemble_only };

std::string scorer_name(Scorer s);
Scorer scorer_from_name(const std::string& name);
Scorer default_scorer(Mode mode);

causal::Scores apply_scorer(const causal::ScoreSet& set, Scorer scorer);

// Batched scoring of a whole sample list (inference path).
std::vector<causal::Scores> score_samples(const ClefModel& m,
                                          const std::vector<synth::SceneSample>& samples,
                                          Scorer scorer);

// Checkpoint round-trips bit-exactly.
void save_checkpoint(const ClefModel& m, const std::string& path);
ClefModel load_checkpoint(const std::string& path);

}  // namespace clef::models

#endif  // CLEF_MODELS_HPP
