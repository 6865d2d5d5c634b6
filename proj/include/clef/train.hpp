#ifndef CLEF_TRAIN_HPP
#define CLEF_TRAIN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "clef/causal.hpp"
#include "clef/models.hpp"
#include "clef/optim.hpp"
#include "clef/synthbench.hpp"
#include "clef/tensor.hpp"

namespace clef::train {

enum class TaskKind { multi_class, multi_label };

std::string task_name(TaskKind t);
TaskKind task_from_name(const std::string& name);

// Which distribution acts as the fixed target in the KL regularizer.
enum class KlDirection { factual_target, counterfactual_target };

std::string kl_direction_name(KlDirection d);
KlDirection kl_direction_from_name(const std::string& name);

struct TrainConfig {
    std::size_t epochs = 30;
    std::size_t batch_size = 64;
    diff::OptimizerConfig optimizer;  // kind, learning rate, hyperparameters
    std::uint64_t seed = 1;
    models::Mode mode = models::Mode::clef;
    causal::NoTreatmentKind no_treatment = causal::NoTreatmentKind::learnable_uniform;
    double nt_init_low = -0.01;
    double nt_init_high = 0.01;
    TaskKind task = TaskKind::multi_class;
    double kl_weight = 1.0;
    KlDirection kl_direction = KlDirection::factual_target;
    bool mask_context = true;

    void validate() const;
};

nlohmann::json train_config_to_json(const TrainConfig& config);
TrainConfig train_config_from_json(const nlohmann::json& j);

struct LossBreakdown {
    double task_factual = 0.0;
    double task_counterfactual = 0.0;
    double kl = 0.0;
    double total = 0.0;
};

// Batch-mean task losses on the factual and counterfactual outcomes.
// Multi-class treats fused log-scores as softmax logits; multi-label consumes
// them directly as per-class log-probabilities.
std::pair<double, double> task_loss(const std::vector<causal::Scores>& factual,
                                    const std::vector<causal::Scores>& counterfactual,
                                    const std::vector<int>& labels,
                                    const std::vector<std::vector<int>>& label_sets,
                                    TaskKind task);

// D_KL(p || q) for two probability vectors.
double kl_divergence(const std::vector<double>& p, const std::vector<double>& q);

// Eq.-style regularizer value: softmax distributions of the two score
// vectors, factual as the target.
double kl_loss(const causal::Scores& counterfactual, const causal::Scores& factual);

// One prepared mini-batch.
struct Batch {
    diff::Tensor subject;   // [B x d_s]
    diff::Tensor context;   // [B x d_c]
    diff::Tensor ctx_view;  // [B x (d_s + d_c)], masked unless the model says otherwise
    std::vector<int> labels;
    std::vector<std::vector<int>> label_sets;
};

Batch make_batch(const models::ClefModel& model, const std::vector<synth::SceneSample>& samples,
                 const std::vector<std::size_t>& indices);

struct LossResult {
    diff::Tensor total;  // scalar, differentiable
    LossBreakdown breakdown;
};

// Mode-dependent batch loss: clef = both task terms + weighted KL; no_kl
// drops the KL; te_only keeps the factual term only; vanilla is the plain
// classifier loss on y_e. The KL term's gradient reaches only the
// no-treatment logits.
LossResult final_loss(diff::Tape* tape, const models::ClefModel& model, const Batch& batch,
                      const TrainConfig& config);

struct EpochRecord {
    std::size_t epoch = 0;
    LossBreakdown loss;
    double val_metric = 0.0;
};

struct TrainLog {
    std::vector<EpochRecord> epochs;
    std::size_t best_epoch = 0;
    double best_val = 0.0;
};

nlohmann::json log_to_json(const TrainLog& log);

// Validation metric for a sample list under the mode's default scorer:
// accuracy for multi-class, mAP for multi-label.
double validation_metric(const models::ClefModel& model,
                         const std::vector<synth::SceneSample>& samples, TaskKind task);

// Deterministic training loop; leaves the model at the best-validation
// parameters and returns the full log.
TrainLog fit(models::ClefModel& model, const std::vector<synth::SceneSample>& train_samples,
             const std::vector<synth::SceneSample>& val_samples, const TrainConfig& config);

}  // namespace clef::train

#endif  // CLEF_TRAIN_HPP
