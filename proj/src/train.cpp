#include "clef/train.hpp"

#include <cmath>
#include <numeric>

#include "clef/errors.hpp"
#include "clef/kernels.hpp"
#include "clef/metrics.hpp"
#include "clef/ops.hpp"
#include "clef/rng.hpp"

namespace clef::train {
namespace {

using diff::Tensor;
namespace ops = diff::ops;

constexpr std::uint64_t kStreamShuffle = 21;

std::vector<double> softmax_probs(const std::vector<double>& scores) {
    double m = scores[0];
    for (double v : scores) m = std::max(m, v);
    std::vector<double> p(scores.size());
    double z = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::exp(scores[i] - m);
        z += p[i];
    }
    for (double& v : p) v /= z;
    return p;
}

double cross_entropy_value(const std::vector<double>& logits, int label) {
    if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
        throw ValidationError("task_loss: label out of range");
    }
    double m = logits[0];
    for (double v : logits) m = std::max(m, v);
    double z = 0.0;
    for (double v : logits) z += std::exp(v - m);
    double lse = m + std::log(z);
    return lse - logits[static_cast<std::size_t>(label)];
}

double multilabel_nll_value(const std::vector<double>& logp, const std::vector<int>& positives) {
    std::vector<char> mask(logp.size(), 0);
    for (int l : positives) {
        if (l < 0 || static_cast<std::size_t>(l) >= logp.size()) {
            throw ValidationError("task_loss: label out of range");
        }
        mask[static_cast<std::size_t>(l)] = 1;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < logp.size(); ++i) {
        acc += mask[i] ? -logp[i] : -ops::log1mexp_value(logp[i]);
    }
    return acc;
}

// Constant tensors of the softmax distribution of each row (no recording).
std::pair<Tensor, Tensor> row_softmax_constants(const Tensor& scores) {
    const std::size_t rows = scores.rows();
    const std::size_t cols = scores.cols();
    std::vector<double> p(rows * cols);
    std::vector<double> logp(rows * cols);
    auto sv = scores.values();
    for (std::size_t r = 0; r < rows; ++r) {
        std::vector<double> row(sv.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                sv.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols));
        auto probs = softmax_probs(row);
        for (std::size_t j = 0; j < cols; ++j) {
            p[r * cols + j] = probs[j];
            logp[r * cols + j] = std::log(probs[j]);
        }
    }
    return {Tensor::from_values({rows, cols}, std::move(p)),
            Tensor::from_values({rows, cols}, std::move(logp))};
}

// Weighted KL term with gradients gated to the no-treatment logits: the
// counterfactual fusion is rebuilt from the detached context scores.
Tensor kl_term(diff::Tape* tape, const Tensor& phi_factual, const Tensor& y_c,
               const Tensor& star_tile, KlDirection direction) {
    const auto b = static_cast<double>(phi_factual.rows());
    Tensor phi_cf_gated = ops::log_sigmoid(tape, ops::add(tape, y_c.detach(), star_tile));
    Tensor q_logp = ops::softmax_logprobs(tape, phi_cf_gated);
    auto [p_const, p_logp_const] = row_softmax_constants(phi_factual);
    if (direction == KlDirection::factual_target) {
        // (1/B) sum_rows sum_k p (log p - log q), p constant
        double const_part = 0.0;
        {
            auto pv = p_const.values();
            auto lv = p_logp_const.values();
            for (std::size_t i = 0; i < pv.size(); ++i) const_part += pv[i] * lv[i];
        }
        Tensor cross = ops::scale(tape, ops::sum(tape, ops::mul(tape, p_const, q_logp)), -1.0 / b);
        return ops::add(tape, Tensor::scalar(const_part / b), cross);
    }
    // Reversed roles: counterfactual distribution varies, factual is target.
    // (1/B) sum_rows sum_k q (log q - log p)
    Tensor q = ops::exp_elem(tape, q_logp);
    Tensor diff_logs = ops::sub(tape, q_logp, p_logp_const);
    return ops::scale(tape, ops::sum(tape, ops::mul(tape, q, diff_logs)), 1.0 / b);
}

}  // namespace

std::string task_name(TaskKind t) {
    return t == TaskKind::multi_class ? "multi_class" : "multi_label";
}

TaskKind task_from_name(const std::string& name) {
    if (name == "multi_class") return TaskKind::multi_class;
    if (name == "multi_label") return TaskKind::multi_label;
    throw ValidationError("unknown task kind: " + name);
}

std::string kl_direction_name(KlDirection d) {
    return d == KlDirection::factual_target ? "factual_target" : "counterfactual_target";
}

KlDirection kl_direction_from_name(const std::string& name) {
    if (name == "factual_target") return KlDirection::factual_target;
    if (name == "counterfactual_target") return KlDirection::counterfactual_target;
    throw ValidationError("unknown kl direction: " + name);
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ValidationError("train config: batch_size must be positive");
    if (!(optimizer.learning_rate >= 0.0)) {
        throw ValidationError("train config: learning rate must be non-negative");
    }
    if (!(kl_weight >= 0.0)) throw ValidationError("train config: kl_weight must be non-negative");
    if (nt_init_low > nt_init_high) throw ValidationError("train config: nt init range inverted");
}

nlohmann::json train_config_to_json(const TrainConfig& config) {
    return nlohmann::json{
        {"epochs", config.epochs},
        {"batch_size", config.batch_size},
        {"optimizer", diff::optimizer_name(config.optimizer.kind)},
        {"learning_rate", config.optimizer.learning_rate},
        {"momentum", config.optimizer.momentum},
        {"beta1", config.optimizer.beta1},
        {"beta2", config.optimizer.beta2},
        {"eps", config.optimizer.eps},
        {"seed", config.seed},
        {"mode", models::mode_name(config.mode)},
        {"no_treatment", causal::no_treatment_name(config.no_treatment)},
        {"nt_init_low", config.nt_init_low},
        {"nt_init_high", config.nt_init_high},
        {"task", task_name(config.task)},
        {"kl_weight", config.kl_weight},
        {"kl_direction", kl_direction_name(config.kl_direction)},
        {"mask_context", config.mask_context},
    };
}

TrainConfig train_config_from_json(const nlohmann::json& j) {
    TrainConfig config;
    try {
        config.epochs = j.at("epochs").get<std::size_t>();
        config.batch_size = j.at("batch_size").get<std::size_t>();
        config.optimizer.kind = diff::optimizer_from_name(j.at("optimizer").get<std::string>());
        config.optimizer.learning_rate = j.at("learning_rate").get<double>();
        config.optimizer.momentum = j.value("momentum", 0.9);
        config.optimizer.beta1 = j.value("beta1", 0.9);
        config.optimizer.beta2 = j.value("beta2", 0.999);
        config.optimizer.eps = j.value("eps", 1e-8);
        config.seed = j.at("seed").get<std::uint64_t>();
        config.mode = models::mode_from_name(j.at("mode").get<std::string>());
        config.no_treatment = causal::no_treatment_from_name(j.at("no_treatment").get<std::string>());
        config.nt_init_low = j.value("nt_init_low", -0.01);
        config.nt_init_high = j.value("nt_init_high", 0.01);
        config.task = task_from_name(j.at("task").get<std::string>());
        config.kl_weight = j.value("kl_weight", 1.0);
        config.kl_direction = kl_direction_from_name(j.value("kl_direction", "factual_target"));
        config.mask_context = j.value("mask_context", true);
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("train config json: ") + e.what());
    }
    config.validate();
    return config;
}

std::pair<double, double> task_loss(const std::vector<causal::Scores>& factual,
                                    const std::vector<causal::Scores>& counterfactual,
                                    const std::vector<int>& labels,
                                    const std::vector<std::vector<int>>& label_sets,
                                    TaskKind task) {
    if (factual.empty() || factual.size() != counterfactual.size()) {
        throw ValidationError("task_loss: batch size mismatch");
    }
    double lf = 0.0, lcf = 0.0;
    for (std::size_t i = 0; i < factual.size(); ++i) {
        if (task == TaskKind::multi_class) {
            lf += cross_entropy_value(factual[i], labels.at(i));
            lcf += cross_entropy_value(counterfactual[i], labels.at(i));
        } else {
            lf += multilabel_nll_value(factual[i], label_sets.at(i));
            lcf += multilabel_nll_value(counterfactual[i], label_sets.at(i));
        }
    }
    auto n = static_cast<double>(factual.size());
    return {lf / n, lcf / n};
}

double kl_divergence(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ValidationError("kl_divergence: length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] <= 0.0) continue;
        acc += p[i] * (std::log(p[i]) - std::log(q[i]));
    }
    return acc;
}

double kl_loss(const causal::Scores& counterfactual, const causal::Scores& factual) {
    if (counterfactual.size() != factual.size()) throw ShapeError("kl_loss: length mismatch");
    return kl_divergence(softmax_probs(factual), softmax_probs(counterfactual));
}

Batch make_batch(const models::ClefModel& model, const std::vector<synth::SceneSample>& samples,
                 const std::vector<std::size_t>& indices) {
    if (indices.empty()) throw ValidationError("make_batch: empty batch");
    const std::size_t b = indices.size();
    const std::size_t ds = model.config.d_s;
    const std::size_t dc = model.config.d_c;
    const std::size_t vw = ds + dc;
    std::vector<double> subject(b * ds);
    std::vector<double> context(b * dc);
    std::vector<double> view(b * vw);
    Batch batch;
    batch.labels.reserve(b);
    batch.label_sets.reserve(b);
    for (std::size_t r = 0; r < b; ++r) {
        const auto& s = samples.at(indices[r]);
        if (s.subject_signal.size() != ds || s.context_signal.size() != dc) {
            throw ShapeError("make_batch: sample width mismatch");
        }
        std::copy(s.subject_signal.begin(), s.subject_signal.end(),
                  subject.begin() + static_cast<std::ptrdiff_t>(r * ds));
        std::copy(s.context_signal.begin(), s.context_signal.end(),
                  context.begin() + static_cast<std::ptrdiff_t>(r * dc));
        std::vector<double> row = model.config.mask_context ? synth::mask_features(s, ds)
                                                            : synth::full_features(s);
        std::copy(row.begin(), row.end(), view.begin() + static_cast<std::ptrdiff_t>(r * vw));
        batch.labels.push_back(s.label);
        batch.label_sets.push_back(s.labels);
    }
    batch.subject = Tensor::from_values({b, ds}, std::move(subject));
    batch.context = Tensor::from_values({b, dc}, std::move(context));
    batch.ctx_view = Tensor::from_values({b, vw}, std::move(view));
    return batch;
}

LossResult final_loss(diff::Tape* tape, const models::ClefModel& model, const Batch& batch,
                      const TrainConfig& config) {
    if (model.config.mode != config.mode) {
        throw ContractError("final_loss: model/config mode mismatch");
    }
    const std::size_t b = batch.labels.size();
    LossResult result;

    auto task_term = [&](const Tensor& scores) {
        if (config.task == TaskKind::multi_class) {
            return ops::cross_entropy_mean(tape, scores, batch.labels);
        }
        return ops::multilabel_nll_mean(tape, ops::log_sigmoid(tape, scores), batch.label_sets);
    };
    auto task_term_logp = [&](const Tensor& logp) {
        if (config.task == TaskKind::multi_class) {
            return ops::cross_entropy_mean(tape, logp, batch.labels);
        }
        return ops::multilabel_nll_mean(tape, logp, batch.label_sets);
    };

    if (config.mode == models::Mode::vanilla) {
        auto [e, y_e] = models::forward_ensemble(tape, model, batch.subject, batch.context);
        Tensor total = task_term(y_e);
        result.total = total;
        result.breakdown.task_factual = total.item();
        result.breakdown.total = total.item();
        return result;
    }

    Tensor y_c = models::forward_context(tape, model, batch.ctx_view);
    auto [e, y_e] = models::forward_ensemble(tape, model, batch.subject, batch.context);
    Tensor star_tile = ops::tile_rows(tape, model.no_treatment.logits, b);
    Tensor phi_f = ops::log_sigmoid(tape, ops::add(tape, y_c, y_e));

    Tensor task_f = task_term_logp(phi_f);
    result.breakdown.task_factual = task_f.item();

    if (config.mode == models::Mode::te_only) {
        result.total = task_f;
        result.breakdown.total = task_f.item();
        return result;
    }

    Tensor phi_cf = ops::log_sigmoid(tape, ops::add(tape, y_c, star_tile));
    Tensor task_cf = task_term_logp(phi_cf);
    result.breakdown.task_counterfactual = task_cf.item();
    Tensor total = ops::add(tape, task_f, task_cf);

    if (config.mode == models::Mode::clef) {
        Tensor kl = kl_term(tape, phi_f, y_c, star_tile, config.kl_direction);
        result.breakdown.kl = kl.item();
        total = ops::add(tape, total, ops::scale(tape, kl, config.kl_weight));
    }
    result.total = total;
    result.breakdown.total = total.item();
    return result;
}

nlohmann::json log_to_json(const TrainLog& log) {
    nlohmann::json epochs = nlohmann::json::array();
    for (const auto& rec : log.epochs) {
        epochs.push_back({
            {"epoch", rec.epoch},
            {"task_factual", rec.loss.task_factual},
            {"task_counterfactual", rec.loss.task_counterfactual},
            {"kl", rec.loss.kl},
            {"total", rec.loss.total},
            {"val_metric", rec.val_metric},
        });
    }
    return nlohmann::json{
        {"format", "clef-trainlog"},
        {"version", 1},
        {"epochs", epochs},
        {"best_epoch", log.best_epoch},
        {"best_val", log.best_val},
    };
}

double validation_metric(const models::ClefModel& model,
                         const std::vector<synth::SceneSample>& samples, TaskKind task) {
    if (samples.empty()) throw ValidationError("validation_metric: empty sample list");
    auto scorer = models::default_scorer(model.config.mode);
    auto scores = models::score_samples(model, samples, scorer);
    if (task == TaskKind::multi_class) {
        std::vector<int> preds(samples.size()), labels(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            preds[i] = static_cast<int>(causal::argmax(scores[i]));
            labels[i] = samples[i].label;
        }
        return metrics::accuracy(preds, labels);
    }
    std::vector<std::optional<double>> aps;
    for (std::size_t c = 0; c < model.config.k; ++c) {
        std::vector<double> s(samples.size());
        std::vector<char> pos(samples.size());
        for (std::size_t i = 0; i < samples.size(); ++i) {
            s[i] = scores[i][c];
            pos[i] = std::find(samples[i].labels.begin(), samples[i].labels.end(),
                               static_cast<int>(c)) != samples[i].labels.end();
        }
        aps.push_back(metrics::average_precision(s, pos));
    }
    return metrics::mean_ap(aps);
}

TrainLog fit(models::ClefModel& model, const std::vector<synth::SceneSample>& train_samples,
             const std::vector<synth::SceneSample>& val_samples, const TrainConfig& config) {
    config.validate();
    if (train_samples.empty()) throw ValidationError("fit: empty training set");
    if (val_samples.empty()) throw ValidationError("fit: empty validation set");
    if (model.config.mode != config.mode) throw ContractError("fit: model/config mode mismatch");

    diff::Optimizer optimizer(model.parameters(), config.optimizer);

    TrainLog log;
    std::vector<double> best_snapshot = model.snapshot();
    double best_val = config.epochs > 0 ? -1.0 : validation_metric(model, val_samples, config.task);
    std::size_t best_epoch = 0;

    Rng shuffle_rng(mix_seed(config.seed, kStreamShuffle, 0));
    std::vector<std::size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle_rng.shuffle(order);
        LossBreakdown epoch_loss;
        std::size_t seen = 0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<std::size_t> indices(order.begin() + static_cast<std::ptrdiff_t>(start),
                                             order.begin() + static_cast<std::ptrdiff_t>(stop));
            Batch batch = make_batch(model, train_samples, indices);
            diff::Tape tape;
            LossResult loss = final_loss(&tape, model, batch, config);
            if (!std::isfinite(loss.breakdown.total)) {
                throw DivergenceError("fit: non-finite loss at epoch " + std::to_string(epoch));
            }
            optimizer.zero_grad();
            tape.backward(loss.total);
            optimizer.step();

            auto w = static_cast<double>(indices.size());
            epoch_loss.task_factual += w * loss.breakdown.task_factual;
            epoch_loss.task_counterfactual += w * loss.breakdown.task_counterfactual;
            epoch_loss.kl += w * loss.breakdown.kl;
            epoch_loss.total += w * loss.breakdown.total;
            seen += indices.size();
        }
        auto n = static_cast<double>(seen);
        epoch_loss.task_factual /= n;
        epoch_loss.task_counterfactual /= n;
        epoch_loss.kl /= n;
        epoch_loss.total /= n;

        double val = validation_metric(model, val_samples, config.task);
        log.epochs.push_back(EpochRecord{epoch, epoch_loss, val});
        if (val > best_val) {
            best_val = val;
            best_epoch = epoch;
            best_snapshot = model.snapshot();
        }
    }

    model.restore(best_snapshot);
    log.best_epoch = best_epoch;
    log.best_val = config.epochs > 0 ? best_val : best_val;
    return log;
}

}  // namespace clef::train
