#include "clef/models.hpp"

#include <fstream>

#include <json.hpp>

#include "clef/errors.hpp"
#include "clef/ops.hpp"
#include "clef/rng.hpp"

namespace clef::models {
namespace {

using diff::Tensor;
using nlohmann::json;

constexpr std::uint64_t kStreamContextBranch = 11;
constexpr std::uint64_t kStreamEnsemble = 12;
constexpr std::uint64_t kStreamNoTreatment = 13;

json layer_to_json(const diff::DenseLayer& layer) {
    auto w = layer.weight.values();
    auto b = layer.bias.values();
    return json{
        {"out", layer.out_width()},
        {"in", layer.in_width()},
        {"activation", diff::activation_name(layer.activation)},
        {"weight", std::vector<double>(w.begin(), w.end())},
        {"bias", std::vector<double>(b.begin(), b.end())},
    };
}

diff::DenseLayer layer_from_json(const json& j, bool trainable) {
    diff::DenseLayer layer;
    std::size_t out = j.at("out").get<std::size_t>();
    std::size_t in = j.at("in").get<std::size_t>();
    auto w = j.at("weight").get<std::vector<double>>();
    auto b = j.at("bias").get<std::vector<double>>();
    if (w.size() != out * in || b.size() != out) {
        throw ValidationError("checkpoint layer has inconsistent dims");
    }
    layer.weight = Tensor::from_values({out, in}, std::move(w), trainable);
    layer.bias = Tensor::from_values({out}, std::move(b), trainable);
    layer.activation = diff::activation_from_name(j.at("activation").get<std::string>());
    return layer;
}

json mlp_to_json(const diff::Mlp& mlp) {
    json arr = json::array();
    for (const auto& layer : mlp.layers) arr.push_back(layer_to_json(layer));
    return arr;
}

diff::Mlp mlp_from_json(const json& j, bool trainable) {
    diff::Mlp mlp;
    for (const auto& lj : j) mlp.layers.push_back(layer_from_json(lj, trainable));
    return mlp;
}

void append(std::vector<Tensor>& dst, std::vector<Tensor> src) {
    for (auto& t : src) dst.push_back(std::move(t));
}

}  // namespace

std::string mode_name(Mode m) {
    switch (m) {
        case Mode::clef: return "clef";
        case Mode::vanilla: return "vanilla";
        case Mode::te_only: return "te_only";
        case Mode::no_kl: return "no_kl";
    }
    return "clef";
}

Mode mode_from_name(const std::string& name) {
    if (name == "clef") return Mode::clef;
    if (name == "vanilla") return Mode::vanilla;
    if (name == "te_only") return Mode::te_only;
    if (name == "no_kl") return Mode::no_kl;
    throw ValidationError("unknown mode: " + name);
}

diff::Tensor ContextBranch::forward(diff::Tape* tape, const diff::Tensor& masked_input) const {
    return head.forward(tape, encoder.forward(tape, masked_input));
}

std::vector<diff::Tensor> ContextBranch::parameters() const {
    std::vector<Tensor> params = encoder.parameters();
    params.push_back(head.weight);
    params.push_back(head.bias);
    return params;
}

std::pair<diff::Tensor, diff::Tensor> EnsembleModel::forward(diff::Tape* tape,
                                                             const diff::Tensor& subject,
                                                             const diff::Tensor& context) const {
    Tensor s = subject_encoder.forward(tape, subject);
    Tensor c = context_encoder.forward(tape, context);
    Tensor e = fusion.forward(tape, diff::ops::concat_cols(tape, c, s));
    Tensor y_e = head.forward(tape, e);
    return {e, y_e};
}

std::vector<diff::Tensor> EnsembleModel::parameters() const {
    std::vector<Tensor> params = subject_encoder.parameters();
    append(params, context_encoder.parameters());
    append(params, fusion.parameters());
    params.push_back(head.weight);
    params.push_back(head.bias);
    return params;
}

ClefModel ClefModel::init(const ModelConfig& config, std::uint64_t seed,
                          const std::vector<int>& train_labels) {
    if (config.k < 2) throw ValidationError("model config: class count must be >= 2");
    if (config.width == 0 || config.depth == 0) {
        throw ValidationError("model config: encoder width/depth must be positive");
    }
    ClefModel m;
    m.config = config;
    m.tag = mode_name(config.mode);
    m.seed = seed;

    Rng ctx_rng(mix_seed(seed, kStreamContextBranch, 0));
    m.context_branch.encoder =
        diff::Mlp::relu_stack(config.d_s + config.d_c, config.width, config.depth, ctx_rng);
    m.context_branch.head =
        diff::DenseLayer::init(config.width, config.k, diff::Activation::identity, ctx_rng);

    Rng ens_rng(mix_seed(seed, kStreamEnsemble, 0));
    m.ensemble.subject_encoder =
        diff::Mlp::relu_stack(config.d_s, config.width, config.depth, ens_rng);
    m.ensemble.context_encoder =
        diff::Mlp::relu_stack(config.d_c, config.width, config.depth, ens_rng);
    m.ensemble.fusion = diff::Mlp::relu_stack(2 * config.width, config.width, 1, ens_rng);
    m.ensemble.head =
        diff::DenseLayer::init(config.width, config.k, diff::Activation::identity, ens_rng);

    causal::NoTreatmentInit nt;
    nt.kind = config.no_treatment;
    nt.init_low = config.nt_init_low;
    nt.init_high = config.nt_init_high;
    nt.seed = mix_seed(seed, kStreamNoTreatment, 0);
    nt.training_labels = train_labels;
    m.no_treatment = causal::estimate_no_treatment(nt, config.k);
    return m;
}

std::vector<diff::Tensor> ClefModel::parameters() const {
    std::vector<Tensor> params = context_branch.parameters();
    append(params, ensemble.parameters());
    if (no_treatment.trainable()) params.push_back(no_treatment.logits);
    return params;
}

std::vector<double> ClefModel::snapshot() const {
    std::vector<double> snap;
    for (const Tensor& p : parameters()) {
        auto v = p.values();
        snap.insert(snap.end(), v.begin(), v.end());
    }
    return snap;
}

void ClefModel::restore(const std::vector<double>& snap) {
    std::size_t offset = 0;
    for (Tensor p : parameters()) {
        auto v = p.values();
        if (offset + v.size() > snap.size()) throw ContractError("snapshot size mismatch");
        std::copy(snap.begin() + static_cast<std::ptrdiff_t>(offset),
                  snap.begin() + static_cast<std::ptrdiff_t>(offset + v.size()), v.begin());
        offset += v.size();
    }
    if (offset != snap.size()) throw ContractError("snapshot size mismatch");
}

diff::Tensor forward_context(diff::Tape* tape, const ClefModel& m,
                             const diff::Tensor& context_view) {
    if (context_view.cols() != m.config.d_s + m.config.d_c) {
        throw ShapeError("forward_context: input width mismatch");
    }
    if (m.config.mask_context) {
        auto v = context_view.values();
        std::size_t rows = context_view.rows();
        std::size_t cols = context_view.cols();
        for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t j = 0; j < m.config.d_s; ++j) {
                if (v[r * cols + j] != 0.0) {
                    throw ContractError("forward_context: unmasked input (nonzero subject slots)");
                }
            }
        }
    }
    return m.context_branch.forward(tape, context_view);
}

std::pair<diff::Tensor, diff::Tensor> forward_ensemble(diff::Tape* tape, const ClefModel& m,
                                                       const diff::Tensor& subject,
                                                       const diff::Tensor& context) {
    if (subject.cols() != m.config.d_s) throw ShapeError("forward_ensemble: subject width mismatch");
    if (context.cols() != m.config.d_c) throw ShapeError("forward_ensemble: context width mismatch");
    return m.ensemble.forward(tape, subject, context);
}

causal::ScoreSet forward_all(const ClefModel& m, const synth::SceneSample& sample) {
    std::vector<double> view = m.config.mask_context ? synth::mask_features(sample, m.config.d_s)
                                                     : synth::full_features(sample);
    Tensor ctx_view = Tensor::row_vector(std::move(view));
    Tensor y_c = forward_context(nullptr, m, ctx_view);
    Tensor subject = Tensor::row_vector(sample.subject_signal);
    Tensor context = Tensor::row_vector(sample.context_signal);
    auto [e, y_e] = forward_ensemble(nullptr, m, subject, context);
    causal::ScoreSet set;
    auto yc = y_c.values();
    auto ye = y_e.values();
    set.y_c.assign(yc.begin(), yc.end());
    set.y_e.assign(ye.begin(), ye.end());
    set.y_e_star = m.no_treatment.scores();
    return set;
}

std::string scorer_name(Scorer s) {
    switch (s) {
        case Scorer::tie: return "tie";
        case Scorer::factual: return "factual";
        case Scorer::te: return "te";
        case Scorer::context_only: return "context_only";
        case Scorer::ensemble_only: return "ensemble_only";
    }
    return "tie";
}

Scorer scorer_from_name(const std::string& name) {
    if (name == "tie") return Scorer::tie;
    if (name == "factual") return Scorer::factual;
    if (name == "te") return Scorer::te;
    if (name == "context_only") return Scorer::context_only;
    if (name == "ensemble_only") return Scorer::ensemble_only;
    throw ValidationError("unknown scorer: " + name);
}

Scorer default_scorer(Mode mode) {
    switch (mode) {
        case Mode::clef:
        case Mode::no_kl: return Scorer::tie;
        case Mode::te_only: return Scorer::factual;
        case Mode::vanilla: return Scorer::ensemble_only;
    }
    return Scorer::tie;
}

causal::Scores apply_scorer(const causal::ScoreSet& set, Scorer scorer) {
    switch (scorer) {
        case Scorer::tie: return causal::predict_tie(set);
        case Scorer::factual: return causal::factual_score(set);
        case Scorer::te: {
            auto ref = causal::make_reference(set.y_e_star);
            return causal::compute_effects(set, ref).te;
        }
        case Scorer::context_only: return set.y_c;
        case Scorer::ensemble_only: return set.y_e;
    }
    return causal::predict_tie(set);
}

std::vector<causal::Scores> score_samples(const ClefModel& m,
                                          const std::vector<synth::SceneSample>& samples,
                                          Scorer scorer) {
    const std::size_t n = samples.size();
    const std::size_t k = m.config.k;
    std::vector<causal::Scores> out(n);
    if (n == 0) return out;

    std::vector<double> subject(n * m.config.d_s);
    std::vector<double> context(n * m.config.d_c);
    std::vector<double> view(n * (m.config.d_s + m.config.d_c));
    const std::size_t vw = m.config.d_s + m.config.d_c;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = samples[i];
        if (s.subject_signal.size() != m.config.d_s || s.context_signal.size() != m.config.d_c) {
            throw ShapeError("score_samples: sample width mismatch");
        }
        std::copy(s.subject_signal.begin(), s.subject_signal.end(),
                  subject.begin() + static_cast<std::ptrdiff_t>(i * m.config.d_s));
        std::copy(s.context_signal.begin(), s.context_signal.end(),
                  context.begin() + static_cast<std::ptrdiff_t>(i * m.config.d_c));
        std::vector<double> row = m.config.mask_context ? synth::mask_features(s, m.config.d_s)
                                                        : synth::full_features(s);
        std::copy(row.begin(), row.end(), view.begin() + static_cast<std::ptrdiff_t>(i * vw));
    }
    Tensor subject_t = Tensor::from_values({n, m.config.d_s}, std::move(subject));
    Tensor context_t = Tensor::from_values({n, m.config.d_c}, std::move(context));
    Tensor view_t = Tensor::from_values({n, vw}, std::move(view));

    Tensor y_c = forward_context(nullptr, m, view_t);
    auto [e, y_e] = forward_ensemble(nullptr, m, subject_t, context_t);
    causal::Scores star = m.no_treatment.scores();

    auto ycv = y_c.values();
    auto yev = y_e.values();
    for (std::size_t i = 0; i < n; ++i) {
        causal::ScoreSet set;
        set.y_c.assign(ycv.begin() + static_cast<std::ptrdiff_t>(i * k),
                       ycv.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        set.y_e.assign(yev.begin() + static_cast<std::ptrdiff_t>(i * k),
                       yev.begin() + static_cast<std::ptrdiff_t>((i + 1) * k));
        set.y_e_star = star;
        out[i] = apply_scorer(set, scorer);
    }
    return out;
}

void save_checkpoint(const ClefModel& m, const std::string& path) {
    auto nt = m.no_treatment.scores();
    json j{
        {"format", "clef-checkpoint"},
        {"version", 1},
        {"config",
         {
             {"d_s", m.config.d_s},
             {"d_c", m.config.d_c},
             {"K", m.config.k},
             {"width", m.config.width},
             {"depth", m.config.depth},
             {"mode", mode_name(m.config.mode)},
             {"mask_context", m.config.mask_context},
             {"no_treatment", causal::no_treatment_name(m.config.no_treatment)},
             {"nt_init_low", m.config.nt_init_low},
             {"nt_init_high", m.config.nt_init_high},
         }},
        {"config_hash", m.config_hash},
        {"tag", m.tag},
        {"seed", m.seed},
        {"context_branch",
         {{"encoder", mlp_to_json(m.context_branch.encoder)},
          {"head", layer_to_json(m.context_branch.head)}}},
        {"ensemble",
         {{"subject_encoder", mlp_to_json(m.ensemble.subject_encoder)},
          {"context_encoder", mlp_to_json(m.ensemble.context_encoder)},
          {"fusion", mlp_to_json(m.ensemble.fusion)},
          {"head", layer_to_json(m.ensemble.head)}}},
        {"no_treatment",
         {{"kind", causal::no_treatment_name(m.no_treatment.kind)},
          {"logits", nt},
          {"init_low", m.no_treatment.init_low},
          {"init_high", m.no_treatment.init_high},
          {"seed", m.no_treatment.seed}}},
    };
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open checkpoint for writing: " + path);
    out << j.dump(2) << "\n";
    if (!out) throw IoError("failed writing checkpoint: " + path);
}

ClefModel load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open checkpoint: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("checkpoint parse: ") + e.what());
    }
    try {
        if (j.value("format", "") != "clef-checkpoint") {
            throw ValidationError("not a clef checkpoint: " + path);
        }
        ClefModel m;
        const json& c = j.at("config");
        m.config.d_s = c.at("d_s").get<std::size_t>();
        m.config.d_c = c.at("d_c").get<std::size_t>();
        m.config.k = c.at("K").get<std::size_t>();
        m.config.width = c.at("width").get<std::size_t>();
        m.config.depth = c.at("depth").get<std::size_t>();
        m.config.mode = mode_from_name(c.at("mode").get<std::string>());
        m.config.mask_context = c.at("mask_context").get<bool>();
        m.config.no_treatment = causal::no_treatment_from_name(c.at("no_treatment").get<std::string>());
        m.config.nt_init_low = c.at("nt_init_low").get<double>();
        m.config.nt_init_high = c.at("nt_init_high").get<double>();
        m.config_hash = j.at("config_hash").get<std::string>();
        m.tag = j.value("tag", mode_name(m.config.mode));
        m.seed = j.value("seed", std::uint64_t{0});

        m.context_branch.encoder = mlp_from_json(j.at("context_branch").at("encoder"), true);
        m.context_branch.head = layer_from_json(j.at("context_branch").at("head"), true);
        m.ensemble.subject_encoder = mlp_from_json(j.at("ensemble").at("subject_encoder"), true);
        m.ensemble.context_encoder = mlp_from_json(j.at("ensemble").at("context_encoder"), true);
        m.ensemble.fusion = mlp_from_json(j.at("ensemble").at("fusion"), true);
        m.ensemble.head = layer_from_json(j.at("ensemble").at("head"), true);

        const json& nt = j.at("no_treatment");
        m.no_treatment.kind = causal::no_treatment_from_name(nt.at("kind").get<std::string>());
        auto logits = nt.at("logits").get<std::vector<double>>();
        if (logits.size() != m.config.k) throw ValidationError("checkpoint no-treatment width mismatch");
        m.no_treatment.logits = Tensor::from_values({m.config.k}, std::move(logits),
                                                    m.no_treatment.kind ==
                                                        causal::NoTreatmentKind::learnable_uniform);
        m.no_treatment.init_low = nt.at("init_low").get<double>();
        m.no_treatment.init_high = nt.at("init_high").get<double>();
        m.no_treatment.seed = nt.at("seed").get<std::uint64_t>();
        return m;
    } catch (const json::exception& e) {
        throw ValidationError(std::string("checkpoint fields: ") + e.what());
    }
}

}  // namespace clef::models
