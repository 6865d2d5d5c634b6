#include "clef/synthbench.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "clef/errors.hpp"
#include "clef/rng.hpp"

namespace clef::synth {
namespace {

constexpr std::uint64_t kStreamLabelProto = 1001;
constexpr std::uint64_t kStreamContextProto = 1002;
constexpr std::uint64_t kStreamTrain = 1;
constexpr std::uint64_t kStreamVal = 2;
constexpr std::uint64_t kStreamDecorrelated = 3;
constexpr std::uint64_t kStreamAnti = 4;

std::uint64_t stream_of(SplitKind s) {
    switch (s) {
        case SplitKind::train: return kStreamTrain;
        case SplitKind::val: return kStreamVal;
        case SplitKind::test_decorrelated: return kStreamDecorrelated;
        case SplitKind::test_anti: return kStreamAnti;
    }
    return kStreamTrain;
}

// floor((i+1)*rate) - floor(i*rate): spreads exactly round(n*rate) +- 1
// occlusions over any prefix, as a pure function of the index.
bool occlusion_flag(std::size_t index, double rate) {
    double a = std::floor(static_cast<double>(index) * rate);
    double b = std::floor(static_cast<double>(index + 1) * rate);
    return b - a >= 1.0;
}

std::vector<double> unit_prototype(std::uint64_t seed, std::size_t dim) {
    Rng rng(seed);
    std::vector<double> v(dim);
    double norm2 = 0.0;
    for (double& x : v) {
        x = rng.normal();
        norm2 += x * x;
    }
    double inv = 1.0 / std::sqrt(norm2);
    for (double& x : v) x *= inv;
    return v;
}

double log_gaussian_ssd(const std::vector<double>& x, const std::vector<double>& mu,
                        double sigma) {
    // Log density up to the dimension-constant term, which cancels in the
    // posterior normalization because sigma is shared within a signal group.
    double ssd = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - mu[i];
        ssd += d * d;
    }
    return -ssd / (2.0 * sigma * sigma);
}

// P(label = y | context type t) under the split's label distribution.
double label_given_type(const BiasSpec& spec, SplitKind split, int t, int y) {
    const auto& admissible = spec.prior_map[static_cast<std::size_t>(t)];
    bool in = std::find(admissible.begin(), admissible.end(), y) != admissible.end();
    if (!in) return 0.0;
    double uniform = 1.0 / static_cast<double>(admissible.size());
    switch (split) {
        case SplitKind::train:
            return spec.beta * (y == spec.preferred[static_cast<std::size_t>(t)] ? 1.0 : 0.0) +
                   (1.0 - spec.beta) * uniform;
        // The validation split is decorrelated so checkpoint selection does
        // not inherit the training bias.
        case SplitKind::val:
        case SplitKind::test_decorrelated:
            return uniform;
        case SplitKind::test_anti: {
            if (y == spec.preferred[static_cast<std::size_t>(t)]) return 0.0;
            return 1.0 / static_cast<double>(admissible.size() - 1);
        }
    }
    return 0.0;
}

}  // namespace

void BiasSpec::validate() const {
    if (K < 2) throw ValidationError("bias spec: K must be >= 2");
    if (T < 2) throw ValidationError("bias spec: T must be >= 2");
    if (!(beta >= 0.0 && beta <= 1.0)) throw ValidationError("bias spec: beta must be in [0,1]");
    if (!(occlusion_rate >= 0.0 && occlusion_rate <= 1.0)) {
        throw ValidationError("bias spec: occlusion_rate must be in [0,1]");
    }
    if (!(sigma_s > 0.0) || !(sigma_c > 0.0)) {
        throw ValidationError("bias spec: noise std-devs must be positive");
    }
    if (d_s == 0 || d_c == 0) throw ValidationError("bias spec: feature widths must be positive");
    if (prior_map.size() != T) throw ValidationError("bias spec: prior_map must have T entries");
    if (preferred.size() != T) throw ValidationError("bias spec: preferred must have T entries");
    std::vector<bool> covered(K, false);
    for (std::size_t t = 0; t < T; ++t) {
        const auto& subset = prior_map[t];
        if (subset.empty()) throw ValidationError("bias spec: admissible subset is empty");
        std::set<int> seen;
        for (int c : subset) {
            if (c < 0 || static_cast<std::size_t>(c) >= K) {
                throw ValidationError("bias spec: admissible class out of range");
            }
            if (!seen.insert(c).second) {
                throw ValidationError("bias spec: duplicate class in admissible subset");
            }
            covered[static_cast<std::size_t>(c)] = true;
        }
        if (std::find(subset.begin(), subset.end(), preferred[t]) == subset.end()) {
            throw ValidationError("bias spec: preferred label not in its admissible subset");
        }
    }
    for (std::size_t c = 0; c < K; ++c) {
        if (!covered[c]) throw ValidationError("bias spec: class missing from every subset");
    }
}

BiasSpec BiasSpec::defaults() {
    BiasSpec spec;
    std::size_t stride = spec.K / spec.T;
    std::size_t width = std::min(spec.K, stride + 1);
    spec.prior_map.clear();
    spec.preferred.clear();
    for (std::size_t t = 0; t < spec.T; ++t) {
        std::vector<int> subset;
        for (std::size_t j = 0; j < width; ++j) {
            subset.push_back(static_cast<int>((t * stride + j) % spec.K));
        }
        spec.prior_map.push_back(subset);
        spec.preferred.push_back(static_cast<int>(t * stride));
    }
    spec.validate();
    return spec;
}

nlohmann::json spec_to_json(const BiasSpec& spec) {
    return nlohmann::json{
        {"K", spec.K},
        {"T", spec.T},
        {"beta", spec.beta},
        {"prior_map", spec.prior_map},
        {"preferred", spec.preferred},
        {"occlusion_rate", spec.occlusion_rate},
        {"sigma_s", spec.sigma_s},
        {"sigma_c", spec.sigma_c},
        {"d_s", spec.d_s},
        {"d_c", spec.d_c},
        {"seed", spec.seed},
    };
}

BiasSpec spec_from_json(const nlohmann::json& j) {
    BiasSpec spec;
    try {
        spec.K = j.at("K").get<std::size_t>();
        spec.T = j.at("T").get<std::size_t>();
        spec.beta = j.at("beta").get<double>();
        spec.prior_map = j.at("prior_map").get<std::vector<std::vector<int>>>();
        spec.preferred = j.at("preferred").get<std::vector<int>>();
        spec.occlusion_rate = j.at("occlusion_rate").get<double>();
        spec.sigma_s = j.at("sigma_s").get<double>();
        spec.sigma_c = j.at("sigma_c").get<double>();
        spec.d_s = j.at("d_s").get<std::size_t>();
        spec.d_c = j.at("d_c").get<std::size_t>();
        spec.seed = j.at("seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("bias spec json: ") + e.what());
    }
    spec.validate();
    return spec;
}

std::string split_name(SplitKind s) {
    switch (s) {
        case SplitKind::train: return "train";
        case SplitKind::val: return "val";
        case SplitKind::test_decorrelated: return "decorrelated";
        case SplitKind::test_anti: return "anti";
    }
    return "train";
}

SplitKind split_from_name(const std::string& name) {
    if (name == "train") return SplitKind::train;
    if (name == "val") return SplitKind::val;
    if (name == "decorrelated") return SplitKind::test_decorrelated;
    if (name == "anti") return SplitKind::test_anti;
    throw ValidationError("unknown split: " + name);
}

double& GridImage::at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels[(row * width + col) * channels + ch];
}

double GridImage::at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels[(row * width + col) * channels + ch];
}

std::vector<std::vector<double>> label_prototypes(const BiasSpec& spec) {
    std::vector<std::vector<double>> protos;
    for (std::size_t k = 0; k < spec.K; ++k) {
        protos.push_back(unit_prototype(mix_seed(spec.seed, kStreamLabelProto, k), spec.d_s));
    }
    return protos;
}

std::vector<std::vector<double>> context_prototypes(const BiasSpec& spec) {
    std::vector<std::vector<double>> protos;
    for (std::size_t t = 0; t < spec.T; ++t) {
        protos.push_back(unit_prototype(mix_seed(spec.seed, kStreamContextProto, t), spec.d_c));
    }
    return protos;
}

std::vector<SceneSample> generate_dataset(const BiasSpec& spec, std::size_t n, SplitKind split) {
    spec.validate();
    if (n < 1) throw ValidationError("generate_dataset: n must be >= 1");
    if (split == SplitKind::test_anti) {
        for (const auto& subset : spec.prior_map) {
            if (subset.size() < 2) {
                throw ValidationError(
                    "generate_dataset: anti-correlated split needs admissible subsets of size >= 2");
            }
        }
    }
    auto protos_s = label_prototypes(spec);
    auto protos_c = context_prototypes(spec);
    std::uint64_t stream = stream_of(split);
    std::string tag = split == SplitKind::train  ? "train"
                      : split == SplitKind::val ? "val"
                                                : "test";

    std::vector<SceneSample> samples;
    samples.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(spec.seed, stream, i));
        SceneSample s;
        s.split = tag;
        s.context_type = static_cast<int>(rng.below(spec.T));
        const auto& admissible = spec.prior_map[static_cast<std::size_t>(s.context_type)];
        int pref = spec.preferred[static_cast<std::size_t>(s.context_type)];
        switch (split) {
            case SplitKind::train:
                if (rng.uniform() < spec.beta) {
                    s.label = pref;
                } else {
                    s.label = admissible[rng.below(admissible.size())];
                }
                break;
            case SplitKind::val:
            case SplitKind::test_decorrelated:
                s.label = admissible[rng.below(admissible.size())];
                break;
            case SplitKind::test_anti: {
                std::vector<int> rest;
                for (int c : admissible) {
                    if (c != pref) rest.push_back(c);
                }
                s.label = rest[rng.below(rest.size())];
                break;
            }
        }
        s.labels = {s.label};
        s.occluded = occlusion_flag(i, spec.occlusion_rate);
        if (s.occluded) {
            s.subject_signal.assign(spec.d_s, 0.0);
        } else {
            s.subject_signal.resize(spec.d_s);
            const auto& mu = protos_s[static_cast<std::size_t>(s.label)];
            for (std::size_t d = 0; d < spec.d_s; ++d) {
                s.subject_signal[d] = mu[d] + spec.sigma_s * rng.normal();
            }
        }
        s.context_signal.resize(spec.d_c);
        const auto& mu_c = protos_c[static_cast<std::size_t>(s.context_type)];
        for (std::size_t d = 0; d < spec.d_c; ++d) {
            s.context_signal[d] = mu_c[d] + spec.sigma_c * rng.normal();
        }
        samples.push_back(std::move(s));
    }
    return samples;
}

GridImage mask_grid(const GridImage& img) {
    if (img.pixels.size() != img.height * img.width * img.channels) {
        throw ValidationError("mask_grid: pixel count does not match dims");
    }
    if (img.x0 > img.x1 || img.y0 > img.y1 || img.x0 < 0 || img.y0 < 0 ||
        static_cast<std::size_t>(img.x1) > img.width ||
        static_cast<std::size_t>(img.y1) > img.height) {
        throw ValidationError("mask_grid: bounding box out of bounds");
    }
    GridImage out = img;
    for (std::size_t row = static_cast<std::size_t>(img.y0);
         row < static_cast<std::size_t>(img.y1); ++row) {
        for (std::size_t col = static_cast<std::size_t>(img.x0);
             col < static_cast<std::size_t>(img.x1); ++col) {
            for (std::size_t ch = 0; ch < img.channels; ++ch) out.at(row, col, ch) = 0.0;
        }
    }
    return out;
}

std::vector<double> mask_features(const SceneSample& sample, std::size_t d_s) {
    std::vector<double> v(d_s, 0.0);
    v.insert(v.end(), sample.context_signal.begin(), sample.context_signal.end());
    return v;
}

std::vector<double> full_features(const SceneSample& sample) {
    std::vector<double> v = sample.subject_signal;
    v.insert(v.end(), sample.context_signal.begin(), sample.context_signal.end());
    return v;
}

std::vector<double> bayes_oracle(const BiasSpec& spec, const SceneSample& sample,
                                 SplitKind assume_split) {
    spec.validate();
    auto protos_s = label_prototypes(spec);
    auto protos_c = context_prototypes(spec);

    // log p(x_c | t), shared across labels
    std::vector<double> ctx_ll(spec.T);
    for (std::size_t t = 0; t < spec.T; ++t) {
        ctx_ll[t] = log_gaussian_ssd(sample.context_signal, protos_c[t], spec.sigma_c);
    }

    const double neg_inf = -std::numeric_limits<double>::infinity();
    std::vector<double> log_post(spec.K, neg_inf);
    for (std::size_t y = 0; y < spec.K; ++y) {
        // logsumexp over context types of log P(t) + log p(x_c|t) + log P(y|t)
        double best = neg_inf;
        std::vector<double> terms;
        terms.reserve(spec.T);
        for (std::size_t t = 0; t < spec.T; ++t) {
            double py = label_given_type(spec, assume_split, static_cast<int>(t),
                                         static_cast<int>(y));
            if (py <= 0.0) continue;
            double term = ctx_ll[t] + std::log(py);  // uniform log P(t) cancels
            terms.push_back(term);
            best = std::max(best, term);
        }
        if (terms.empty()) continue;
        double acc = 0.0;
        for (double term : terms) acc += std::exp(term - best);
        double lp = best + std::log(acc);
        if (!sample.occluded) {
            lp += log_gaussian_ssd(sample.subject_signal, protos_s[y], spec.sigma_s);
        }
        log_post[y] = lp;
    }

    double best = *std::max_element(log_post.begin(), log_post.end());
    if (best == neg_inf) throw ValidationError("bayes_oracle: sample impossible under split");
    double z = 0.0;
    for (double lp : log_post) {
        if (lp != neg_inf) z += std::exp(lp - best);
    }
    std::vector<double> post(spec.K, 0.0);
    for (std::size_t y = 0; y < spec.K; ++y) {
        if (log_post[y] != neg_inf) post[y] = std::exp(log_post[y] - best) / z;
    }
    return post;
}

void write_jsonl(const std::string& path, const BiasSpec& spec, SplitKind split,
                 const std::vector<SceneSample>& samples, const nlohmann::json& extra_header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    nlohmann::json header{
        {"format", "clef-dataset"},
        {"version", 1},
        {"split", split_name(split)},
        {"n", samples.size()},
        {"spec", spec_to_json(spec)},
    };
    for (const auto& [key, value] : extra_header.items()) header[key] = value;
    out << header.dump() << "\n";
    for (const SceneSample& s : samples) {
        nlohmann::json j{
            {"subject_signal", s.subject_signal},
            {"context_signal", s.context_signal},
            {"context_type", s.context_type},
            {"label", s.label},
            {"labels", s.labels},
            {"occluded", s.occluded},
            {"split", s.split},
        };
        out << j.dump() << "\n";
    }
    if (!out) throw IoError("failed writing dataset: " + path);
}

Dataset read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open dataset: " + path);
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("dataset is empty: " + path);
    Dataset ds;
    try {
        nlohmann::json header = nlohmann::json::parse(line);
        if (header.value("format", "") != "clef-dataset") {
            throw ValidationError("not a clef dataset: " + path);
        }
        ds.spec = spec_from_json(header.at("spec"));
        ds.split = split_from_name(header.at("split").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("dataset header: ") + e.what());
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line);
            SceneSample s;
            s.subject_signal = j.at("subject_signal").get<std::vector<double>>();
            s.context_signal = j.at("context_signal").get<std::vector<double>>();
            s.context_type = j.at("context_type").get<int>();
            s.label = j.at("label").get<int>();
            s.labels = j.at("labels").get<std::vector<int>>();
            s.occluded = j.at("occluded").get<bool>();
            s.split = j.at("split").get<std::string>();
            if (s.subject_signal.size() != ds.spec.d_s || s.context_signal.size() != ds.spec.d_c) {
                throw ValidationError("dataset sample width mismatch");
            }
            if (s.occluded) {
                for (double v : s.subject_signal) {
                    if (v != 0.0) throw ValidationError("occluded sample has nonzero subject signal");
                }
            }
            ds.samples.push_back(std::move(s));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("dataset line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return ds;
}

}  // namespace clef::synth
