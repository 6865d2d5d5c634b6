#ifndef CLEF_SYNTHBENCH_HPP
#define CLEF_SYNTHBENCH_HPP

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace clef::synth {

// Generative spec for the spurious-correlation benchmark. Each context type
// admits a label subset (the good context prior); during training the
// preferred label is drawn with probability `beta` on top of that subset
// (the bias). Test splits decorrelate or anti-correlate labels from types.
struct BiasSpec {
    std::size_t K = 6;  // class count
    std::size_t T = 3;  // context-type count
    double beta = 0.9;
    std::vector<std::vector<int>> prior_map;  // T admissible subsets
    std::vector<int> preferred;               // one per context type
    double occlusion_rate = 0.5;
    double sigma_s = 0.4;
    double sigma_c = 0.3;
    std::size_t d_s = 16;
    std::size_t d_c = 16;
    std::uint64_t seed = 1;

    void validate() const;

    // Rotating admissible windows; subsets of size K/T + 1 so neighbouring
    // context types overlap and the anti-correlated split stays non-trivial.
    static BiasSpec defaults();
};

nlohmann::json spec_to_json(const BiasSpec& spec);
BiasSpec spec_from_json(const nlohmann::json& j);

enum class SplitKind { train, val, test_decorrelated, test_anti };

std::string split_name(SplitKind s);
SplitKind split_from_name(const std::string& name);

struct SceneSample {
    std::vector<double> subject_signal;
    std::vector<double> context_signal;
    int context_type = 0;
    int label = 0;
    std::vector<int> labels;  // label set; singleton under multi-class generation
    bool occluded = false;
    std::string split;  // "train" | "val" | "test"
};

// Pixel grid with a subject bounding box, inclusive-exclusive corners
// (x = column, y = row).
struct GridImage {
    std::size_t height = 0;
    std::size_t width = 0;
    std::size_t channels = 1;
    std::vector<double> pixels;  // row-major, channel innermost
    int x0 = 0, y0 = 0, x1 = 0, y1 = 0;

    double& at(std::size_t row, std::size_t col, std::size_t ch);
    double at(std::size_t row, std::size_t col, std::size_t ch) const;
};

// Fixed seeded unit-norm prototype vectors.
std::vector<std::vector<double>> label_prototypes(const BiasSpec& spec);
std::vector<std::vector<double>> context_prototypes(const BiasSpec& spec);

// Deterministic given (spec.seed, split, index); samples are independent of
// each other and of n.
std::vector<SceneSample> generate_dataset(const BiasSpec& spec, std::size_t n, SplitKind split);

// Zeroes pixels inside the subject bounding box, leaves the rest untouched.
GridImage mask_grid(const GridImage& img);

// Vector-space analog of the grid masking: the model input with subject
// slots zeroed. Width is always d_s + d_c.
std::vector<double> mask_features(const SceneSample& sample, std::size_t d_s);
// Unmasked model input [subject ; context].
std::vector<double> full_features(const SceneSample& sample);

// Exact posterior P(label | signals) under the generative model, assuming
// the label distribution of `assume_split`. Sums to 1.
std::vector<double> bayes_oracle(const BiasSpec& spec, const SceneSample& sample,
                                 SplitKind assume_split);

// JSON Lines dataset files: a header object carrying the spec, then one
// sample object per line. `extra_header` fields are merged into the header.
void write_jsonl(const std::string& path, const BiasSpec& spec, SplitKind split,
                 const std::vector<SceneSample>& samples,
                 const nlohmann::json& extra_header = nlohmann::json::object());

struct Dataset {
    BiasSpec spec;
    SplitKind split = SplitKind::train;
    std::vector<SceneSample> samples;
};

Dataset read_jsonl(const std::string& path);

}  // namespace clef::synth

#endif  // CLEF_SYNTHBENCH_HPP
