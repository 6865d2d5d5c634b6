#ifndef CLEF_EXPERIMENT_HPP
#define CLEF_EXPERIMENT_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "clef/metrics.hpp"
#include "clef/models.hpp"
#include "clef/synthbench.hpp"
#include "clef/train.hpp"

namespace clef::exp {

// Stable 64-bit content hash (FNV-1a), hex-encoded.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string hash_hex(std::uint64_t h);
std::string file_hash(const std::string& path);
std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

struct ExperimentConfig {
    synth::BiasSpec bias;
    train::TrainConfig train;
    std::size_t width = 32;
    std::size_t depth = 2;
    std::size_t n_train = 6000;
    std::size_t n_val = 1000;
    std::size_t n_test = 2000;
    std::string test_split = "anti";  // "decorrelated" | "anti"
    std::string out_dir = "runs";
    std::vector<std::string> ablations = {"vanilla",    "clef",          "te_only",
                                          "no_kl",      "no_mask",       "avg_embedding",
                                          "random_embedding"};

    void validate() const;
    // Applies one experiment seed to both the generator and the trainer.
    void reseed(std::uint64_t seed);
};

ExperimentConfig default_config();
nlohmann::json config_to_json(const ExperimentConfig& config);
ExperimentConfig config_from_json(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
std::string config_hash(const ExperimentConfig& config);

// Ablation grid cell: a named (mode, no-treatment kind, masking) triple.
struct GridCell {
    std::string name;
    models::Mode mode = models::Mode::clef;
    causal::NoTreatmentKind no_treatment = causal::NoTreatmentKind::learnable_uniform;
    bool mask_context = true;
};

GridCell grid_cell(const std::string& name);
train::TrainConfig cell_train_config(const ExperimentConfig& config, const GridCell& cell);

// Artifact paths inside a run directory.
std::string dataset_path(const std::string& dir, const std::string& split);
std::string checkpoint_path(const std::string& dir, const std::string& cell, std::uint64_t seed);
std::string trainlog_path(const std::string& dir, const std::string& cell, std::uint64_t seed);
std::string report_path(const std::string& dir, const std::string& cell, const std::string& scorer,
                        std::uint64_t seed);

// Commands. All throw clef errors; the CLI maps them to exit codes.

// Writes train/val/test JSONL into `dir` and a frequency summary to `out`.
void cmd_generate(const ExperimentConfig& config, const std::string& dir, std::ostream& out);

struct TrainResult {
    models::ClefModel model;
    train::TrainLog log;
    std::string checkpoint_file;
    std::string log_file;
};

// Trains one grid cell against datasets in `data_dir`, writes checkpoint and
// training log into `out_dir`.
TrainResult cmd_train(const ExperimentConfig& config, const std::string& data_dir,
                      const std::string& cell_name, const std::string& out_dir);

// Evaluates a checkpoint on a dataset file; writes the report JSON when
// `out_file` is non-empty.
metrics::EvalReport cmd_eval(const std::string& checkpoint_file, const std::string& dataset_file,
                             models::Scorer scorer, const std::string& out_file);

struct AblateResult {
    metrics::ComparisonTable table;
    std::vector<metrics::EvalReport> reports;
};

// Runs the config's ablation list on shared data, writes per-cell artifacts
// plus comparison.{json,csv,txt}. `jobs` grid cells run in parallel.
AblateResult cmd_ablate(const ExperimentConfig& config, const std::string& out_dir,
                        std::size_t jobs);

// Aggregates reports/logs under `run_dir` (recursively) into summary.md and
// summary.csv; returns the markdown. Missing artifacts are listed, an empty
// directory yields a "no runs found" summary.
std::string cmd_report(const std::string& run_dir);

}  // namespace clef::exp

#endif  // CLEF_EXPERIMENT_HPP
