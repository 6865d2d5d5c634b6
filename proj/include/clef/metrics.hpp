#ifndef CLEF_METRICS_HPP
#define CLEF_METRICS_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "clef/causal.hpp"

namespace clef::metrics {

// Fraction of exact matches; ValidationError on empty input.
double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels);

// Rank-based AP: precision averaged at positive ranks, scores sorted
// descending with ties broken by original order. nullopt when the class has
// no positives (skipped, excluded from mAP).
std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<char>& positives);

// Unweighted mean over evaluable classes; ValidationError if none.
double mean_ap(const std::vector<std::optional<double>>& per_class);

struct EvalReport {
    std::string mode;
    std::string scorer;
    std::string dataset_hash;
    std::string config_hash;
    std::uint64_t seed = 0;
    std::size_t n = 0;
    double accuracy = 0.0;
    double map = 0.0;
    std::vector<double> per_class_accuracy;
    std::vector<std::optional<double>> per_class_ap;
};

// Score vectors -> predictions, accuracy, one-vs-rest AP per class.
EvalReport build_report(const std::vector<causal::Scores>& scores,
                        const std::vector<int>& labels,
                        const std::vector<std::vector<int>>& label_sets, std::size_t k,
                        const std::string& mode, const std::string& scorer,
                        const std::string& dataset_hash, std::uint64_t seed);

nlohmann::json report_to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);

struct ModeRow {
    std::string mode;
    double accuracy = 0.0;
    double map = 0.0;
    double delta_accuracy = 0.0;  // vs vanilla
    double delta_map = 0.0;
};

struct ComparisonTable {
    std::string dataset_hash;
    std::vector<ModeRow> rows;
    bool has_ordering = false;   // vanilla, te_only and clef rows all present
    bool tie_ge_te = false;      // accuracy(clef) >= accuracy(te_only)
    bool te_ge_vanilla = false;  // accuracy(te_only) >= accuracy(vanilla)
};

// Deltas of each mode against the vanilla row; reports must share a dataset
// hash. Row order follows the input order.
ComparisonTable compare_modes(const std::vector<EvalReport>& reports);

std::string render_text(const ComparisonTable& table);
std::string render_csv(const ComparisonTable& table);
nlohmann::json table_to_json(const ComparisonTable& table);

}  // namespace clef::metrics

#endif  // CLEF_METRICS_HPP
