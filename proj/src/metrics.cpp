#include "clef/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "clef/errors.hpp"

namespace clef::metrics {

double accuracy(const std::vector<int>& predictions, const std::vector<int>& labels) {
    if (predictions.empty()) throw ValidationError("accuracy: empty input");
    if (predictions.size() != labels.size()) throw ValidationError("accuracy: length mismatch");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i] == labels[i]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

std::optional<double> average_precision(const std::vector<double>& scores,
                                        const std::vector<char>& positives) {
    if (scores.size() != positives.size()) {
        throw ValidationError("average_precision: length mismatch");
    }
    std::size_t n_pos = 0;
    for (char p : positives) {
        if (p) ++n_pos;
    }
    if (n_pos == 0) return std::nullopt;

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    double ap = 0.0;
    double seen_pos = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        if (positives[order[rank]]) {
            seen_pos += 1.0;
            ap += seen_pos / static_cast<double>(rank + 1);
        }
    }
    return ap / static_cast<double>(n_pos);
}

double mean_ap(const std::vector<std::optional<double>>& per_class) {
    double acc = 0.0;
    std::size_t count = 0;
    for (const auto& ap : per_class) {
        if (ap) {
            acc += *ap;
            ++count;
        }
    }
    if (count == 0) throw ValidationError("mean_ap: no evaluable classes");
    return acc / static_cast<double>(count);
}

EvalReport build_report(const std::vector<causal::Scores>& scores,
                        const std::vector<int>& labels,
                        const std::vector<std::vector<int>>& label_sets, std::size_t k,
                        const std::string& mode, const std::string& scorer,
                        const std::string& dataset_hash, std::uint64_t seed) {
    if (scores.empty()) throw ValidationError("build_report: empty score list");
    if (scores.size() != labels.size() || scores.size() != label_sets.size()) {
        throw ValidationError("build_report: length mismatch");
    }
    EvalReport report;
    report.mode = mode;
    report.scorer = scorer;
    report.dataset_hash = dataset_hash;
    report.seed = seed;
    report.n = scores.size();

    std::vector<int> predictions(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].size() != k) throw ValidationError("build_report: score width mismatch");
        predictions[i] = static_cast<int>(causal::argmax(scores[i]));
    }
    report.accuracy = accuracy(predictions, labels);

    report.per_class_accuracy.assign(k, 0.0);
    std::vector<std::size_t> class_counts(k, 0);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        auto label = static_cast<std::size_t>(labels[i]);
        if (label >= k) throw ValidationError("build_report: label out of range");
        ++class_counts[label];
        if (predictions[i] == labels[i]) report.per_class_accuracy[label] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
        if (class_counts[c] > 0) {
            report.per_class_accuracy[c] /= static_cast<double>(class_counts[c]);
        }
    }

    report.per_class_ap.resize(k);
    std::vector<double> class_scores(scores.size());
    std::vector<char> class_pos(scores.size());
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < scores.size(); ++i) {
            class_scores[i] = scores[i][c];
            class_pos[i] = std::find(label_sets[i].begin(), label_sets[i].end(),
                                     static_cast<int>(c)) != label_sets[i].end()
                               ? 1
                               : 0;
        }
        report.per_class_ap[c] = average_precision(class_scores, class_pos);
    }
    report.map = mean_ap(report.per_class_ap);
    return report;
}

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json ap = nlohmann::json::array();
    for (const auto& v : report.per_class_ap) {
        if (v) {
            ap.push_back(*v);
        } else {
            ap.push_back(nullptr);
        }
    }
    return nlohmann::json{
        {"format", "clef-report"},
        {"version", 1},
        {"mode", report.mode},
        {"scorer", report.scorer},
        {"dataset_hash", report.dataset_hash},
        {"seed", report.seed},
        {"n", report.n},
        {"accuracy", report.accuracy},
        {"map", report.map},
        {"per_class_accuracy", report.per_class_accuracy},
        {"per_class_ap", ap},
    };
}

EvalReport report_from_json(const nlohmann::json& j) {
    EvalReport report;
    try {
        if (j.value("format", "") != "clef-report") throw ValidationError("not a clef report");
        report.mode = j.at("mode").get<std::string>();
        report.scorer = j.at("scorer").get<std::string>();
        report.dataset_hash = j.at("dataset_hash").get<std::string>();
        report.seed = j.at("seed").get<std::uint64_t>();
        report.n = j.at("n").get<std::size_t>();
        report.accuracy = j.at("accuracy").get<double>();
        report.map = j.at("map").get<double>();
        report.per_class_accuracy = j.at("per_class_accuracy").get<std::vector<double>>();
        for (const auto& v : j.at("per_class_ap")) {
            if (v.is_null()) {
                report.per_class_ap.emplace_back(std::nullopt);
            } else {
                report.per_class_ap.emplace_back(v.get<double>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(std::string("report json: ") + e.what());
    }
    return report;
}

ComparisonTable compare_modes(const std::vector<EvalReport>& reports) {
    if (reports.empty()) throw ValidationError("compare_modes: no reports");
    ComparisonTable table;
    table.dataset_hash = reports.front().dataset_hash;
    const EvalReport* vanilla = nullptr;
    for (const auto& r : reports) {
        if (r.dataset_hash != table.dataset_hash) {
            throw ValidationError("compare_modes: reports disagree on dataset hash");
        }
        if (r.mode == "vanilla") vanilla = &r;
    }
    const EvalReport* te = nullptr;
    const EvalReport* clef = nullptr;
    for (const auto& r : reports) {
        ModeRow row;
        row.mode = r.mode;
        row.accuracy = r.accuracy;
        row.map = r.map;
        if (vanilla) {
            row.delta_accuracy = r.accuracy - vanilla->accuracy;
            row.delta_map = r.map - vanilla->map;
        }
        table.rows.push_back(row);
        if (r.mode == "te_only") te = &r;
        if (r.mode == "clef") clef = &r;
    }
    if (vanilla && te && clef) {
        table.has_ordering = true;
        table.tie_ge_te = clef->accuracy >= te->accuracy;
        table.te_ge_vanilla = te->accuracy >= vanilla->accuracy;
    }
    return table;
}

std::string render_text(const ComparisonTable& table) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(4);
    out << "mode                accuracy       map   d_acc     d_map\n";
    for (const auto& row : table.rows) {
        out.width(18);
        out.setf(std::ios::left, std::ios::adjustfield);
        out << row.mode;
        out.setf(std::ios::right, std::ios::adjustfield);
        out.width(10);
        out << row.accuracy;
        out.width(10);
        out << row.map;
        out.width(8);
        out << row.delta_accuracy;
        out.width(10);
        out << row.delta_map;
        out << "\n";
    }
    if (table.has_ordering) {
        out << "ordering tie>=te: " << (table.tie_ge_te ? "yes" : "no")
            << ", te>=vanilla: " << (table.te_ge_vanilla ? "yes" : "no") << "\n";
    }
    return out.str();
}

std::string render_csv(const ComparisonTable& table) {
    std::ostringstream out;
    out.setf(std::ios::fixed);
    out.precision(6);
    out << "mode,accuracy,map,delta_accuracy,delta_map\n";
    for (const auto& row : table.rows) {
        out << row.mode << "," << row.accuracy << "," << row.map << "," << row.delta_accuracy
            << "," << row.delta_map << "\n";
    }
    return out.str();
}

nlohmann::json table_to_json(const ComparisonTable& table) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : table.rows) {
        rows.push_back({
            {"mode", row.mode},
            {"accuracy", row.accuracy},
            {"map", row.map},
            {"delta_accuracy", row.delta_accuracy},
            {"delta_map", row.delta_map},
        });
    }
    nlohmann::json j{
        {"format", "clef-comparison"},
        {"version", 1},
        {"dataset_hash", table.dataset_hash},
        {"rows", rows},
    };
    if (table.has_ordering) {
        j["ordering"] = {{"tie_ge_te", table.tie_ge_te}, {"te_ge_vanilla", table.te_ge_vanilla}};
    }
    return j;
}

}  // namespace clef::metrics
