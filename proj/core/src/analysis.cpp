#include "wicked/analysis.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace wicked {

using json = nlohmann::json;

double accuracy(const EvalRun& run) {
    if (run.items.empty()) throw std::invalid_argument("accuracy of an empty run");
    size_t correct = 0;
    for (const auto& item : run.items) correct += item.correct ? 1 : 0;
    return static_cast<double>(correct) / static_cast<double>(run.items.size());
}

std::pair<double, double> aggregate_variants(const std::vector<EvalRun>& runs) {
    if (runs.size() < 2) {
        throw std::invalid_argument("aggregation needs at least two variant runs");
    }
    std::set<std::uint64_t> seeds;
    for (const auto& run : runs) {
        if (run.dataset_name != runs.front().dataset_name ||
            run.model_name != runs.front().model_name ||
            run.mode != runs.front().mode) {
            throw std::invalid_argument(
                "variant runs disagree on benchmark, model, or mode");
        }
        if (!run.variant_seed || !seeds.insert(*run.variant_seed).second) {
            throw std::invalid_argument(
                "variant runs must carry distinct variant seeds");
        }
    }
    double mean = 0.0;
    std::vector<double> accs;
    accs.reserve(runs.size());
    for (const auto& run : runs) {
        accs.push_back(accuracy(run));
        mean += accs.back();
    }
    mean /= static_cast<double>(accs.size());
    double ss = 0.0;
    for (double a : accs) ss += (a - mean) * (a - mean);
    double std_dev = std::sqrt(ss / static_cast<double>(accs.size() - 1));
    return {mean, std_dev};
}

double compute_delta(double original, double wicked_mean) {
    if (original < 0.0 || original > 1.0 || wicked_mean < 0.0 || wicked_mean > 1.0) {
        throw std::invalid_argument("accuracies must lie in [0, 1]");
    }
    return wicked_mean - original;
}

TransitionMatrix transition_matrix(const EvalRun& original, const EvalRun& wicked) {
    if (original.dataset_name != wicked.dataset_name ||
        original.model_name != wicked.model_name || original.mode != wicked.mode) {
        throw std::invalid_argument(
            "transition runs disagree on benchmark, model, or mode");
    }
    std::unordered_map<std::string, bool> original_correct;
    for (const auto& item : original.items) {
        original_correct[item.example_id] = item.correct;
    }
    TransitionMatrix m;
    m.benchmark = original.dataset_name;
    m.model = original.model_name;
    for (const auto& item : wicked.items) {
        auto it = original_correct.find(item.example_id);
        if (it == original_correct.end()) continue;
        if (it->second) {
            (item.correct ? m.cc : m.cw) += 1;
        } else {
            (item.correct ? m.wc : m.ww) += 1;
        }
    }
    if (m.total() == 0) {
        throw std::invalid_argument("runs share no example ids");
    }
    return m;
}

RunReport make_run_report(const EvalRun& original,
                          const std::vector<EvalRun>& wicked) {
    RunReport report;
    report.benchmark = original.dataset_name;
    report.model = original.model_name;
    report.mode = original.mode;
    report.original_accuracy = accuracy(original);
    for (const auto& run : wicked) report.variant_accuracies.push_back(accuracy(run));
    auto [mean, std_dev] = aggregate_variants(wicked);
    report.wicked_mean = mean;
    report.wicked_std = std_dev;
    report.delta = compute_delta(report.original_accuracy, report.wicked_mean);
    return report;
}

namespace {

// Fractions are stored as-is; tables render x100 with one decimal.
std::string pct(double fraction) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(1) << fraction * 100.0;
    return out.str();
}

json report_to_json(const RunReport& r) {
    json j;
    j["benchmark"] = r.benchmark;
    j["model"] = r.model;
    j["mode"] = mode_name(r.mode);
    j["original_accuracy"] = r.original_accuracy;
    j["variant_accuracies"] = r.variant_accuracies;
    j["wicked_mean"] = r.wicked_mean;
    j["wicked_std"] = r.wicked_std;
    j["delta"] = r.delta;
    return j;
}

RunReport report_from_json(const json& j) {
    RunReport r;
    r.benchmark = j.at("benchmark").get<std::string>();
    r.model = j.at("model").get<std::string>();
    r.mode = mode_from_name(j.at("mode").get<std::string>());
    r.original_accuracy = j.at("original_accuracy").get<double>();
    r.variant_accuracies = j.at("variant_accuracies").get<std::vector<double>>();
    r.wicked_mean = j.at("wicked_mean").get<double>();
    r.wicked_std = j.at("wicked_std").get<double>();
    r.delta = j.at("delta").get<double>();
    return r;
}

} // namespace

std::string render_table(const std::vector<RunReport>& reports) {
    std::ostringstream out;
    out << std::left << std::setw(28) << "Model" << std::setw(10) << "Mode"
        << std::setw(12) << "Original" << std::setw(12) << "WiCkeD"
        << "Delta\n";
    out << std::string(74, '-') << '\n';
    for (const auto& r : reports) {
        out << std::left << std::setw(28) << r.model << std::setw(10)
            << mode_name(r.mode) << std::setw(12) << pct(r.original_accuracy)
            << std::setw(12) << pct(r.wicked_mean) << pct(r.delta) << " +/- "
            << pct(r.wicked_std) << '\n';
    }
    return out.str();
}

void emit_report(const std::vector<RunReport>& reports,
                 const std::vector<TransitionMatrix>& matrices,
                 const std::string& dir) {
    if (reports.empty()) throw std::invalid_argument("no reports to emit");
    std::filesystem::create_directories(dir);
    auto path = [&](const char* name) {
        return (std::filesystem::path(dir) / name).string();
    };

    {
        std::ofstream out(path("reports.jsonl"), std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write reports.jsonl in " + dir);
        for (const auto& r : reports) out << report_to_json(r).dump() << '\n';
    }
    {
        std::ofstream out(path("table.txt"), std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write table.txt in " + dir);
        out << render_table(reports);
    }
    {
        std::ofstream out(path("transitions.txt"), std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write transitions.txt in " + dir);
        for (const auto& m : matrices) {
            out << m.benchmark << " / " << m.model << ": "
                << "correct->correct " << m.cc << ", correct->wrong " << m.cw
                << ", wrong->correct " << m.wc << ", wrong->wrong " << m.ww
                << " (total " << m.total() << ")\n";
        }
    }
}

std::vector<RunReport> parse_reports(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read reports file: " + path);
    std::vector<RunReport> reports;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        reports.push_back(report_from_json(json::parse(line)));
    }
    return reports;
}

} // namespace wicked
