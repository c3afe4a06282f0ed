#include "qfs/evaluation.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "qfs/util.hpp"

namespace qfs {

ConfusionMatrix confusion(std::span<const int> y_true, std::span<const int> y_pred) {
    if (y_true.size() != y_pred.size()) {
        throw ReportError("y_true has " + std::to_string(y_true.size()) + " labels, y_pred has " +
                          std::to_string(y_pred.size()));
    }
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const int t = y_true[i];
        const int p = y_pred[i];
        if ((t != 0 && t != 1) || (p != 0 && p != 1)) throw ReportError("labels must be 0 or 1");
        if (t == 1) {
            (p == 1 ? cm.tp : cm.fn)++;
        } else {
            (p == 1 ? cm.fp : cm.tn)++;
        }
    }
    return cm;
}

double accuracy(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ReportError("accuracy of an empty prediction set");
    return static_cast<double>(cm.tp + cm.tn) / static_cast<double>(cm.total());
}

namespace {

// 2PR/(P+R) written as 2tp/(2tp+fp+fn); 0 when the class never appears on either side.
double class_f1(std::size_t tp, std::size_t fp, std::size_t fn) {
    const auto denom = 2 * tp + fp + fn;
    return tp == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
}

}  // namespace

double binary_f1(const ConfusionMatrix& cm) { return class_f1(cm.tp, cm.fp, cm.fn); }

double weighted_f1(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ReportError("F1 of an empty prediction set");
    const double n = static_cast<double>(cm.total());
    const double f1_pos = class_f1(cm.tp, cm.fp, cm.fn);
    const double f1_neg = class_f1(cm.tn, cm.fn, cm.fp);
    return static_cast<double>(cm.tp + cm.fn) / n * f1_pos +
           static_cast<double>(cm.tn + cm.fp) / n * f1_neg;
}

double weighted_f1(std::span<const int> y_true, std::span<const int> y_pred) {
    return weighted_f1(confusion(y_true, y_pred));
}

std::string_view to_string(Variant v) {
    switch (v) {
        case Variant::all_features: return "all_features";
        case Variant::classical: return "classical";
        case Variant::remote: return "remote";
    }
    return "unknown";
}

Variant variant_from_string(std::string_view s) {
    if (s == "all_features") return Variant::all_features;
    if (s == "classical") return Variant::classical;
    if (s == "remote") return Variant::remote;
    throw ReportError("unknown variant '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------

void EvaluationReport::validate() const {
    if (selected_features > original_features) {
        throw ReportError("selected_features (" + std::to_string(selected_features) +
                          ") exceeds original_features (" + std::to_string(original_features) + ")");
    }
    if (selected_names.size() != selected_features) {
        throw ReportError("selected feature names do not match selected_features");
    }
    if (sampling_time_ms.has_value() == (variant == Variant::all_features)) {
        throw ReportError("sampling_time_ms must be present exactly for solver variants");
    }
    if (sampling_time_ms && !(*sampling_time_ms >= 0.0)) {
        throw ReportError("sampling_time_ms must be non-negative");
    }
    for (double m : {accuracy, f1, binary_f1}) {
        if (!(m >= 0.0 && m <= 1.0)) throw ReportError("metrics must lie in [0, 1]");
    }
    if (evaluation_skipped && (selected_features != 0 || accuracy != 0.0 || f1 != 0.0)) {
        throw ReportError("a skipped evaluation carries no selection or metrics");
    }
}

EvaluationReport build_report(const ReportInputs& in) {
    EvaluationReport r;
    r.dataset = in.dataset;
    r.variant = in.variant;
    r.solver = in.solver;
    r.original_features = in.original_features;
    r.selected_features = in.selected_names.size();
    r.selected_names = in.selected_names;
    r.sampling_time_ms = in.sampling_time_ms;
    r.seed = in.seed;
    r.repeat = in.repeat;
    r.split_fingerprint = in.split_fingerprint;
    r.config_hash = in.config_hash;
    r.evaluation_skipped = in.evaluation_skipped;
    if (!in.evaluation_skipped) {
        auto cm = confusion(in.y_true, in.y_pred);
        r.accuracy = accuracy(cm);
        r.f1 = weighted_f1(cm);
        r.binary_f1 = binary_f1(cm);
    }
    r.validate();
    return r;
}

nlohmann::json to_json(const EvaluationReport& r) {
    nlohmann::json j = {{"dataset", r.dataset},
                        {"variant", to_string(r.variant)},
                        {"solver", r.solver},
                        {"original_features", r.original_features},
                        {"selected_features", r.selected_features},
                        {"selected", r.selected_names},
                        {"accuracy", r.accuracy},
                        {"f1", r.f1},
                        {"binary_f1", r.binary_f1},
                        {"sampling_time_ms", nullptr},
                        {"seed", r.seed},
                        {"repeat", r.repeat},
                        {"evaluation_skipped", r.evaluation_skipped},
                        {"split_fingerprint", r.split_fingerprint},
                        {"config_hash", r.config_hash}};
    if (r.sampling_time_ms) j["sampling_time_ms"] = *r.sampling_time_ms;
    return j;
}

EvaluationReport report_from_json(const nlohmann::json& j) {
    try {
        EvaluationReport r;
        r.dataset = j.at("dataset").get<std::string>();
        r.variant = variant_from_string(j.at("variant").get<std::string>());
        r.solver = j.at("solver").get<std::string>();
        r.original_features = j.at("original_features").get<std::size_t>();
        r.selected_features = j.at("selected_features").get<std::size_t>();
        r.selected_names = j.at("selected").get<std::vector<std::string>>();
        r.accuracy = j.at("accuracy").get<double>();
        r.f1 = j.at("f1").get<double>();
        r.binary_f1 = j.at("binary_f1").get<double>();
        if (!j.at("sampling_time_ms").is_null()) r.sampling_time_ms = j["sampling_time_ms"].get<double>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.repeat = j.at("repeat").get<std::size_t>();
        r.evaluation_skipped = j.at("evaluation_skipped").get<bool>();
        r.split_fingerprint = j.at("split_fingerprint").get<std::string>();
        r.config_hash = j.at("config_hash").get<std::string>();
        r.validate();
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw ReportError(std::string("malformed report JSON: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// CSV

namespace {

constexpr const char* kSummaryColumns[] = {
    "dataset", "variant",  "original_features",  "selected_features", "accuracy",
    "f1",      "sampling_time_ms", "seed",       "solver",            "repeat",
    "evaluation_skipped", "binary_f1", "split_fingerprint", "config_hash", "selected"};
constexpr std::size_t kSummaryColumnCount = std::size(kSummaryColumns);

template <class T>
T parse_integer(std::string_view s, std::string_view column) {
    T v{};
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ReportError("bad integer '" + std::string(s) + "' in column " + std::string(column));
    }
    return v;
}

double parse_real(std::string_view s, std::string_view column) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) {
        throw ReportError("bad number '" + std::string(s) + "' in column " + std::string(column));
    }
    return v;
}

std::string join(const std::vector<std::string>& parts, char sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// Names joined by ';' with '\\' escaping '\\' and ';'.
std::string join_names(const std::vector<std::string>& names) {
    std::string out;
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i) out += ';';
        for (char ch : names[i]) {
            if (ch == ';' || ch == '\\') out += '\\';
            out += ch;
        }
    }
    return out;
}

std::vector<std::string> split_names(std::string_view s) {
    std::vector<std::string> out;
    if (s.empty()) return out;
    std::string cur;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\\' && i + 1 < s.size()) {
            cur += s[++i];
        } else if (s[i] == ';') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += s[i];
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string column_label(const EvaluationReport& r) {
    return r.variant == Variant::all_features ? "All Features" : r.solver;
}

std::string row_label(const EvaluationReport& r) {
    return r.repeat == 0 ? r.dataset : r.dataset + "#" + std::to_string(r.repeat);
}

std::string fixed2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

}  // namespace

std::string summary_csv(std::span<const EvaluationReport> reports) {
    std::string out;
    for (std::size_t c = 0; c < kSummaryColumnCount; ++c) {
        if (c) out += ',';
        out += kSummaryColumns[c];
    }
    out += '\n';
    for (const auto& r : reports) {
        const bool skipped = r.evaluation_skipped;
        std::vector<std::string> cells = {
            csv_escape(r.dataset),
            std::string(to_string(r.variant)),
            std::to_string(r.original_features),
            std::to_string(r.selected_features),
            skipped ? "" : format_double(r.accuracy),
            skipped ? "" : format_double(r.f1),
            r.sampling_time_ms ? format_double(*r.sampling_time_ms) : "",
            std::to_string(r.seed),
            csv_escape(r.solver),
            std::to_string(r.repeat),
            skipped ? "true" : "false",
            skipped ? "" : format_double(r.binary_f1),
            csv_escape(r.split_fingerprint),
            csv_escape(r.config_hash),
            csv_escape(join_names(r.selected_names)),
        };
        out += join(cells, ',');
        out += '\n';
    }
    return out;
}

std::vector<EvaluationReport> parse_summary_csv(std::string_view text) {
    std::vector<std::vector<std::string>> records;
    try {
        records = split_csv_records(text, ',');
    } catch (const std::runtime_error& e) {
        throw ReportError(e.what());
    }
    if (records.empty()) throw ReportError("summary CSV has no header");
    const auto& header = records.front();
    if (header.size() != kSummaryColumnCount ||
        !std::equal(header.begin(), header.end(), std::begin(kSummaryColumns))) {
        throw ReportError("summary CSV header does not match the expected columns");
    }
    std::vector<EvaluationReport> out;
    for (std::size_t i = 1; i < records.size(); ++i) {
        const auto& c = records[i];
        if (c.size() != kSummaryColumnCount) {
            throw ReportError("summary CSV row " + std::to_string(i) + " has wrong field count");
        }
        EvaluationReport r;
        r.dataset = c[0];
        r.variant = variant_from_string(c[1]);
        r.original_features = parse_integer<std::size_t>(c[2], "original_features");
        r.selected_features = parse_integer<std::size_t>(c[3], "selected_features");
        r.evaluation_skipped = c[10] == "true";
        if (!r.evaluation_skipped) {
            r.accuracy = parse_real(c[4], "accuracy");
            r.f1 = parse_real(c[5], "f1");
            r.binary_f1 = parse_real(c[11], "binary_f1");
        }
        if (!c[6].empty()) r.sampling_time_ms = parse_real(c[6], "sampling_time_ms");
        r.seed = parse_integer<std::uint64_t>(c[7], "seed");
        r.solver = c[8];
        r.repeat = parse_integer<std::size_t>(c[9], "repeat");
        r.split_fingerprint = c[12];
        r.config_hash = c[13];
        r.selected_names = split_names(c[14]);
        r.validate();
        out.push_back(std::move(r));
    }
    return out;
}

std::string timing_csv(std::span<const EvaluationReport> reports) {
    std::vector<std::string> labels;
    std::vector<std::string> rows;
    std::map<std::pair<std::string, std::string>, double> times;
    for (const auto& r : reports) {
        if (!r.sampling_time_ms) continue;
        auto label = column_label(r);
        if (std::ranges::find(labels, label) == labels.end()) labels.push_back(label);
        auto row = row_label(r);
        if (std::ranges::find(rows, row) == rows.end()) rows.push_back(row);
        times[{row, label}] = *r.sampling_time_ms;
    }
    std::string out = "Datasets";
    for (const auto& l : labels) out += "," + csv_escape(l);
    out += '\n';
    for (const auto& row : rows) {
        out += csv_escape(row);
        for (const auto& l : labels) {
            out += ',';
            if (auto it = times.find({row, l}); it != times.end()) out += format_double(it->second);
        }
        out += '\n';
    }
    return out;
}

std::string summary_markdown(std::span<const EvaluationReport> reports) {
    std::vector<std::string> labels;
    std::vector<std::string> rows;
    std::map<std::pair<std::string, std::string>, const EvaluationReport*> cell;
    for (const auto& r : reports) {
        auto label = column_label(r);
        if (std::ranges::find(labels, label) == labels.end()) labels.push_back(label);
        auto row = row_label(r);
        if (std::ranges::find(rows, row) == rows.end()) rows.push_back(row);
        cell[{row, label}] = &r;
    }
    auto find = [&](const std::string& row, const std::string& label) -> const EvaluationReport* {
        auto it = cell.find({row, label});
        return it == cell.end() ? nullptr : it->second;
    };

    std::ostringstream md;
    md << "## Original vs. Selected Features\n\n| Dataset | Original |";
    std::vector<std::string> solver_labels;
    for (const auto& l : labels) {
        if (l != "All Features") solver_labels.push_back(l);
    }
    for (const auto& l : solver_labels) md << ' ' << l << " |";
    md << "\n|---|---|";
    for (std::size_t i = 0; i < solver_labels.size(); ++i) md << "---|";
    md << '\n';
    for (const auto& row : rows) {
        std::size_t original = 0;
        for (const auto& l : labels) {
            if (auto* r = find(row, l)) original = r->original_features;
        }
        md << "| " << row << " | " << original << " |";
        for (const auto& l : solver_labels) {
            auto* r = find(row, l);
            md << ' ' << (r ? std::to_string(r->selected_features) : "-") << " |";
        }
        md << '\n';
    }

    md << "\n## Accuracy and F1\n\n| Dataset |";
    for (const auto& l : labels) md << ' ' << l << " ACC | " << l << " F1 |";
    md << "\n|---|";
    for (std::size_t i = 0; i < labels.size(); ++i) md << "---|---|";
    md << '\n';
    for (const auto& row : rows) {
        // Ties are judged on the rendered value so every visually equal best is bold.
        double best_acc = -1.0;
        double best_f1 = -1.0;
        for (const auto& l : labels) {
            if (auto* r = find(row, l); r && !r->evaluation_skipped) {
                best_acc = std::max(best_acc, std::stod(fixed2(r->accuracy)));
                best_f1 = std::max(best_f1, std::stod(fixed2(r->f1)));
            }
        }
        md << "| " << row << " |";
        for (const auto& l : labels) {
            auto* r = find(row, l);
            if (!r || r->evaluation_skipped) {
                md << " skipped | skipped |";
                continue;
            }
            auto acc = fixed2(r->accuracy);
            auto f1 = fixed2(r->f1);
            md << ' ' << (std::stod(acc) == best_acc ? "**" + acc + "**" : acc) << " | "
               << (std::stod(f1) == best_f1 ? "**" + f1 + "**" : f1) << " |";
        }
        md << '\n';
    }
    return md.str();
}

}  // namespace qfs
