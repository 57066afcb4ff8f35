#include "msse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace msse {

std::int64_t ConfusionMatrix::total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t(0));
}

std::int64_t ConfusionMatrix::trace() const {
    std::int64_t t = 0;
    for (int i = 0; i < num_classes; ++i) t += at(i, i);
    return t;
}

std::int64_t ConfusionMatrix::row_sum(int t) const {
    std::int64_t s = 0;
    for (int p = 0; p < num_classes; ++p) s += at(t, p);
    return s;
}

std::int64_t ConfusionMatrix::col_sum(int p) const {
    std::int64_t s = 0;
    for (int t = 0; t < num_classes; ++t) s += at(t, p);
    return s;
}

ConfusionMatrix confusion(const std::vector<int> &true_labels, const std::vector<int> &pred_labels,
                          int num_classes) {
    if (true_labels.size() != pred_labels.size())
        throw std::invalid_argument("confusion: label vectors differ in length");
    if (num_classes < 1) throw std::invalid_argument("confusion: need at least one class");
    ConfusionMatrix m(num_classes);
    for (std::size_t i = 0; i < true_labels.size(); ++i) {
        const int t = true_labels[i];
        const int p = pred_labels[i];
        if (t < 0 || t >= num_classes || p < 0 || p >= num_classes)
            throw std::invalid_argument("confusion: label outside [0," +
                                        std::to_string(num_classes) + ")");
        ++m.at(t, p);
    }
    return m;
}

MetricsSummary class_metrics(const ConfusionMatrix &m) {
    if (m.num_classes < 1 || m.total() == 0)
        throw std::invalid_argument("class_metrics: empty confusion matrix");
    MetricsSummary s;
    const double total = static_cast<double>(m.total());
    s.accuracy = static_cast<double>(m.trace()) / total;

    double macro_p = 0, macro_r = 0, macro_f = 0;
    double weighted_p = 0, weighted_r = 0, weighted_f = 0;
    for (int k = 0; k < m.num_classes; ++k) {
        const std::int64_t tp = m.at(k, k);
        const std::int64_t fn = m.row_sum(k) - tp;
        const std::int64_t fp = m.col_sum(k) - tp;
        ClassMetric cm;
        cm.support = tp + fn;
        if (tp + fp == 0) {
            cm.precision = 0.0;
            cm.degenerate = true;
        } else {
            cm.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        }
        if (tp + fn == 0) {
            cm.recall = 0.0;
            cm.degenerate = true;
        } else {
            cm.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
        }
        if (cm.precision + cm.recall == 0.0) {
            cm.f1 = 0.0;
            cm.degenerate = true;
        } else {
            cm.f1 = 2.0 * cm.precision * cm.recall / (cm.precision + cm.recall);
        }
        macro_p += cm.precision;
        macro_r += cm.recall;
        macro_f += cm.f1;
        const double weight = static_cast<double>(cm.support) / total;
        weighted_p += weight * cm.precision;
        weighted_r += weight * cm.recall;
        weighted_f += weight * cm.f1;
        s.per_class.push_back(cm);
    }
    s.macro_precision = macro_p / m.num_classes;
    s.macro_recall = macro_r / m.num_classes;
    s.macro_f1 = macro_f / m.num_classes;
    s.weighted_precision = weighted_p;
    s.weighted_recall = weighted_r;
    s.weighted_f1 = weighted_f;
    return s;
}

KappaResult cohen_kappa(const ConfusionMatrix &m) {
    const std::int64_t total = m.total();
    if (total == 0) throw std::invalid_argument("cohen_kappa: empty confusion matrix");
    KappaResult r;
    r.po = static_cast<double>(m.trace()) / static_cast<double>(total);
    double pe = 0.0;
    for (int k = 0; k < m.num_classes; ++k)
        pe += static_cast<double>(m.row_sum(k)) * static_cast<double>(m.col_sum(k));
    r.pe = pe / (static_cast<double>(total) * static_cast<double>(total));
    if (r.pe >= 1.0)
        throw std::domain_error("cohen_kappa: chance agreement is 1 (single-class matrix)");
    r.kappa = (r.po - r.pe) / (1.0 - r.pe);
    return r;
}

Averaging averaging_from_string(const std::string &s) {
    if (s == "micro") return Averaging::micro;
    if (s == "macro") return Averaging::macro;
    throw std::invalid_argument("averaging must be 'micro' or 'macro', got '" + s + "'");
}

std::string to_string(Averaging a) { return a == Averaging::micro ? "micro" : "macro"; }

namespace {

struct ScoredItem {
    double score;
    bool positive;
};

void check_scores(const std::vector<double> &scores, int num_classes,
                  const std::vector<int> &true_labels) {
    if (num_classes < 2) throw std::invalid_argument("curves: need at least two classes");
    if (scores.size() != true_labels.size() * static_cast<std::size_t>(num_classes))
        throw std::invalid_argument("curves: scores must be n x K");
    for (std::size_t r = 0; r < true_labels.size(); ++r) {
        if (true_labels[r] < 0 || true_labels[r] >= num_classes)
            throw std::invalid_argument("curves: label outside [0,K)");
        double sum = 0.0;
        for (int k = 0; k < num_classes; ++k) sum += scores[r * num_classes + k];
        if (std::abs(sum - 1.0) > 1e-3)
            throw std::invalid_argument("curves: score row " + std::to_string(r) +
                                        " sums to " + std::to_string(sum));
    }
}

// Sort descending; threshold steps at distinct scores with ties grouped.
std::vector<ScoredItem> sorted_items(std::vector<ScoredItem> items) {
    std::sort(items.begin(), items.end(), [](const ScoredItem &a, const ScoredItem &b) {
        return a.score > b.score;
    });
    return items;
}

std::pair<std::vector<RocPoint>, double> binary_roc(const std::vector<ScoredItem> &items_in) {
    std::int64_t pos = 0, neg = 0;
    for (const auto &it : items_in) (it.positive ? pos : neg)++;
    if (pos == 0 || neg == 0)
        throw std::invalid_argument("roc_curve: need positives and negatives after binarization");
    const auto items = sorted_items(items_in);
    std::vector<RocPoint> points;
    points.push_back({std::numeric_limits<double>::infinity(), 0.0, 0.0});
    double auc = 0.0;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < items.size()) {
        const double threshold = items[i].score;
        while (i < items.size() && items[i].score == threshold) {
            items[i].positive ? ++tp : ++fp;
            ++i;
        }
        RocPoint pt{threshold, static_cast<double>(fp) / static_cast<double>(neg),
                    static_cast<double>(tp) / static_cast<double>(pos)};
        const RocPoint &prev = points.back();
        auc += (pt.fpr - prev.fpr) * (pt.tpr + prev.tpr) * 0.5;
        points.push_back(pt);
    }
    return {std::move(points), auc};
}

std::pair<std::vector<PrPoint>, double> binary_pr(const std::vector<ScoredItem> &items_in) {
    std::int64_t pos = 0;
    for (const auto &it : items_in) pos += it.positive ? 1 : 0;
    if (pos == 0) throw std::invalid_argument("pr_curve: no positive samples");
    const auto items = sorted_items(items_in);
    std::vector<PrPoint> points;
    double ap = 0.0;
    double prev_recall = 0.0;
    std::int64_t tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < items.size()) {
        const double threshold = items[i].score;
        while (i < items.size() && items[i].score == threshold) {
            items[i].positive ? ++tp : ++fp;
            ++i;
        }
        const double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        const double recall = static_cast<double>(tp) / static_cast<double>(pos);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        points.push_back({threshold, precision, recall});
    }
    return {std::move(points), ap};
}

std::vector<ScoredItem> micro_items(const std::vector<double> &scores, int num_classes,
                                    const std::vector<int> &true_labels) {
    std::vector<ScoredItem> items;
    items.reserve(scores.size());
    for (std::size_t r = 0; r < true_labels.size(); ++r)
        for (int k = 0; k < num_classes; ++k)
            items.push_back({scores[r * num_classes + k], true_labels[r] == k});
    return items;
}

std::vector<ScoredItem> class_items(const std::vector<double> &scores, int num_classes,
                                    const std::vector<int> &true_labels, int k) {
    std::vector<ScoredItem> items;
    items.reserve(true_labels.size());
    for (std::size_t r = 0; r < true_labels.size(); ++r)
        items.push_back({scores[r * num_classes + k], true_labels[r] == k});
    return items;
}

} // namespace

RocCurve roc_curve(const std::vector<double> &scores, int num_classes,
                   const std::vector<int> &true_labels, Averaging averaging) {
    check_scores(scores, num_classes, true_labels);
    RocCurve out;
    if (averaging == Averaging::micro) {
        auto [points, auc] = binary_roc(micro_items(scores, num_classes, true_labels));
        out.points = std::move(points);
        out.auc = auc;
    } else {
        double sum = 0.0;
        for (int k = 0; k < num_classes; ++k) {
            auto [points, auc] = binary_roc(class_items(scores, num_classes, true_labels, k));
            out.per_class_auc.push_back(auc);
            sum += auc;
        }
        out.auc = sum / num_classes;
    }
    return out;
}

PrCurve pr_curve(const std::vector<double> &scores, int num_classes,
                 const std::vector<int> &true_labels, Averaging averaging) {
    check_scores(scores, num_classes, true_labels);
    PrCurve out;
    if (averaging == Averaging::micro) {
        auto [points, ap] = binary_pr(micro_items(scores, num_classes, true_labels));
        out.points = std::move(points);
        out.average_precision = ap;
    } else {
        double sum = 0.0;
        for (int k = 0; k < num_classes; ++k) {
            auto [points, ap] = binary_pr(class_items(scores, num_classes, true_labels, k));
            out.per_class_ap.push_back(ap);
            sum += ap;
        }
        out.average_precision = sum / num_classes;
    }
    return out;
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

} // namespace

void save_roc_csv(const RocCurve &roc, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("roc csv: cannot open " + path + " for writing");
    out << "threshold,fpr,tpr\n";
    for (const auto &p : roc.points)
        out << fmt(p.threshold) << "," << fmt(p.fpr) << "," << fmt(p.tpr) << "\n";
}

void save_pr_csv(const PrCurve &pr, const std::string &path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("pr csv: cannot open " + path + " for writing");
    out << "threshold,precision,recall\n";
    for (const auto &p : pr.points)
        out << fmt(p.threshold) << "," << fmt(p.precision) << "," << fmt(p.recall) << "\n";
}

EvalReport evaluate(const std::vector<int> &true_labels, const std::vector<int> &pred_labels,
                    const std::vector<double> &scores, int num_classes,
                    const std::vector<std::string> &class_names, Averaging averaging) {
    EvalReport report;
    report.cm = confusion(true_labels, pred_labels, num_classes);
    report.cm.class_names = class_names;
    report.metrics = class_metrics(report.cm);
    report.kappa = cohen_kappa(report.cm);
    report.roc = roc_curve(scores, num_classes, true_labels, averaging);
    report.pr = pr_curve(scores, num_classes, true_labels, averaging);
    report.averaging = averaging;
    return report;
}

void save_report_json(const EvalReport &report, const std::string &path) {
    nlohmann::ordered_json j;
    j["num_classes"] = report.cm.num_classes;
    j["class_names"] = report.cm.class_names;
    j["confusion"] = report.cm.counts;
    j["accuracy"] = report.metrics.accuracy;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (const auto &c : report.metrics.per_class) {
        per_class.push_back({{"precision", c.precision},
                             {"recall", c.recall},
                             {"f1", c.f1},
                             {"support", c.support},
                             {"degenerate", c.degenerate}});
    }
    j["per_class"] = per_class;
    j["macro"] = {{"precision", report.metrics.macro_precision},
                  {"recall", report.metrics.macro_recall},
                  {"f1", report.metrics.macro_f1}};
    j["weighted"] = {{"precision", report.metrics.weighted_precision},
                     {"recall", report.metrics.weighted_recall},
                     {"f1", report.metrics.weighted_f1}};
    j["kappa"] = {{"kappa", report.kappa.kappa}, {"po", report.kappa.po}, {"pe", report.kappa.pe}};
    j["averaging"] = to_string(report.averaging);
    j["auc"] = report.roc.auc;
    j["average_precision"] = report.pr.average_precision;
    if (!report.roc.per_class_auc.empty()) j["per_class_auc"] = report.roc.per_class_auc;
    if (!report.pr.per_class_ap.empty()) j["per_class_ap"] = report.pr.per_class_ap;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("report: cannot open " + path + " for writing");
    out << j.dump(2) << "\n";
}

EvalReport load_report_json(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("report: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception &e) {
        throw std::runtime_error("report: " + path + ": " + e.what());
    }
    EvalReport report;
    report.cm.num_classes = j.at("num_classes").get<int>();
    report.cm.class_names = j.at("class_names").get<std::vector<std::string>>();
    report.cm.counts = j.at("confusion").get<std::vector<std::int64_t>>();
    report.metrics.accuracy = j.at("accuracy").get<double>();
    for (const auto &c : j.at("per_class")) {
        ClassMetric cm;
        cm.precision = c.at("precision").get<double>();
        cm.recall = c.at("recall").get<double>();
        cm.f1 = c.at("f1").get<double>();
        cm.support = c.at("support").get<std::int64_t>();
        cm.degenerate = c.at("degenerate").get<bool>();
        report.metrics.per_class.push_back(cm);
    }
    report.metrics.macro_precision = j.at("macro").at("precision").get<double>();
    report.metrics.macro_recall = j.at("macro").at("recall").get<double>();
    report.metrics.macro_f1 = j.at("macro").at("f1").get<double>();
    report.metrics.weighted_precision = j.at("weighted").at("precision").get<double>();
    report.metrics.weighted_recall = j.at("weighted").at("recall").get<double>();
    report.metrics.weighted_f1 = j.at("weighted").at("f1").get<double>();
    report.kappa.kappa = j.at("kappa").at("kappa").get<double>();
    report.kappa.po = j.at("kappa").at("po").get<double>();
    report.kappa.pe = j.at("kappa").at("pe").get<double>();
    report.averaging = averaging_from_string(j.at("averaging").get<std::string>());
    report.roc.auc = j.at("auc").get<double>();
    report.pr.average_precision = j.at("average_precision").get<double>();
    if (j.contains("per_class_auc"))
        report.roc.per_class_auc = j.at("per_class_auc").get<std::vector<double>>();
    if (j.contains("per_class_ap"))
        report.pr.per_class_ap = j.at("per_class_ap").get<std::vector<double>>();
    return report;
}

std::string render_report_table(const EvalReport &report) {
    std::string out;
    char line[160];
    std::snprintf(line, sizeof line, "%-12s %10s %10s %10s %10s\n", "class", "precision",
                  "recall", "f1", "support");
    out += line;
    out += std::string(56, '-') + "\n";
    for (int k = 0; k < report.cm.num_classes; ++k) {
        const auto &c = report.metrics.per_class[static_cast<std::size_t>(k)];
        const std::string name = k < static_cast<int>(report.cm.class_names.size())
                                     ? report.cm.class_names[static_cast<std::size_t>(k)]
                                     : "class" + std::to_string(k);
        std::snprintf(line, sizeof line, "%-12s %10.4f %10.4f %10.4f %10lld%s\n", name.c_str(),
                      c.precision, c.recall, c.f1, static_cast<long long>(c.support),
                      c.degenerate ? "  (degenerate)" : "");
        out += line;
    }
    out += std::string(56, '-') + "\n";
    std::snprintf(line, sizeof line, "%-12s %10.4f %10.4f %10.4f\n", "macro",
                  report.metrics.macro_precision, report.metrics.macro_recall,
                  report.metrics.macro_f1);
    out += line;
    std::snprintf(line, sizeof line, "%-12s %10.4f %10.4f %10.4f\n", "weighted",
                  report.metrics.weighted_precision, report.metrics.weighted_recall,
                  report.metrics.weighted_f1);
    out += line;
    std::snprintf(line, sizeof line, "accuracy %.4f   kappa %.4f (po %.4f, pe %.4f)\n",
                  report.metrics.accuracy, report.kappa.kappa, report.kappa.po, report.kappa.pe);
    out += line;
    std::snprintf(line, sizeof line, "auc (%s) %.6f   average precision %.6f\n",
                  to_string(report.averaging).c_str(), report.roc.auc,
                  report.pr.average_precision);
    out += line;
    return out;
}

} // namespace msse
