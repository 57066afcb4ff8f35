#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace msse {

// K x K integer counts, rows = true class, cols = predicted class.
struct ConfusionMatrix {
    int num_classes = 0;
    std::vector<std::int64_t> counts;
    std::vector<std::string> class_names; // optional, size K when present

    ConfusionMatrix() = default;
    explicit ConfusionMatrix(int k)
        : num_classes(k), counts(static_cast<std::size_t>(k) * k, 0) {}

    std::int64_t &at(int t, int p) { return counts[static_cast<std::size_t>(t) * num_classes + p]; }
    std::int64_t at(int t, int p) const {
        return counts[static_cast<std::size_t>(t) * num_classes + p];
    }
    std::int64_t total() const;
    std::int64_t trace() const;
    std::int64_t row_sum(int t) const;
    std::int64_t col_sum(int p) const;
};

ConfusionMatrix confusion(const std::vector<int> &true_labels, const std::vector<int> &pred_labels,
                          int num_classes);

// One-vs-rest rates per class; 0/0 is defined as 0 and flags the class.
struct ClassMetric {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t support = 0;
    bool degenerate = false; // some rate hit the 0/0 convention
};

struct MetricsSummary {
    std::vector<ClassMetric> per_class;
    double accuracy = 0.0;
    double macro_precision = 0.0, macro_recall = 0.0, macro_f1 = 0.0;
    double weighted_precision = 0.0, weighted_recall = 0.0, weighted_f1 = 0.0;
};

MetricsSummary class_metrics(const ConfusionMatrix &m);

struct KappaResult {
    double kappa = 0.0;
    double po = 0.0; // observed agreement
    double pe = 0.0; // chance agreement from marginals
};

// kappa = (po - pe) / (1 - pe); pe == 1 (single-class degenerate) is an error.
KappaResult cohen_kappa(const ConfusionMatrix &m);

enum class Averaging { micro, macro };

Averaging averaging_from_string(const std::string &s);
std::string to_string(Averaging a);

struct RocPoint {
    double threshold = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::vector<RocPoint> points;      // micro-averaged sweep (empty in macro mode)
    double auc = 0.0;                  // selected averaging
    std::vector<double> per_class_auc; // filled in macro mode
};

struct PrPoint {
    double threshold = 0.0;
    double precision = 0.0;
    double recall = 0.0;
};

struct PrCurve {
    std::vector<PrPoint> points;
    double average_precision = 0.0;
    std::vector<double> per_class_ap;
};

// scores: row-major n x K class probabilities (rows must sum to ~1).
// One-vs-rest binarization; micro pools all (sample, class) pairs; thresholds
// step at distinct score values with ties grouped; AUC by trapezoid.
RocCurve roc_curve(const std::vector<double> &scores, int num_classes,
                   const std::vector<int> &true_labels, Averaging averaging);

// AP = sum over threshold steps of (R_k - R_{k-1}) * P_k.
PrCurve pr_curve(const std::vector<double> &scores, int num_classes,
                 const std::vector<int> &true_labels, Averaging averaging);

void save_roc_csv(const RocCurve &roc, const std::string &path);
void save_pr_csv(const PrCurve &pr, const std::string &path);

struct EvalReport {
    ConfusionMatrix cm;
    MetricsSummary metrics;
    KappaResult kappa;
    RocCurve roc;
    PrCurve pr;
    Averaging averaging = Averaging::micro;
};

EvalReport evaluate(const std::vector<int> &true_labels, const std::vector<int> &pred_labels,
                    const std::vector<double> &scores, int num_classes,
                    const std::vector<std::string> &class_names, Averaging averaging);

void save_report_json(const EvalReport &report, const std::string &path);
EvalReport load_report_json(const std::string &path);

// Fixed-width per-class table plus the aggregate rows, for terminal output.
std::string render_report_table(const EvalReport &report);

} // namespace msse
