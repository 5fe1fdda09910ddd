#pragma once

// Scanpath similarity against human data. Scanpaths are quantized on a
// regular grid into symbol strings and compared with the string-edit
// distance (SED) and the string-based time-delay-embedding distance (SBTDE).
// Scores over several human subjects are aggregated either as a mean or as
// scanpath plausibility (SPP, the closest subject only). Lower is better.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "neva/image.hpp"

namespace neva::metrics {

struct GridSpec {
    int rows = 5;
    int cols = 5;

    void validate() const;
    int cells() const noexcept { return rows * cols; }
};

using ScanpathString = std::vector<int>;

ScanpathString quantize(const Scanpath& sp, const GridSpec& grid);
int quantize(Fixation f, const GridSpec& grid);

// Levenshtein distance with unit insertion, deletion and substitution costs.
int sed(std::span<const int> a, std::span<const int> b);

// For k = 1..max_k: mean over the length-k windows x of `a` of the smallest
// normalized Hamming distance between x and any length-k window of `b`;
// returns the mean over k. Directional: `a` is the generated scanpath.
double sbtde(std::span<const int> a, std::span<const int> b, int max_k);

double aggregate_mean(std::span<const double> dists);
double aggregate_spp(std::span<const double> dists);

enum class Metric { sed, sbtde };
enum class Aggregation { mean, spp };

std::string to_string(Metric m);
std::string to_string(Aggregation a);

struct EvalConfig {
    GridSpec grid;
    int length = 10;      // T: human scanpaths are truncated to this many fixations
    int max_k = 5;        // SBTDE embedding depth
    bool truncate = true;

    void validate() const;
};

// Distance of one generated scanpath to each usable human scanpath; an
// empty result means no human scanpath could be compared.
std::vector<double> distances(const Scanpath& generated, const std::vector<Scanpath>& humans, Metric metric,
                              const EvalConfig& cfg);

// Leave-one-out human consistency for one image: every subject is scored
// against the others and the per-subject scores are averaged. nullopt when
// fewer than two subjects are usable.
std::optional<double> human_baseline(const std::vector<Scanpath>& humans, Metric metric, Aggregation agg,
                                     const EvalConfig& cfg);

struct ResultRow {
    std::string image_id;
    std::string method;
    Metric metric;
    Aggregation aggregation;
    double value;
};

struct SummaryCell {
    double value = 0.0;
    int images = 0;
};

struct EvaluationReport {
    std::vector<ResultRow> rows;  // sorted by image id, method, metric, aggregation
    // method -> "Mean SED" | "SPP SED" | "Mean SBTDE" | "SPP SBTDE" -> dataset average
    std::map<std::string, std::map<std::string, SummaryCell>> summary;
    std::vector<std::string> methods;  // column order, "Human" last
    std::vector<std::string> errors;
};

inline const char* kHumanMethod = "Human";

// Row labels of the dataset summary, in display order.
std::vector<std::string> summary_row_names();
std::string summary_row_name(Metric m, Aggregation a);

// method name -> image id -> generated scanpath; image id -> human scanpaths.
EvaluationReport evaluate(const std::map<std::string, std::map<std::string, Scanpath>>& methods,
                          const std::map<std::string, std::vector<Scanpath>>& humans, const EvalConfig& cfg,
                          bool include_human = true);

void write_rows_csv(const EvaluationReport& report, const std::string& path);
void write_summary_csv(const EvaluationReport& report, const std::string& path);

}  // namespace neva::metrics
