#include "neva/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <tuple>

namespace neva::metrics {

void GridSpec::validate() const {
    if (rows < 1 || cols < 1) throw InvalidArgument("grid rows and cols must be at least 1");
    if (rows * cols < 2) throw InvalidArgument("grid must have at least two cells");
}

int quantize(Fixation f, const GridSpec& grid) {
    const int row = std::clamp(static_cast<int>(std::floor(f.y * grid.rows)), 0, grid.rows - 1);
    const int col = std::clamp(static_cast<int>(std::floor(f.x * grid.cols)), 0, grid.cols - 1);
    return row * grid.cols + col;
}

ScanpathString quantize(const Scanpath& sp, const GridSpec& grid) {
    grid.validate();
    ScanpathString out;
    out.reserve(sp.size());
    for (const Fixation& f : sp.fixations) out.push_back(quantize(f, grid));
    return out;
}

int sed(std::span<const int> a, std::span<const int> b) {
    std::vector<int> prev(b.size() + 1), cur(b.size() + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= b.size(); ++j) {
            const int subst = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, subst});
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

double sbtde(std::span<const int> a, std::span<const int> b, int max_k) {
    const auto n = static_cast<int>(a.size());
    const auto m = static_cast<int>(b.size());
    if (max_k < 1 || max_k > std::min(n, m))
        throw InvalidArgument("max_k must lie in [1, min(len(a), len(b))]");
    // mismatch_run[i][j][k-1]: mismatches between a[i..i+k) and b[j..j+k),
    // built incrementally along each diagonal.
    std::vector<int> run(static_cast<std::size_t>(n) * m, 0);
    double total = 0.0;
    for (int k = 1; k <= max_k; ++k) {
        const int wa = n - k + 1;
        const int wb = m - k + 1;
        double sum = 0.0;
        for (int i = 0; i < wa; ++i) {
            int best = k;
            for (int j = 0; j < wb; ++j) {
                int& r = run[static_cast<std::size_t>(i) * m + j];
                r += a[static_cast<std::size_t>(i + k - 1)] != b[static_cast<std::size_t>(j + k - 1)] ? 1 : 0;
                best = std::min(best, r);
            }
            sum += static_cast<double>(best) / k;
        }
        total += sum / wa;
    }
    return total / max_k;
}

double aggregate_mean(std::span<const double> dists) {
    if (dists.empty()) throw InvalidArgument("cannot aggregate an empty list");
    return std::accumulate(dists.begin(), dists.end(), 0.0) / static_cast<double>(dists.size());
}

double aggregate_spp(std::span<const double> dists) {
    if (dists.empty()) throw InvalidArgument("cannot aggregate an empty list");
    return *std::ranges::min_element(dists);
}

std::string to_string(Metric m) { return m == Metric::sed ? "SED" : "SBTDE"; }
std::string to_string(Aggregation a) { return a == Aggregation::mean ? "Mean" : "SPP"; }

void EvalConfig::validate() const {
    grid.validate();
    if (length < 1) throw InvalidArgument("scanpath length T must be at least 1");
    if (max_k < 1) throw InvalidArgument("max_k must be at least 1");
}

namespace {

ScanpathString prepared(const Scanpath& sp, const EvalConfig& cfg) {
    ScanpathString s = quantize(sp, cfg.grid);
    if (cfg.truncate && s.size() > static_cast<std::size_t>(cfg.length)) s.resize(static_cast<std::size_t>(cfg.length));
    return s;
}

double aggregate(std::span<const double> d, Aggregation a) {
    return a == Aggregation::mean ? aggregate_mean(d) : aggregate_spp(d);
}

constexpr Metric kMetrics[] = {Metric::sed, Metric::sbtde};
constexpr Aggregation kAggregations[] = {Aggregation::mean, Aggregation::spp};

}  // namespace

std::vector<double> distances(const Scanpath& generated, const std::vector<Scanpath>& humans, Metric metric,
                              const EvalConfig& cfg) {
    const ScanpathString g = prepared(generated, cfg);
    std::vector<double> out;
    if (g.empty()) return out;
    for (const Scanpath& h : humans) {
        const ScanpathString s = prepared(h, cfg);
        if (s.empty()) continue;
        if (metric == Metric::sed) {
            out.push_back(sed(g, s));
        } else {
            if (static_cast<int>(g.size()) < cfg.max_k || static_cast<int>(s.size()) < cfg.max_k) continue;
            out.push_back(sbtde(g, s, cfg.max_k));
        }
    }
    return out;
}

std::optional<double> human_baseline(const std::vector<Scanpath>& humans, Metric metric, Aggregation agg,
                                     const EvalConfig& cfg) {
    if (humans.size() < 2) return std::nullopt;
    std::vector<double> scores;
    for (std::size_t i = 0; i < humans.size(); ++i) {
        std::vector<Scanpath> others;
        for (std::size_t j = 0; j < humans.size(); ++j)
            if (j != i) others.push_back(humans[j]);
        const auto d = distances(humans[i], others, metric, cfg);
        if (!d.empty()) scores.push_back(aggregate(d, agg));
    }
    if (scores.empty()) return std::nullopt;
    return aggregate_mean(scores);
}

std::string summary_row_name(Metric m, Aggregation a) { return to_string(a) + " " + to_string(m); }

std::vector<std::string> summary_row_names() {
    std::vector<std::string> out;
    for (Metric m : kMetrics)
        for (Aggregation a : kAggregations) out.push_back(summary_row_name(m, a));
    return out;
}

EvaluationReport evaluate(const std::map<std::string, std::map<std::string, Scanpath>>& methods,
                          const std::map<std::string, std::vector<Scanpath>>& humans, const EvalConfig& cfg,
                          bool include_human) {
    cfg.validate();
    EvaluationReport report;
    std::map<std::string, std::map<std::string, std::vector<double>>> per_image;

    for (const auto& [method, paths] : methods) {
        if (method == kHumanMethod) throw InvalidArgument("method name 'Human' is reserved");
        report.methods.push_back(method);
        for (const auto& [image, path] : paths) {
            const auto it = humans.find(image);
            if (it == humans.end() || it->second.empty()) {
                report.errors.push_back("method " + method + ": image " + image + " has no human scanpaths");
                continue;
            }
            for (Metric m : kMetrics) {
                const auto d = distances(path, it->second, m, cfg);
                if (d.empty()) continue;
                for (Aggregation a : kAggregations) {
                    const double v = aggregate(d, a);
                    report.rows.push_back({image, method, m, a, v});
                    per_image[method][summary_row_name(m, a)].push_back(v);
                }
            }
        }
        for (const auto& [image, recs] : humans)
            if (!paths.contains(image)) report.errors.push_back("method " + method + ": no scanpath for image " + image);
    }

    if (include_human) {
        report.methods.push_back(kHumanMethod);
        for (const auto& [image, recs] : humans) {
            if (recs.size() < 2) {
                report.errors.push_back("human baseline: image " + image + " has fewer than two subjects");
                continue;
            }
            for (Metric m : kMetrics)
                for (Aggregation a : kAggregations) {
                    const auto v = human_baseline(recs, m, a, cfg);
                    if (!v) continue;
                    report.rows.push_back({image, kHumanMethod, m, a, *v});
                    per_image[kHumanMethod][summary_row_name(m, a)].push_back(*v);
                }
        }
    }

    std::ranges::sort(report.rows, [](const ResultRow& x, const ResultRow& y) {
        return std::tie(x.image_id, x.method, x.metric, x.aggregation) <
               std::tie(y.image_id, y.method, y.metric, y.aggregation);
    });
    for (const auto& [method, cells] : per_image)
        for (const auto& [row, values] : cells)
            report.summary[method][row] = {aggregate_mean(values), static_cast<int>(values.size())};
    return report;
}

namespace {

std::string format_value(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

}  // namespace

void write_rows_csv(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "image_id,method,metric,aggregation,value\n";
    for (const ResultRow& r : report.rows)
        out << r.image_id << ',' << r.method << ',' << to_string(r.metric) << ',' << to_string(r.aggregation) << ','
            << format_value(r.value) << '\n';
}

void write_summary_csv(const EvaluationReport& report, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << "metric";
    for (const auto& m : report.methods) out << ',' << m;
    out << '\n';
    for (const auto& row : summary_row_names()) {
        out << row;
        for (const auto& m : report.methods) {
            out << ',';
            const auto mit = report.summary.find(m);
            if (mit == report.summary.end()) continue;
            const auto cit = mit->second.find(row);
            if (cit != mit->second.end()) out << format_value(cit->second.value);
        }
        out << '\n';
    }
}

}  // namespace neva::metrics
