#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "neva/metrics.hpp"

using namespace neva;
using namespace neva::metrics;

namespace {

int edit_oracle(const std::vector<int>& a, std::size_t i, const std::vector<int>& b, std::size_t j) {
    if (i == a.size()) return static_cast<int>(b.size() - j);
    if (j == b.size()) return static_cast<int>(a.size() - i);
    if (a[i] == b[j]) return edit_oracle(a, i + 1, b, j + 1);
    return 1 + std::min({edit_oracle(a, i + 1, b, j), edit_oracle(a, i, b, j + 1), edit_oracle(a, i + 1, b, j + 1)});
}

double sbtde_oracle(const std::vector<int>& a, const std::vector<int>& b, int max_k) {
    double total = 0.0;
    for (int k = 1; k <= max_k; ++k) {
        double sum = 0.0;
        int count = 0;
        for (std::size_t i = 0; i + k <= a.size(); ++i) {
            double best = 1.0;
            for (std::size_t j = 0; j + k <= b.size(); ++j) {
                int diff = 0;
                for (int p = 0; p < k; ++p) diff += a[i + p] != b[j + p];
                best = std::min(best, static_cast<double>(diff) / k);
            }
            sum += best;
            ++count;
        }
        total += sum / count;
    }
    return total / max_k;
}

std::vector<std::vector<int>> all_strings(int max_len, int alphabet) {
    std::vector<std::vector<int>> out{{}};
    std::vector<std::vector<int>> frontier{{}};
    for (int len = 1; len <= max_len; ++len) {
        std::vector<std::vector<int>> next;
        for (const auto& s : frontier)
            for (int c = 0; c < alphabet; ++c) {
                auto t = s;
                t.push_back(c);
                next.push_back(t);
            }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

std::vector<int> chars(const std::string& s) { return {s.begin(), s.end()}; }

Scanpath path(std::initializer_list<Fixation> f) { return {"", f}; }

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("grid quantization") {
    const GridSpec g;
    CHECK(quantize(Fixation{0.0, 0.0}, g) == 0);
    CHECK(quantize(Fixation{1.0, 1.0}, g) == 24);
    CHECK(quantize(Fixation{0.55, 0.15}, g) == 2);
    CHECK(quantize(Fixation{0.15, 0.55}, g) == 10);
    CHECK(quantize(Fixation{0.2, 0.0}, g) == 1);
    const GridSpec wide{2, 3};
    CHECK(quantize(Fixation{0.9, 0.6}, wide) == 5);
    const auto s = quantize(path({{0.1, 0.1}, {0.9, 0.9}}), g);
    CHECK(s == ScanpathString{0, 24});
    CHECK_THROWS_AS((GridSpec{1, 1}.validate()), InvalidArgument);
    CHECK_THROWS_AS((GridSpec{0, 5}.validate()), InvalidArgument);
}

TEST_CASE("edit distance equals the recursive oracle on every short string pair") {
    const auto strings = all_strings(4, 3);
    CHECK(strings.size() == 121);
    for (const auto& a : strings)
        for (const auto& b : strings) REQUIRE(sed(a, b) == edit_oracle(a, 0, b, 0));
}

TEST_CASE("edit distance examples") {
    CHECK(sed(chars("kitten"), chars("sitting")) == 3);
    CHECK(sed(chars("flaw"), chars("lawn")) == 2);
    CHECK(sed(chars("abc"), chars("abc")) == 0);
    CHECK(sed(chars("abcde"), {}) == 5);
    CHECK(sed({}, chars("ab")) == 2);
}

TEST_CASE("sbtde equals exhaustive substring enumeration") {
    std::mt19937_64 rng(61);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<int> a(10), b(10);
        for (int& v : a) v = static_cast<int>(rng() % 6);
        for (int& v : b) v = static_cast<int>(rng() % 6);
        for (int k : {1, 3, 5}) CHECK(sbtde(a, b, k) == doctest::Approx(sbtde_oracle(a, b, k)).epsilon(1e-14));
    }
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<int> a(3 + rng() % 9), b(3 + rng() % 9);
        for (int& v : a) v = static_cast<int>(rng() % 3);
        for (int& v : b) v = static_cast<int>(rng() % 3);
        CHECK(sbtde(a, b, 3) == doctest::Approx(sbtde_oracle(a, b, 3)).epsilon(1e-14));
    }
}

TEST_CASE("sbtde examples") {
    const std::vector<int> a{0, 1, 2, 3}, b{1, 2, 3, 0};
    // k=1: every symbol of a appears in b -> 0
    // k=2: windows 01,12,23 vs 12,23,30 -> 01 differs in both places from all three,
    // 12 and 23 match exactly -> (1 + 0 + 0) / 3
    CHECK(sbtde(a, b, 2) == doctest::Approx((0.0 + 1.0 / 3.0) / 2.0));
    CHECK(sbtde(a, a, 4) == 0.0);
    CHECK(sbtde(std::vector{1, 1, 1}, std::vector{2, 3, 4}, 3) == 1.0);
    CHECK_THROWS_AS(sbtde(a, b, 0), InvalidArgument);
    CHECK_THROWS_AS(sbtde(a, b, 5), InvalidArgument);
}

TEST_CASE("aggregation") {
    const std::vector<double> d{2.0, 4.0};
    CHECK(aggregate_mean(d) == 3.0);
    CHECK(aggregate_spp(d) == 2.0);
    CHECK(aggregate_mean(std::vector{1.5}) == 1.5);
    CHECK(aggregate_spp(std::vector{1.5}) == 1.5);
    CHECK(aggregate_mean(std::vector{0.7, 0.7, 0.7}) == doctest::Approx(aggregate_spp(std::vector{0.7, 0.7, 0.7})));
    CHECK_THROWS_AS(aggregate_mean(std::vector<double>{}), InvalidArgument);
    CHECK_THROWS_AS(aggregate_spp(std::vector<double>{}), InvalidArgument);
    std::mt19937_64 rng(62);
    std::uniform_real_distribution<double> u(0, 10);
    for (int i = 0; i < 500; ++i) {
        std::vector<double> v(1 + rng() % 12);
        for (double& x : v) x = u(rng);
        CHECK(aggregate_spp(v) <= aggregate_mean(v));
    }
}

TEST_CASE("human leave-one-out") {
    EvalConfig cfg;
    cfg.grid = {2, 2};
    cfg.length = 3;
    cfg.max_k = 1;
    const auto tl = Fixation{0.25, 0.25}, tr = Fixation{0.75, 0.25}, bl = Fixation{0.25, 0.75}, br = Fixation{0.75, 0.75};
    // strings: A=0,1,3  B=0,1,2  C=3,2,1
    const std::vector<Scanpath> hs{path({tl, tr, br}), path({tl, tr, bl}), path({br, bl, tr})};
    // A: d(A,B)=1, d(A,C)=3 -> mean 2, spp 1
    // B: d(B,A)=1, d(B,C)=3 -> mean 2, spp 1
    // C: d(C,A)=3, d(C,B)=3 -> mean 3, spp 3
    CHECK(*human_baseline(hs, Metric::sed, Aggregation::mean, cfg) == doctest::Approx(7.0 / 3.0));
    CHECK(*human_baseline(hs, Metric::sed, Aggregation::spp, cfg) == doctest::Approx(5.0 / 3.0));

    const std::vector<Scanpath> same{path({tl, br}), path({tl, br}), path({tl, br})};
    CHECK(*human_baseline(same, Metric::sed, Aggregation::mean, cfg) == 0.0);
    CHECK(*human_baseline(same, Metric::sbtde, Aggregation::mean, cfg) == 0.0);
    CHECK_FALSE(human_baseline({path({tl})}, Metric::sed, Aggregation::mean, cfg).has_value());

    const std::vector<Scanpath> pair{hs[0], hs[2]}, flipped{hs[2], hs[0]};
    CHECK(*human_baseline(pair, Metric::sed, Aggregation::mean, cfg) ==
          *human_baseline(flipped, Metric::sed, Aggregation::mean, cfg));
}

TEST_CASE("truncation of human scanpaths") {
    EvalConfig cfg;
    cfg.length = 2;
    cfg.max_k = 1;
    const Scanpath gen = path({{0.1, 0.1}, {0.9, 0.9}});
    const std::vector<Scanpath> human{path({{0.1, 0.1}, {0.9, 0.9}, {0.5, 0.5}, {0.5, 0.1}})};
    CHECK(distances(gen, human, Metric::sed, cfg) == std::vector<double>{0.0});
    cfg.truncate = false;
    CHECK(distances(gen, human, Metric::sed, cfg) == std::vector<double>{2.0});
}

TEST_CASE("two-image toy evaluation") {
    EvalConfig cfg;
    cfg.grid = {2, 2};
    cfg.length = 3;
    cfg.max_k = 2;
    const auto tl = Fixation{0.25, 0.25}, tr = Fixation{0.75, 0.25}, bl = Fixation{0.25, 0.75}, br = Fixation{0.75, 0.75};
    std::map<std::string, std::vector<Scanpath>> humans{
        {"a", {path({tl, tr, br}), path({tl, bl, br})}},  // 0,1,3 and 0,2,3
        {"b", {path({br, br, br}), path({tl, tr, tl})}},  // 3,3,3 and 0,1,0
    };
    std::map<std::string, std::map<std::string, Scanpath>> methods{
        {"m", {{"a", path({tl, tr, br})}, {"b", path({tr, tr, tr})}}},  // 0,1,3 and 1,1,1
    };
    const auto report = evaluate(methods, humans, cfg);
    CHECK(report.errors.empty());
    CHECK(report.methods == std::vector<std::string>{"m", "Human"});

    // image a, m=013: SED to 013 = 0, to 023 = 1 -> Mean 0.5, SPP 0
    //   SBTDE to 013 = 0; to 023: k=1 {0,1,3} vs {0,2,3} -> 1/3, k=2 {01,13} vs {02,23} -> (1/2+1/2)/2 -> (1/3+1/2)/2 = 5/12
    // image b, m=111: SED to 333 = 3, to 010 = 2 -> Mean 2.5, SPP 2
    //   SBTDE to 333 = 1; to 010: k=1 all match 1 -> 0, k=2 {11,11} vs {01,10} -> 1/2 -> 1/4
    const auto cell = [&](const std::string& m, const std::string& row) { return report.summary.at(m).at(row).value; };
    CHECK(cell("m", "Mean SED") == doctest::Approx((0.5 + 2.5) / 2));
    CHECK(cell("m", "SPP SED") == doctest::Approx((0.0 + 2.0) / 2));
    CHECK(cell("m", "Mean SBTDE") == doctest::Approx((5.0 / 24.0 + 5.0 / 8.0) / 2));
    CHECK(cell("m", "SPP SBTDE") == doctest::Approx((0.0 + 0.25) / 2));
    // Human a: 013 vs 023 both ways -> SED 1, SBTDE 5/12; b: 333 vs 010 -> SED 3, SBTDE 1
    CHECK(cell("Human", "Mean SED") == doctest::Approx(2.0));
    CHECK(cell("Human", "Mean SBTDE") == doctest::Approx((5.0 / 12.0 + 1.0) / 2));
    CHECK(report.rows.size() == 16);

    const auto dir = testing::scratch_dir("metrics_csv");
    write_summary_csv(report, (dir / "s.csv").string());
    std::ifstream in(dir / "s.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    CHECK(header == "metric,m,Human");
    CHECK(first == "Mean SED,1.5,2");
}

TEST_CASE("evaluation errors and identity") {
    EvalConfig cfg;
    cfg.max_k = 2;
    const Scanpath s1 = path({{0.1, 0.1}, {0.5, 0.5}, {0.9, 0.1}}), s2 = path({{0.9, 0.9}, {0.1, 0.9}, {0.5, 0.5}});
    std::map<std::string, std::vector<Scanpath>> humans{{"x", {s1, s2}}, {"y", {s2}}};
    std::map<std::string, std::map<std::string, Scanpath>> methods{{"copy", {{"x", s1}, {"z", s2}}}};
    const auto report = evaluate(methods, humans, cfg);
    CHECK(report.errors.size() == 3);  // z has no humans, y has no scanpath, y has one subject
    for (const auto& r : report.rows)
        if (r.method == "copy" && r.aggregation == Aggregation::spp) CHECK(r.value == 0.0);
    std::map<std::string, std::map<std::string, Scanpath>> reserved{{"Human", {{"x", s1}}}};
    CHECK_THROWS_AS(evaluate(reserved, humans, cfg), InvalidArgument);
}

}
