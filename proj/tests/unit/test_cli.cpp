#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "helpers.hpp"
#include "neva/commands.hpp"
#include "neva/data.hpp"

using namespace neva;
using namespace neva::cli;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const fs::path& p) {
    std::ifstream in(p);
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

// Small dataset and a fast configuration shared by the tests below.
struct Workspace {
    fs::path root;
    fs::path data;
    fs::path config;
    std::ostringstream log;

    Workspace() : root(testing::scratch_dir("cli")), data(root / "data"), config(root / "config.json") {
        MakeSyntheticOptions opts;
        opts.out_dir = data;
        opts.n_train = 48;
        opts.n_test = 4;
        opts.subjects = 3;
        REQUIRE(cmd_make_synthetic(opts, log) == kOk);
        const json arch = json::array({{{"type", "conv"}, {"out", 4}},
                                       {{"type", "relu"}},
                                       {{"type", "avgpool"}},
                                       {{"type", "avgpool"}},
                                       {{"type", "dense"}, {"out", 3}}});
        const json att = json::array({{{"type", "avgpool"}}, {{"type", "avgpool"}}, {{"type", "dense"}, {"out", 2}}});
        json cfg{{"dataset", (data / "manifest.json").string()},
                 {"output_dir", (root / "out").string()},
                 {"seed", 3},
                 {"task", {{"epochs", 2}, {"architecture", arch}}},
                 {"attention", {{"epochs", 2}, {"horizon", 2}, {"architecture", att}}}};
        std::ofstream(config) << cfg.dump(2);
    }

    CommonOptions common(std::vector<std::string> overrides = {}) const { return {config, std::move(overrides)}; }
};

Workspace& workspace() {
    static Workspace ws;
    return ws;
}

fs::path trained_task() {
    auto& ws = workspace();
    const auto ckpt = ws.root / "out" / "task.ckpt.json";
    if (!fs::exists(ckpt)) REQUIRE(cmd_train_task(ws.common(), ws.log) == kOk);
    return ckpt;
}

fs::path trained_attention() {
    auto& ws = workspace();
    const auto ckpt = ws.root / "out" / "attention.ckpt.json";
    if (!fs::exists(ckpt)) {
        TrainAttentionOptions opts{ws.common(), trained_task()};
        REQUIRE(cmd_train_attention(opts, ws.log) == kOk);
    }
    return ckpt;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("make-synthetic is reproducible") {
    auto& ws = workspace();
    CHECK(fs::exists(ws.data / "manifest.json"));
    CHECK(lines(ws.data / "fixations.csv").size() == 1 + 4 * 3 * 10);
    std::ostringstream log;
    MakeSyntheticOptions again;
    again.out_dir = ws.root / "data2";
    again.n_train = 48;
    again.n_test = 4;
    again.subjects = 3;
    REQUIRE(cmd_make_synthetic(again, log) == kOk);
    CHECK(slurp(ws.data / "fixations.csv") == slurp(again.out_dir / "fixations.csv"));
    CHECK(slurp(ws.data / "images" / "syn_00002.png") == slurp(again.out_dir / "images" / "syn_00002.png"));
}

TEST_CASE("train-task") {
    auto& ws = workspace();
    const auto ckpt = trained_task();
    const auto log_rows = lines(ws.root / "out" / "task_train_log.csv");
    CHECK(log_rows.size() == 3);
    const json manifest = json::parse(slurp(ws.root / "out" / "manifest_train-task.json"));
    CHECK(manifest.at("command") == "train-task");
    CHECK(manifest.at("config").at("foveation").at("gamma") == 0.3);
    CHECK(manifest.at("results").contains("holdout_accuracy"));

    std::ostringstream log;
    auto rerun = ws.common({"output_dir=" + (ws.root / "rerun_task").string()});
    REQUIRE(cmd_train_task(rerun, log) == kOk);
    CHECK(lines(ws.root / "rerun_task" / "task_train_log.csv") == log_rows);
    CHECK(slurp(ws.root / "rerun_task" / "task.ckpt.json") == slurp(ckpt));

    auto missing = ws.common({"dataset=" + (ws.root / "nowhere" / "manifest.json").string(),
                              "output_dir=" + (ws.root / "missing_out").string()});
    CHECK(cmd_train_task(missing, log) == kUsageError);
    CHECK_FALSE(fs::exists(ws.root / "missing_out" / "task.ckpt.json"));
}

TEST_CASE("train-attention") {
    auto& ws = workspace();
    trained_attention();
    const auto rows = lines(ws.root / "out" / "attention_train_log.csv");
    CHECK(rows.size() == 1 + 2);
    CHECK(rows[0] == "epoch,mean_loss");

    std::ostringstream log;
    TrainAttentionOptions mismatch{ws.common({"task.kind=reconstruction"}), trained_task()};
    CHECK(cmd_train_attention(mismatch, log) == kUsageError);
    TrainAttentionOptions missing{ws.common(), ws.root / "no_task.json"};
    CHECK(cmd_train_attention(missing, log) == kUsageError);
    TrainAttentionOptions zero_t{ws.common({"T=0"}), trained_task()};
    CHECK(cmd_train_attention(zero_t, log) == kUsageError);
}

TEST_CASE("generate") {
    auto& ws = workspace();
    const auto out = ws.root / "out";
    std::ostringstream log;

    GenerateOptions random{ws.common(), "random", {}, {}};
    REQUIRE(cmd_generate(random, log) == kOk);
    const std::string first = slurp(out / "scanpaths_random.csv");
    REQUIRE(cmd_generate(random, log) == kOk);
    CHECK(slurp(out / "scanpaths_random.csv") == first);

    GenerateOptions from_manifest{{out / "manifest_generate-random.json", {}}, {}, {}, {}};
    fs::remove(out / "scanpaths_random.csv");
    REQUIRE(cmd_generate(from_manifest, log) == kOk);
    CHECK(slurp(out / "scanpaths_random.csv") == first);

    GenerateOptions center{ws.common({"baselines.sigma_center=0.2"}), "center", {}, {}};
    REQUIRE(cmd_generate(center, log) == kOk);
    const json m = json::parse(slurp(out / "manifest_generate-center.json"));
    CHECK(m.at("results").at("sigma_center") == 0.2);
    CHECK(m.at("config").at("baselines").at("sigma_center") == 0.2);

    GenerateOptions wta{ws.common(), "wta", {}, {}};
    REQUIRE(cmd_generate(wta, log) == kOk);

    GenerateOptions neva{ws.common(), "neva", trained_attention(), {}};
    // generation must not need the task model
    fs::rename(trained_task(), out / "task.moved");
    REQUIRE(cmd_generate(neva, log) == kOk);
    fs::rename(out / "task.moved", out / "task.ckpt.json");
    const auto file = data::load_fixations(out / "scanpaths_neva.csv");
    CHECK(file.records.size() == 4);
    for (const auto& r : file.records) CHECK(r.fixations.size() == 10);

    GenerateOptions missing{ws.common(), "neva", ws.root / "absent.json", {}};
    CHECK(cmd_generate(missing, log) == kUsageError);
    GenerateOptions unknown{ws.common(), "saliency", {}, {}};
    CHECK(cmd_generate(unknown, log) == kUsageError);
}

TEST_CASE("evaluate") {
    auto& ws = workspace();
    const auto out = ws.root / "out";
    std::ostringstream log;
    GenerateOptions random{ws.common(), "random", {}, {}};
    REQUIRE(cmd_generate(random, log) == kOk);
    GenerateOptions center{ws.common(), "center", {}, {}};
    REQUIRE(cmd_generate(center, log) == kOk);

    EvaluateOptions eval{ws.common(), {out / "scanpaths_random.csv", out / "scanpaths_center.csv"}, {}};
    REQUIRE(cmd_evaluate(eval, log) == kOk);
    const auto summary = lines(out / "results_summary.csv");
    REQUIRE(summary.size() == 5);
    CHECK(summary[0] == "metric,center,random,Human");
    CHECK(summary[1].rfind("Mean SED,", 0) == 0);
    CHECK(summary[4].rfind("SPP SBTDE,", 0) == 0);
    CHECK(lines(out / "results_per_image.csv").size() == 1 + 4 * 3 * 4);

    // the human file scored as a method: each subject finds itself
    EvaluateOptions self{ws.common({"output_dir=" + (ws.root / "self").string()}), {ws.data / "fixations.csv"}, {}};
    REQUIRE(cmd_evaluate(self, log) == kOk);
    const auto rows = lines(ws.root / "self" / "results_summary.csv");
    CHECK(rows[0] == "metric,s00,s01,s02,Human");
    CHECK(rows[2] == "SPP SED,0,0,0," + rows[2].substr(rows[2].rfind(',') + 1));

    const auto foreign = ws.root / "foreign.csv";
    std::ofstream(foreign) << "image_id,subject_id,fixation_index,x_px,y_px,width,height\nzzz,m,0,1,1,32,32\n";
    EvaluateOptions none{ws.common(), {foreign}, {}};
    CHECK(cmd_evaluate(none, log) == kDataError);
    EvaluateOptions nothing{ws.common(), {}, {}};
    CHECK(cmd_evaluate(nothing, log) == kUsageError);
}

TEST_CASE("plot") {
    auto& ws = workspace();
    const auto out = ws.root / "out";
    std::ostringstream log;
    GenerateOptions random{ws.common(), "random", {}, {}};
    REQUIRE(cmd_generate(random, log) == kOk);
    PlotOptions plot{ws.common(), out / "scanpaths_random.csv", "syn_00001", {}};
    REQUIRE(cmd_plot(plot, log) == kOk);
    CHECK(fs::exists(out / "plots" / "syn_00001_random_stimulus.png"));
    CHECK(fs::exists(out / "plots" / "syn_00001_random_heatmap.png"));
    CHECK(fs::exists(out / "plots" / "syn_00001_random_perceived.png"));

    PlotOptions wrong_t{ws.common({"T=4", "max_k=2"}), out / "scanpaths_random.csv", "syn_00001", {}};
    CHECK(cmd_plot(wrong_t, log) == kUsageError);
}

TEST_CASE("executable exit codes") {
    auto& ws = workspace();
    const std::string exe = NEVA_CLI_PATH;
    auto run = [&](const std::string& args) {
        const int status = std::system((exe + " " + args + " >/dev/null 2>&1").c_str());
        return WEXITSTATUS(status);
    };
    CHECK(run("--help") == 0);
    CHECK(run("") == 2);
    CHECK(run("frobnicate") == 2);
    CHECK(run("generate -c " + ws.config.string() + " -m random -o " + (ws.root / "exe").string()) == 0);
    CHECK(fs::exists(ws.root / "exe" / "scanpaths_random.csv"));
    CHECK(run("train-task --dataset " + (ws.root / "nope.json").string()) == 2);
    CHECK(run("--simd bogus generate -c " + ws.config.string() + " -m random") == 2);
}

}
