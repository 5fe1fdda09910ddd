#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "neva/commands.hpp"
#include "neva/simd/kernels.hpp"

namespace {

using namespace neva::cli;

void add_common(CLI::App* cmd, CommonOptions& opts, std::string& dataset, std::string& out) {
    cmd->add_option("-c,--config", opts.config, "config file (JSON) or a manifest written by a previous run");
    cmd->add_option("--set", opts.overrides, "override a config value, e.g. --set attention.epochs=3");
    cmd->add_option("--dataset", dataset, "dataset manifest path");
    cmd->add_option("-o,--out", out, "output directory");
}

void fold_shortcuts(CommonOptions& opts, const std::string& dataset, const std::string& out) {
    if (!dataset.empty()) opts.overrides.push_back("dataset=" + dataset);
    if (!out.empty()) opts.overrides.push_back("output_dir=" + out);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"NeVA: task-driven neural visual attention scanpaths"};
    app.require_subcommand(1);
    std::string simd_name;
    app.add_option("--simd", simd_name, "force a kernel set (scalar, avx2)");

    MakeSyntheticOptions synth;
    auto* make_synth = app.add_subcommand("make-synthetic", "write the synthetic quadrant-shapes dataset");
    make_synth->add_option("-o,--out", synth.out_dir, "output folder")->required();
    make_synth->add_option("--n-train", synth.n_train);
    make_synth->add_option("--n-test", synth.n_test);
    make_synth->add_option("--seed", synth.seed);
    make_synth->add_option("--size", synth.size, "image side in pixels");
    make_synth->add_option("--subjects", synth.subjects, "oracle human scanpaths per image");
    make_synth->add_option("--human-length", synth.human_length);

    CommonOptions task;
    std::string task_ds, task_out;
    auto* train_task = app.add_subcommand("train-task", "train the task model");
    add_common(train_task, task, task_ds, task_out);

    TrainAttentionOptions att;
    std::string att_ds, att_out;
    auto* train_att = app.add_subcommand("train-attention", "train the attention model against a frozen task model");
    add_common(train_att, att, att_ds, att_out);
    train_att->add_option("--task", att.task_checkpoint, "task checkpoint");

    GenerateOptions gen;
    std::string gen_ds, gen_out;
    auto* generate = app.add_subcommand("generate", "generate scanpaths for every image of the dataset");
    add_common(generate, gen, gen_ds, gen_out);
    generate->add_option("-m,--method", gen.method, "neva, random, center or wta");
    generate->add_option("--attention", gen.attention_checkpoint, "attention checkpoint (method neva)");
    generate->add_option("--label", gen.label, "method name written to the output file");

    EvaluateOptions eval;
    std::string eval_ds, eval_out;
    auto* evaluate = app.add_subcommand("evaluate", "score scanpath files against human fixations");
    add_common(evaluate, eval, eval_ds, eval_out);
    evaluate->add_option("scanpaths", eval.scanpath_files, "scanpath files");
    evaluate->add_option("--humans", eval.human_file, "human fixation file");

    PlotOptions plt;
    std::string plot_ds, plot_out;
    auto* plot = app.add_subcommand("plot", "render stimulus, foveation heatmap and final perceived image");
    add_common(plot, plt, plot_ds, plot_out);
    plot->add_option("scanpaths", plt.scanpath_file, "scanpath file");
    plot->add_option("--image", plt.image_id, "only this image id");
    plot->add_option("--method", plt.method, "only this method");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kOk : kUsageError;
    }

    if (!simd_name.empty() && !neva::simd::select(simd_name)) {
        std::cerr << "unknown or unsupported kernel set '" << simd_name << "'\n";
        return kUsageError;
    }

    if (*make_synth) return cmd_make_synthetic(synth, std::cerr);
    if (*train_task) {
        fold_shortcuts(task, task_ds, task_out);
        return cmd_train_task(task, std::cerr);
    }
    if (*train_att) {
        fold_shortcuts(att, att_ds, att_out);
        return cmd_train_attention(att, std::cerr);
    }
    if (*generate) {
        fold_shortcuts(gen, gen_ds, gen_out);
        return cmd_generate(gen, std::cerr);
    }
    if (*evaluate) {
        fold_shortcuts(eval, eval_ds, eval_out);
        return cmd_evaluate(eval, std::cerr);
    }
    fold_shortcuts(plt, plot_ds, plot_out);
    return cmd_plot(plt, std::cerr);
}
