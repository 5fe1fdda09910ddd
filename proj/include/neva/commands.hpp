#pragma once

// Command implementations behind the `neva` executable. Each returns a
// process exit code: 0 success, 1 internal error, 2 usage/config error,
// 3 data error.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace neva::cli {

enum ExitCode : int { kOk = 0, kInternalError = 1, kUsageError = 2, kDataError = 3 };

struct CommonOptions {
    std::filesystem::path config;        // config file or a previous command manifest
    std::vector<std::string> overrides;  // "key.path=value"
};

struct MakeSyntheticOptions {
    std::filesystem::path out_dir;
    int n_train = 2000;
    int n_test = 500;
    std::uint64_t seed = 7;
    int size = 32;
    int subjects = 8;
    int human_length = 10;
};

struct TrainAttentionOptions : CommonOptions {
    std::filesystem::path task_checkpoint;
};

struct GenerateOptions : CommonOptions {
    std::string method;  // neva | random | center | wta
    std::filesystem::path attention_checkpoint;
    std::string label;   // name written to the subject_id column; defaults to the method
};

struct EvaluateOptions : CommonOptions {
    std::vector<std::filesystem::path> scanpath_files;
    std::filesystem::path human_file;  // defaults to the dataset's fixation file
};

struct PlotOptions : CommonOptions {
    std::filesystem::path scanpath_file;
    std::string image_id;  // empty: every image in the file
    std::string method;    // empty: every method in the file
};

int cmd_make_synthetic(const MakeSyntheticOptions& opts, std::ostream& log);
int cmd_train_task(const CommonOptions& opts, std::ostream& log);
int cmd_train_attention(const TrainAttentionOptions& opts, std::ostream& log);
int cmd_generate(const GenerateOptions& opts, std::ostream& log);
int cmd_evaluate(const EvaluateOptions& opts, std::ostream& log);
int cmd_plot(const PlotOptions& opts, std::ostream& log);

}  // namespace neva::cli
