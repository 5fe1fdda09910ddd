#include "neva/commands.hpp"

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>

#include <nlohmann/json.hpp>

#include "neva/attention.hpp"
#include "neva/baselines.hpp"
#include "neva/data.hpp"
#include "neva/experiment.hpp"
#include "neva/metrics.hpp"
#include "neva/plot.hpp"
#include "neva/simd/kernels.hpp"
#include "neva/synthetic.hpp"

namespace neva::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using experiment::ConfigError;
using experiment::DatasetManifest;
using experiment::ExperimentConfig;

namespace {

constexpr const char* kToolVersion = "1.0.0";

struct Run {
    ExperimentConfig config;
    json arguments = json::object();  // command arguments recorded by a previous run
};

Run resolve(const CommonOptions& opts) {
    json raw = json::object();
    json arguments = json::object();
    if (!opts.config.empty()) {
        if (!fs::exists(opts.config)) throw ConfigError("config file not found: " + opts.config.string());
        std::ifstream in(opts.config);
        json file;
        try {
            file = json::parse(in);
        } catch (const json::parse_error& e) {
            throw ConfigError("cannot parse " + opts.config.string() + ": " + e.what());
        }
        if (file.is_object() && file.contains("command") && file.contains("config")) {
            raw = file.at("config");
            arguments = file.value("arguments", json::object());
        } else {
            raw = file;
        }
    }
    for (const auto& o : opts.overrides) experiment::apply_override(raw, o);
    ExperimentConfig cfg = ExperimentConfig::from_json(raw);
    if (!cfg.dataset.empty()) cfg.dataset = fs::absolute(cfg.dataset).lexically_normal();
    return {std::move(cfg), arguments};
}

std::string arg_or(const std::string& given, const json& recorded, const char* key) {
    if (!given.empty()) return given;
    return recorded.is_object() ? recorded.value(key, std::string()) : std::string();
}

DatasetManifest dataset_of(const ExperimentConfig& cfg) {
    if (cfg.dataset.empty()) throw ConfigError("config has no dataset manifest path");
    return DatasetManifest::load(cfg.dataset);
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::uint64_t mix(std::uint64_t seed, const std::string& id) {
    std::uint64_t z = seed ^ fnv1a(id);
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

void write_manifest(const fs::path& dir, const std::string& command, const ExperimentConfig& cfg,
                    const json& arguments, const std::vector<fs::path>& outputs, const json& results) {
    json out_list = json::array();
    for (const auto& p : outputs) out_list.push_back(p.generic_string());
    json m{{"command", command},
           {"tool_version", kToolVersion},
           {"simd", simd::active().name},
           {"config", cfg.to_json()},
           {"arguments", arguments},
           {"outputs", out_list},
           {"results", results}};
    if (!cfg.dataset.empty() && fs::exists(cfg.dataset)) {
        try {
            m["dataset"] = DatasetManifest::load(cfg.dataset).to_json(cfg.dataset.parent_path());
        } catch (const std::exception&) {
        }
    }
    std::ofstream f(dir / ("manifest_" + command + ".json"));
    if (!f) throw DataError("cannot write manifest in " + dir.string());
    f << m.dump(2) << '\n';
}

// Writes through a temporary name so a failed run leaves no partial file.
void atomic_write(const fs::path& path, const std::function<void(const fs::path&)>& writer) {
    const fs::path tmp = path.string() + ".partial";
    writer(tmp);
    fs::rename(tmp, path);
}

// Evaluation images: the manifest's image folder, or the synthetic test split.
std::map<std::string, Image> evaluation_images(const DatasetManifest& ds, std::ostream& log) {
    if (!ds.image_dir.empty()) {
        auto set = data::load_images(ds.image_dir);
        for (const auto& f : set.failed) log << "warning: skipped unreadable image " << f << '\n';
        return std::move(set.images);
    }
    std::map<std::string, Image> out;
    for (auto& s : experiment::synthetic_split(*ds.synthetic, false))
        out.emplace(s.id, std::move(s.item.stimulus));
    return out;
}

// Training items for the configured task kind.
std::vector<tasks::LabeledStimulus> training_items(const ExperimentConfig& cfg, const DatasetManifest& ds,
                                                   std::ostream& log) {
    if (ds.synthetic) {
        auto items = data::labeled_items(experiment::synthetic_split(*ds.synthetic, true));
        if (cfg.task_kind == tasks::TaskKind::reconstruction)
            for (auto& item : items) item.target = item.stimulus;
        return items;
    }
    if (cfg.task_kind == tasks::TaskKind::classification)
        throw ConfigError("classification training needs a labeled (synthetic) dataset");
    std::vector<tasks::LabeledStimulus> items;
    for (auto& [id, im] : evaluation_images(ds, log)) {
        Image resized = adapt_channels(resize_bilinear(im, cfg.task_input_size, cfg.task_input_size), 3);
        items.push_back({resized, resized});
    }
    if (items.empty()) throw DataError("no training images found in " + ds.image_dir.string());
    return items;
}

template <class Fn>
int guarded(std::ostream& log, Fn&& fn) {
    try {
        return fn();
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kUsageError;
    } catch (const InvalidArgument& e) {
        log << "invalid argument: " << e.what() << '\n';
        return kUsageError;
    } catch (const DataError& e) {
        log << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const std::exception& e) {
        log << "internal error: " << e.what() << '\n';
        return kInternalError;
    }
}

void write_loss_log(const fs::path& path, const std::vector<double>& losses, const char* column) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << "epoch," << column << '\n';
    char buf[64];
    for (std::size_t i = 0; i < losses.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", losses[i]);
        out << i << ',' << buf << '\n';
    }
}

}  // namespace

int cmd_make_synthetic(const MakeSyntheticOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        if (opts.out_dir.empty()) throw ConfigError("--out is required");
        experiment::SyntheticSpec spec;
        spec.n_train = opts.n_train;
        spec.n_test = opts.n_test;
        spec.seed = opts.seed;
        spec.image.size = opts.size;
        spec.humans.subjects = opts.subjects;
        spec.humans.length = opts.human_length;
        if (spec.n_train < 1 || spec.n_test < 1) throw ConfigError("--n-train and --n-test must be >= 1");
        try {
            spec.image.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }

        fs::create_directories(opts.out_dir / "images");
        const auto test = experiment::synthetic_split(spec, false);
        std::vector<data::EyeTrackingRecord> records;
        for (std::size_t i = 0; i < test.size(); ++i) {
            data::save_image(opts.out_dir / "images" / (test[i].id + ".png"), test[i].item.stimulus);
            const auto humans = data::oracle_human_scanpaths(test[i], spec.humans, mix(spec.seed, test[i].id));
            for (std::size_t s = 0; s < humans.size(); ++s) {
                char subject[16];
                std::snprintf(subject, sizeof subject, "s%02zu", s);
                records.push_back(data::denormalize(humans[s], subject, spec.image.size, spec.image.size));
            }
        }
        data::write_records(opts.out_dir / "fixations.csv", records);

        DatasetManifest ds;
        ds.name = "synthetic-quadrant-shapes";
        ds.image_dir = opts.out_dir / "images";
        ds.fixation_file = opts.out_dir / "fixations.csv";
        ds.synthetic = spec;
        ds.preprocessing = {{"images", "8-bit PNG of the synthetic test split"}};
        ds.save(opts.out_dir / "manifest.json");
        log << "wrote " << test.size() << " images and " << records.size() << " human scanpaths to "
            << opts.out_dir.string() << '\n';
        return kOk;
    });
}

int cmd_train_task(const CommonOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Run run = resolve(opts);
        const ExperimentConfig& cfg = run.config;
        const DatasetManifest ds = dataset_of(cfg);
        const auto items = training_items(cfg, ds, log);
        fs::create_directories(cfg.output_dir);

        tasks::TaskTrainLog train_log;
        std::optional<tasks::TaskModel> model;
        if (cfg.task_kind == tasks::TaskKind::classification) {
            model = tasks::train_classifier(items, cfg.task, &train_log);
        } else {
            std::vector<Image> images;
            for (const auto& it : items) images.push_back(it.stimulus);
            model = tasks::train_reconstructor(images, cfg.task, &train_log);
        }
        const fs::path ckpt = cfg.output_dir / "task.ckpt.json";
        const fs::path log_path = cfg.output_dir / "task_train_log.csv";
        atomic_write(ckpt, [&](const fs::path& p) { model->save(p); });
        write_loss_log(log_path, train_log.epoch_loss, "train_loss");
        json results{{"final_train_loss", train_log.epoch_loss.back()}, {"holdout_loss", train_log.holdout_loss}};
        if (cfg.task_kind == tasks::TaskKind::classification) results["holdout_accuracy"] = train_log.holdout_accuracy;
        write_manifest(cfg.output_dir, "train-task", cfg, json::object(), {ckpt, log_path}, results);
        log << "task model written to " << ckpt.string() << " (" << results.dump() << ")\n";
        return kOk;
    });
}

int cmd_train_attention(const TrainAttentionOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Run run = resolve(opts);
        const ExperimentConfig& cfg = run.config;
        const fs::path task_path = arg_or(opts.task_checkpoint.string(), run.arguments, "task_checkpoint");
        if (task_path.empty() || !fs::exists(task_path)) throw ConfigError("task checkpoint not found: " + task_path.string());
        const tasks::TaskModel task = [&] {
            try {
                return tasks::TaskModel::load(task_path);
            } catch (const std::exception& e) {
                throw ConfigError(std::string("unusable task checkpoint: ") + e.what());
            }
        }();
        if (task.kind() != cfg.task_kind)
            throw ConfigError("task checkpoint is a " + tasks::to_string(task.kind()) + " model but the config asks for " +
                              tasks::to_string(cfg.task_kind));
        const DatasetManifest ds = dataset_of(cfg);
        const auto items = training_items(cfg, ds, log);
        fs::create_directories(cfg.output_dir);

        const Image& first = items.front().stimulus;
        auto model = attention::make_attention_model({first.channels(), first.height(), first.width()},
                                                     cfg.attention.seed, cfg.attention_architecture);
        attention::AttentionTrainLog train_log;
        model = attention::train_attention(std::move(model), task, items, cfg.attention, &train_log);

        const fs::path ckpt = cfg.output_dir / "attention.ckpt.json";
        const fs::path log_path = cfg.output_dir / "attention_train_log.csv";
        atomic_write(ckpt, [&](const fs::path& p) { model.save(p); });
        write_loss_log(log_path, train_log.epoch_loss, "mean_loss");
        const json arguments{{"task_checkpoint", task_path.generic_string()}};
        const json results{{"first_epoch_loss", train_log.epoch_loss.front()},
                           {"final_epoch_loss", train_log.epoch_loss.back()}};
        write_manifest(cfg.output_dir, "train-attention", cfg, arguments, {ckpt, log_path}, results);
        log << "attention model written to " << ckpt.string() << " (" << results.dump() << ")\n";
        return kOk;
    });
}

int cmd_generate(const GenerateOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Run run = resolve(opts);
        const ExperimentConfig& cfg = run.config;
        const std::string method = arg_or(opts.method, run.arguments, "method");
        static const std::set<std::string> kMethods{"neva", "random", "center", "wta"};
        if (!kMethods.contains(method)) throw ConfigError("--method must be one of neva, random, center, wta");
        const std::string label = [&] {
            const std::string l = arg_or(opts.label, run.arguments, "label");
            return l.empty() ? method : l;
        }();
        if (label.find(',') != std::string::npos || label == metrics::kHumanMethod)
            throw ConfigError("invalid method label '" + label + "'");

        std::optional<attention::AttentionModel> model;
        fs::path ckpt;
        if (method == "neva") {
            ckpt = arg_or(opts.attention_checkpoint.string(), run.arguments, "attention_checkpoint");
            if (ckpt.empty() || !fs::exists(ckpt)) throw ConfigError("attention checkpoint not found: " + ckpt.string());
            try {
                model = attention::AttentionModel::load(ckpt);
            } catch (const DataError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(std::string("unusable attention checkpoint: ") + e.what());
            }
        }
        const DatasetManifest ds = dataset_of(cfg);
        const auto images = evaluation_images(ds, log);
        if (images.empty()) throw DataError("no images to generate scanpaths for");

        std::vector<Scanpath> paths;
        int degenerate = 0;
        for (const auto& [id, im] : images) {
            Scanpath sp;
            if (method == "neva") {
                sp = attention::generate_scanpath(*model, im, cfg.length, cfg.foveation);
            } else if (method == "random") {
                sp = baselines::random_scanpath(im.height(), im.width(), cfg.length, mix(cfg.seed, id));
            } else if (method == "center") {
                sp = baselines::center_scanpath(im.height(), im.width(), cfg.length, cfg.baselines.sigma_center,
                                                mix(cfg.seed, id));
            } else {
                auto r = baselines::wta_scanpath(baselines::saliency_itti_lite(im), cfg.length, cfg.baselines.ior_radius);
                degenerate += r.degenerate ? 1 : 0;
                sp = std::move(r.scanpath);
            }
            sp.stimulus_id = id;
            paths.push_back(std::move(sp));
        }
        fs::create_directories(cfg.output_dir);
        const fs::path out = cfg.output_dir / ("scanpaths_" + label + ".csv");
        atomic_write(out, [&](const fs::path& p) { data::write_scanpaths(p, label, paths, data::sizes_of(images)); });

        json arguments{{"method", method}, {"label", label}};
        if (!ckpt.empty()) arguments["attention_checkpoint"] = ckpt.generic_string();
        json results{{"images", paths.size()}, {"length", cfg.length}};
        if (method == "center") results["sigma_center"] = cfg.baselines.sigma_center;
        if (method == "wta") {
            results["ior_radius"] = cfg.baselines.ior_radius;
            results["degenerate_saliency_maps"] = degenerate;
        }
        write_manifest(cfg.output_dir, "generate-" + label, cfg, arguments, {out}, results);
        log << "wrote " << paths.size() << " scanpaths to " << out.string() << '\n';
        return kOk;
    });
}

int cmd_evaluate(const EvaluateOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Run run = resolve(opts);
        const ExperimentConfig& cfg = run.config;
        std::vector<fs::path> files = opts.scanpath_files;
        if (files.empty() && run.arguments.contains("scanpaths"))
            for (const auto& f : run.arguments["scanpaths"]) files.emplace_back(f.get<std::string>());
        if (files.empty()) throw ConfigError("no scanpath files given");

        std::optional<DatasetManifest> ds;
        if (!cfg.dataset.empty()) ds = dataset_of(cfg);
        fs::path human_file = arg_or(opts.human_file.string(), run.arguments, "human_file");
        if (human_file.empty() && ds) human_file = ds->fixation_file;
        if (human_file.empty()) throw ConfigError("no human fixation file given");
        if (!fs::exists(human_file)) throw ConfigError("human fixation file not found: " + human_file.string());

        data::ImageSizes sizes;
        if (ds && !ds->image_dir.empty() && fs::is_directory(ds->image_dir))
            sizes = data::sizes_of(data::load_images(ds->image_dir).images);

        const auto human_file_data = data::load_fixations(human_file, sizes);
        if (human_file_data.dropped_out_of_bounds > 0)
            log << "warning: dropped " << human_file_data.dropped_out_of_bounds << " out-of-bounds human fixations\n";
        const auto humans = data::group_by_image(human_file_data.records);

        std::map<std::string, std::map<std::string, Scanpath>> methods;
        for (const auto& f : files) {
            if (!fs::exists(f)) throw ConfigError("scanpath file not found: " + f.string());
            const auto file = data::load_fixations(f, sizes);
            for (const auto& rec : file.records) {
                if (rec.subject_id == metrics::kHumanMethod) throw DataError("method name 'Human' is reserved");
                auto& slot = methods[rec.subject_id][rec.image_id];
                const Scanpath sp = data::normalize_record(rec);
                slot.stimulus_id = sp.stimulus_id;
                slot.fixations.insert(slot.fixations.end(), sp.fixations.begin(), sp.fixations.end());
            }
        }
        bool overlap = false;
        for (const auto& [m, paths] : methods)
            for (const auto& [id, sp] : paths) overlap = overlap || humans.contains(id);
        if (!overlap) throw DataError("no image ids shared between scanpath files and human records");

        const auto report = metrics::evaluate(methods, humans, cfg.eval_config());
        fs::create_directories(cfg.output_dir);
        const fs::path rows = cfg.output_dir / "results_per_image.csv";
        const fs::path summary = cfg.output_dir / "results_summary.csv";
        metrics::write_rows_csv(report, rows.string());
        metrics::write_summary_csv(report, summary.string());
        std::vector<fs::path> outputs{rows, summary};
        if (!report.errors.empty()) {
            const fs::path err = cfg.output_dir / "evaluation_errors.txt";
            std::ofstream e(err);
            for (const auto& line : report.errors) e << line << '\n';
            outputs.push_back(err);
            log << "warning: " << report.errors.size() << " evaluation issues, see " << err.string() << '\n';
        }
        json arguments{{"human_file", human_file.generic_string()}, {"scanpaths", json::array()}};
        for (const auto& f : files) arguments["scanpaths"].push_back(f.generic_string());
        json results = json::object();
        for (const auto& [method, cells] : report.summary)
            for (const auto& [row, cell] : cells) results[method][row] = cell.value;
        write_manifest(cfg.output_dir, "evaluate", cfg, arguments, outputs, results);
        std::ifstream s(summary);
        log << s.rdbuf();
        return kOk;
    });
}

int cmd_plot(const PlotOptions& opts, std::ostream& log) {
    return guarded(log, [&] {
        const Run run = resolve(opts);
        const ExperimentConfig& cfg = run.config;
        const fs::path file = arg_or(opts.scanpath_file.string(), run.arguments, "scanpaths");
        if (file.empty() || !fs::exists(file)) throw ConfigError("scanpath file not found: " + file.string());
        const std::string only_image = arg_or(opts.image_id, run.arguments, "image_id");
        const std::string only_method = arg_or(opts.method, run.arguments, "method");

        const DatasetManifest ds = dataset_of(cfg);
        const auto images = evaluation_images(ds, log);
        const auto loaded = data::load_fixations(file, data::sizes_of(images));

        std::vector<fs::path> outputs;
        for (const auto& rec : loaded.records) {
            if (!only_image.empty() && rec.image_id != only_image) continue;
            if (!only_method.empty() && rec.subject_id != only_method) continue;
            const auto it = images.find(rec.image_id);
            if (it == images.end()) throw DataError("no stimulus for image " + rec.image_id);
            const Scanpath sp = data::normalize_record(rec);
            if (static_cast<int>(sp.size()) != cfg.length)
                throw ConfigError("scanpath for " + rec.image_id + " has " + std::to_string(sp.size()) +
                                  " fixations, expected T = " + std::to_string(cfg.length));
            const auto panels = plot::render_panels(it->second, sp, cfg.foveation);
            for (auto& p : plot::write_panels(panels, cfg.output_dir / "plots", rec.image_id + "_" + rec.subject_id))
                outputs.push_back(std::move(p));
        }
        if (outputs.empty()) throw DataError("nothing to plot: no matching scanpaths");
        json arguments{{"scanpaths", file.generic_string()}, {"image_id", only_image}, {"method", only_method}};
        write_manifest(cfg.output_dir, "plot", cfg, arguments, outputs, {{"panels", outputs.size()}});
        log << "wrote " << outputs.size() << " panels to " << (cfg.output_dir / "plots").string() << '\n';
        return kOk;
    });
}

}  // namespace neva::cli
