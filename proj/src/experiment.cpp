#include "neva/experiment.hpp"

#include <fstream>
#include <set>

namespace neva::experiment {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key)) throw ConfigError("unknown key '" + key + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
    }
}

json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path.string());
    try {
        return json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
}

std::string relative_string(const std::filesystem::path& p, const std::filesystem::path& base) {
    if (p.empty()) return "";
    if (base.empty()) return p.string();
    return std::filesystem::proximate(p, base).generic_string();
}

}  // namespace

std::vector<data::SyntheticSample> synthetic_split(const SyntheticSpec& spec, bool train) {
    return data::make_synthetic_dataset(train ? spec.n_train : spec.n_test, spec.seed * 2 + (train ? 0 : 1),
                                        spec.image);
}

json DatasetManifest::to_json(const std::filesystem::path& relative_to) const {
    json j{{"name", name},
           {"image_dir", relative_string(image_dir, relative_to)},
           {"fixation_file", relative_string(fixation_file, relative_to)},
           {"preprocessing", preprocessing}};
    if (synthetic) {
        const auto& s = *synthetic;
        j["synthetic"] = {{"n_train", s.n_train},
                          {"n_test", s.n_test},
                          {"seed", s.seed},
                          {"size", s.image.size},
                          {"channels", s.image.channels},
                          {"subjects", s.humans.subjects},
                          {"human_length", s.humans.length}};
    }
    return j;
}

DatasetManifest DatasetManifest::from_json(const json& j, const std::filesystem::path& base_dir) {
    reject_unknown(j, {"name", "image_dir", "fixation_file", "synthetic", "preprocessing"}, "dataset manifest");
    DatasetManifest m;
    read(j, "name", m.name);
    std::string image_dir, fixation_file;
    read(j, "image_dir", image_dir);
    read(j, "fixation_file", fixation_file);
    if (!image_dir.empty()) m.image_dir = base_dir / image_dir;
    if (!fixation_file.empty()) m.fixation_file = base_dir / fixation_file;
    if (j.contains("preprocessing")) m.preprocessing = j.at("preprocessing");
    if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
        const json& s = j.at("synthetic");
        reject_unknown(s, {"n_train", "n_test", "seed", "size", "channels", "subjects", "human_length"},
                       "dataset manifest 'synthetic'");
        SyntheticSpec spec;
        read(s, "n_train", spec.n_train);
        read(s, "n_test", spec.n_test);
        read(s, "seed", spec.seed);
        read(s, "size", spec.image.size);
        read(s, "channels", spec.image.channels);
        read(s, "subjects", spec.humans.subjects);
        read(s, "human_length", spec.humans.length);
        if (spec.n_train < 1 || spec.n_test < 1) throw ConfigError("synthetic n_train and n_test must be >= 1");
        try {
            spec.image.validate();
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        m.synthetic = spec;
    }
    if (m.image_dir.empty() && !m.synthetic) throw ConfigError("dataset manifest needs image_dir or synthetic");
    return m;
}

DatasetManifest DatasetManifest::load(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("dataset manifest not found: " + path.string());
    return from_json(read_json_file(path), path.parent_path());
}

void DatasetManifest::save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << to_json(path.parent_path()).dump(2) << '\n';
}

void ExperimentConfig::validate() const {
    try {
        grid.validate();
        foveation.validate();
        task.validate();
        attention.validate();
    } catch (const InvalidArgument& e) {
        throw ConfigError(e.what());
    }
    if (length < 1) throw ConfigError("T must be at least 1");
    if (max_k < 1 || max_k > length) throw ConfigError("max_k must lie in [1, T]");
    if (task_input_size < 8) throw ConfigError("task input_size must be at least 8");
    if (!(baselines.sigma_center > 0.0)) throw ConfigError("sigma_center must be positive");
    if (!(baselines.ior_radius > 0.0)) throw ConfigError("ior_radius must be positive");
}

json ExperimentConfig::to_json() const {
    return {
        {"dataset", dataset.generic_string()},
        {"output_dir", output_dir.generic_string()},
        {"seed", seed},
        {"T", length},
        {"max_k", max_k},
        {"grid", {{"rows", grid.rows}, {"cols", grid.cols}}},
        {"truncate_human", truncate_human},
        {"foveation",
         {{"sigma_fovea", foveation.sigma_fovea}, {"sigma_blur", foveation.sigma_blur}, {"gamma", foveation.gamma}}},
        {"task",
         {{"kind", tasks::to_string(task_kind)},
          {"epochs", task.epochs},
          {"batch_size", task.batch_size},
          {"learning_rate", task.learning_rate},
          {"noise_std", task.noise_std},
          {"holdout_fraction", task.holdout_fraction},
          {"input_size", task_input_size},
          {"architecture", task.architecture}}},
        {"attention",
         {{"horizon", attention.horizon},
          {"unroll_depth", attention.unroll_depth},
          {"epochs", attention.epochs},
          {"batch_size", attention.batch_size},
          {"learning_rate", attention.learning_rate},
          {"architecture", attention_architecture}}},
        {"baselines", {{"sigma_center", baselines.sigma_center}, {"ior_radius", baselines.ior_radius}}},
        {"metrics", {{"sbtde_definition", "windowed-hamming-v1"}}},
    };
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    reject_unknown(j,
                   {"dataset", "output_dir", "seed", "T", "max_k", "grid", "truncate_human", "foveation", "task",
                    "attention", "baselines", "metrics"},
                   "config");
    ExperimentConfig c;
    std::string dataset, output_dir = c.output_dir.string();
    read(j, "dataset", dataset);
    read(j, "output_dir", output_dir);
    c.dataset = dataset;
    c.output_dir = output_dir;
    read(j, "seed", c.seed);
    read(j, "T", c.length);
    read(j, "max_k", c.max_k);
    read(j, "truncate_human", c.truncate_human);
    if (j.contains("grid")) {
        reject_unknown(j["grid"], {"rows", "cols"}, "grid");
        read(j["grid"], "rows", c.grid.rows);
        read(j["grid"], "cols", c.grid.cols);
    }
    if (j.contains("foveation")) {
        const json& f = j["foveation"];
        reject_unknown(f, {"sigma_fovea", "sigma_blur", "gamma"}, "foveation");
        read(f, "sigma_fovea", c.foveation.sigma_fovea);
        read(f, "sigma_blur", c.foveation.sigma_blur);
        read(f, "gamma", c.foveation.gamma);
    }
    // Task and attention seeds derive from the experiment seed.
    c.task.seed = c.seed;
    c.attention.seed = c.seed + 1;
    if (j.contains("task")) {
        const json& t = j["task"];
        reject_unknown(t,
                       {"kind", "epochs", "batch_size", "learning_rate", "noise_std", "holdout_fraction",
                        "input_size", "architecture"},
                       "task");
        std::string kind = tasks::to_string(c.task_kind);
        read(t, "kind", kind);
        try {
            c.task_kind = tasks::task_kind_from_string(kind);
        } catch (const InvalidArgument& e) {
            throw ConfigError(e.what());
        }
        read(t, "epochs", c.task.epochs);
        read(t, "batch_size", c.task.batch_size);
        read(t, "learning_rate", c.task.learning_rate);
        read(t, "noise_std", c.task.noise_std);
        read(t, "holdout_fraction", c.task.holdout_fraction);
        read(t, "input_size", c.task_input_size);
        if (t.contains("architecture")) c.task.architecture = t["architecture"];
    }
    if (j.contains("attention")) {
        const json& a = j["attention"];
        reject_unknown(a, {"horizon", "unroll_depth", "epochs", "batch_size", "learning_rate", "architecture"},
                       "attention");
        read(a, "horizon", c.attention.horizon);
        read(a, "unroll_depth", c.attention.unroll_depth);
        read(a, "epochs", c.attention.epochs);
        read(a, "batch_size", c.attention.batch_size);
        read(a, "learning_rate", c.attention.learning_rate);
        if (a.contains("architecture")) c.attention_architecture = a["architecture"];
    }
    if (j.contains("baselines")) {
        reject_unknown(j["baselines"], {"sigma_center", "ior_radius"}, "baselines");
        read(j["baselines"], "sigma_center", c.baselines.sigma_center);
        read(j["baselines"], "ior_radius", c.baselines.ior_radius);
    }
    c.attention.foveation = c.foveation;
    c.validate();
    return c;
}

metrics::EvalConfig ExperimentConfig::eval_config() const {
    return {grid, length, max_k, truncate_human};
}

json read_config_json(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    json j = read_json_file(path);
    if (j.is_object() && j.contains("config") && j.contains("command")) return j.at("config");
    return j;
}

void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key.path=value: " + assignment);
    const std::string key = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    std::string pointer;
    std::size_t start = 0;
    while (true) {
        const auto dot = key.find('.', start);
        pointer += "/" + key.substr(start, dot - start);
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    j[json::json_pointer(pointer)] = value;
}

}  // namespace neva::experiment
