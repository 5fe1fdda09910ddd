#include "neva/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

namespace neva::data {

namespace {

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) out.push_back(trim(field));
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

bool parse_double(const std::string& s, double& v) {
    if (s.empty()) return false;
    char* end = nullptr;
    v = std::strtod(s.c_str(), &end);
    return end == s.c_str() + s.size() && std::isfinite(v);
}

bool parse_int(const std::string& s, int& v) {
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return ec == std::errc() && ptr == s.data() + s.size();
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

FixationFile parse_fixations(std::istream& in, const ImageSizes& sizes) {
    std::string line;
    if (!std::getline(in, line)) throw DataError("fixation file is empty (header row required)");
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto header = split(line);
    auto column = [&](const std::string& name) -> int {
        const auto it = std::ranges::find(header, name);
        return it == header.end() ? -1 : static_cast<int>(it - header.begin());
    };
    const int c_image = column("image_id"), c_subject = column("subject_id"), c_index = column("fixation_index"),
              c_x = column("x_px"), c_y = column("y_px"), c_w = column("width"), c_h = column("height");
    if (c_image < 0 || c_subject < 0 || c_index < 0 || c_x < 0 || c_y < 0)
        throw DataError("fixation file header must contain image_id,subject_id,fixation_index,x_px,y_px");

    FixationFile file;
    std::map<std::pair<std::string, std::string>, std::size_t> slot;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        ++file.rows;
        const auto f = split(line);
        auto fail = [&](std::string msg) { file.errors.push_back({line_no, std::move(msg)}); };
        if (f.size() < header.size()) {
            fail("expected " + std::to_string(header.size()) + " fields, got " + std::to_string(f.size()));
            continue;
        }
        const std::string& image = f[static_cast<std::size_t>(c_image)];
        const std::string& subject = f[static_cast<std::size_t>(c_subject)];
        int index = 0;
        double x = 0.0, y = 0.0;
        if (image.empty() || subject.empty()) {
            fail("empty image_id or subject_id");
            continue;
        }
        if (!parse_int(f[static_cast<std::size_t>(c_index)], index) || index < 0) {
            fail("fixation_index must be a non-negative integer");
            continue;
        }
        if (!parse_double(f[static_cast<std::size_t>(c_x)], x) || !parse_double(f[static_cast<std::size_t>(c_y)], y)) {
            fail("x_px and y_px must be finite numbers");
            continue;
        }
        int width = 0, height = 0;
        if (c_w >= 0 && c_h >= 0 && !f[static_cast<std::size_t>(c_w)].empty()) {
            if (!parse_int(f[static_cast<std::size_t>(c_w)], width) ||
                !parse_int(f[static_cast<std::size_t>(c_h)], height) || width < 1 || height < 1) {
                fail("width and height must be positive integers");
                continue;
            }
        } else if (const auto it = sizes.find(image); it != sizes.end()) {
            height = it->second.first;
            width = it->second.second;
        } else {
            fail("unknown size for image " + image);
            continue;
        }

        auto key = std::make_pair(image, subject);
        auto it = slot.find(key);
        if (it == slot.end()) {
            it = slot.emplace(key, file.records.size()).first;
            file.records.push_back({image, subject, {}, height, width});
        }
        EyeTrackingRecord& rec = file.records[it->second];
        if (rec.height != height || rec.width != width) {
            fail("inconsistent image size for " + image);
            continue;
        }
        if (x < 0.0 || x >= width || y < 0.0 || y >= height) {
            ++file.dropped_out_of_bounds;
            continue;
        }
        rec.fixations.push_back({x, y});
    }
    if (file.rows > 0 && file.errors.size() * 10 > file.rows)
        throw DataError("fixation file rejected: " + std::to_string(file.errors.size()) + " of " +
                        std::to_string(file.rows) + " rows are invalid (first: line " +
                        std::to_string(file.errors.front().line) + ": " + file.errors.front().message + ")");
    std::erase_if(file.records, [](const EyeTrackingRecord& r) { return r.fixations.empty(); });
    return file;
}

FixationFile load_fixations(const std::filesystem::path& path, const ImageSizes& sizes) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open fixation file " + path.string());
    return parse_fixations(in, sizes);
}

Scanpath normalize_record(const EyeTrackingRecord& record) {
    Scanpath sp;
    sp.stimulus_id = record.image_id;
    for (const PixelPoint& p : record.fixations)
        sp.fixations.push_back({std::clamp(p.x / record.width, 0.0, 1.0), std::clamp(p.y / record.height, 0.0, 1.0)});
    return sp;
}

EyeTrackingRecord denormalize(const Scanpath& sp, const std::string& subject_id, int height, int width) {
    EyeTrackingRecord r{sp.stimulus_id, subject_id, {}, height, width};
    // Keep x < W and y < H so a fixation at exactly 1.0 survives re-loading.
    const double max_x = std::nextafter(static_cast<double>(width), 0.0);
    const double max_y = std::nextafter(static_cast<double>(height), 0.0);
    for (const Fixation& f : sp.fixations)
        r.fixations.push_back({std::min(f.x * width, max_x), std::min(f.y * height, max_y)});
    return r;
}

std::map<std::string, std::vector<Scanpath>> group_by_image(const std::vector<EyeTrackingRecord>& records) {
    std::map<std::string, std::vector<Scanpath>> out;
    for (const auto& r : records) out[r.image_id].push_back(normalize_record(r));
    return out;
}

namespace {

void write_header(std::ostream& out) { out << "image_id,subject_id,fixation_index,x_px,y_px,width,height\n"; }

void write_record(std::ostream& out, const EyeTrackingRecord& r) {
    for (std::size_t i = 0; i < r.fixations.size(); ++i)
        out << r.image_id << ',' << r.subject_id << ',' << i << ',' << format_double(r.fixations[i].x) << ','
            << format_double(r.fixations[i].y) << ',' << r.width << ',' << r.height << '\n';
}

}  // namespace

void write_scanpaths(std::ostream& out, const std::string& method, const std::vector<Scanpath>& paths,
                     const ImageSizes& sizes) {
    write_header(out);
    for (const Scanpath& sp : paths) {
        const auto it = sizes.find(sp.stimulus_id);
        if (it == sizes.end()) throw DataError("no image size for scanpath of " + sp.stimulus_id);
        write_record(out, denormalize(sp, method, it->second.first, it->second.second));
    }
}

void write_scanpaths(const std::filesystem::path& path, const std::string& method,
                     const std::vector<Scanpath>& paths, const ImageSizes& sizes) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_scanpaths(out, method, paths, sizes);
}

void write_records(const std::filesystem::path& path, const std::vector<EyeTrackingRecord>& records) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    write_header(out);
    for (const auto& r : records) write_record(out, r);
}

Image load_image(const std::filesystem::path& path) {
    cv::Mat raw = cv::imread(path.string(), cv::IMREAD_UNCHANGED);
    if (raw.empty()) throw DataError("cannot decode image " + path.string());
    double scale = 1.0;
    switch (raw.depth()) {
        case CV_8U: scale = 1.0 / 255.0; break;
        case CV_16U: scale = 1.0 / 65535.0; break;
        case CV_32F:
        case CV_64F: scale = 1.0; break;
        default: throw DataError("unsupported pixel depth in " + path.string());
    }
    cv::Mat rgb;
    switch (raw.channels()) {
        case 1: rgb = raw; break;
        case 3: cv::cvtColor(raw, rgb, cv::COLOR_BGR2RGB); break;
        case 4: cv::cvtColor(raw, rgb, cv::COLOR_BGRA2RGB); break;
        default: throw DataError("unsupported channel count in " + path.string());
    }
    cv::Mat values;
    rgb.convertTo(values, CV_64F, scale);
    const int channels = values.channels();
    Image out(values.rows, values.cols, channels);
    for (int y = 0; y < values.rows; ++y) {
        const double* row = values.ptr<double>(y);
        for (int x = 0; x < values.cols; ++x)
            for (int c = 0; c < channels; ++c)
                out.at(y, x, c) = std::clamp(row[x * channels + c], 0.0, 1.0);
    }
    return out;
}

ImageSet load_images(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw DataError("image directory not found: " + dir.string());
    static const std::vector<std::string> kExtensions{".png", ".jpg", ".jpeg", ".bmp", ".pgm", ".ppm", ".tif", ".tiff"};
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        std::string ext = entry.path().extension().string();
        std::ranges::transform(ext, ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (std::ranges::find(kExtensions, ext) != kExtensions.end()) files.push_back(entry.path());
    }
    std::ranges::sort(files);
    ImageSet set;
    for (const auto& file : files) {
        try {
            set.images.emplace(file.stem().string(), load_image(file));
        } catch (const DataError&) {
            set.failed.push_back(file.string());
        }
    }
    return set;
}

void save_image(const std::filesystem::path& path, const Image& image) {
    const int type = image.channels() == 1 ? CV_8UC1 : CV_8UC3;
    if (image.channels() != 1 && image.channels() != 3) throw InvalidArgument("can only save 1 or 3 channel images");
    cv::Mat m(image.height(), image.width(), type);
    for (int y = 0; y < image.height(); ++y) {
        auto* row = m.ptr<unsigned char>(y);
        for (int x = 0; x < image.width(); ++x)
            for (int c = 0; c < image.channels(); ++c) {
                // OpenCV stores BGR.
                const int dst = image.channels() == 3 ? 2 - c : 0;
                row[x * image.channels() + dst] =
                    static_cast<unsigned char>(std::lround(std::clamp(image.at(y, x, c), 0.0, 1.0) * 255.0));
            }
    }
    if (!cv::imwrite(path.string(), m)) throw DataError("cannot write image " + path.string());
}

ImageSizes sizes_of(const std::map<std::string, Image>& images) {
    ImageSizes out;
    for (const auto& [id, im] : images) out[id] = {im.height(), im.width()};
    return out;
}

}  // namespace neva::data
