#pragma once

// Eye-tracking records, scanpath files and image folders.
//
// Fixation / scanpath files are UTF-8 comma-separated text with a header row:
//
//   image_id,subject_id,fixation_index,x_px,y_px[,width,height]
//
// one row per fixation, in order. Generated scanpaths use the same layout
// with the method name in the subject_id column, so human data, NeVA,
// baselines and external competitors all share one format. When the
// optional width/height columns are absent, image sizes come from the
// caller (usually the image folder).

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "neva/image.hpp"

namespace neva::data {

struct PixelPoint {
    double x = 0.0;
    double y = 0.0;
};

struct EyeTrackingRecord {
    std::string image_id;
    std::string subject_id;
    std::vector<PixelPoint> fixations;
    int height = 0;
    int width = 0;
};

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct FixationFile {
    std::vector<EyeTrackingRecord> records;  // in order of first appearance
    std::vector<RowError> errors;
    std::size_t rows = 0;
    std::size_t dropped_out_of_bounds = 0;
};

// image id -> (height, width)
using ImageSizes = std::map<std::string, std::pair<int, int>>;

// Parses and validates fixation rows. Rows sharing (image_id, subject_id)
// are concatenated in file order. Out-of-bounds fixations (outside
// [0,W) x [0,H)) are dropped and counted. Throws DataError when more than
// 10% of the rows are malformed.
FixationFile parse_fixations(std::istream& in, const ImageSizes& sizes = {});
FixationFile load_fixations(const std::filesystem::path& path, const ImageSizes& sizes = {});

Scanpath normalize_record(const EyeTrackingRecord& record);
EyeTrackingRecord denormalize(const Scanpath& sp, const std::string& subject_id, int height, int width);

// image id -> normalized scanpaths of all subjects, subjects in file order.
std::map<std::string, std::vector<Scanpath>> group_by_image(const std::vector<EyeTrackingRecord>& records);

// Writes scanpaths in the shared format with `method` as the subject id.
void write_scanpaths(std::ostream& out, const std::string& method, const std::vector<Scanpath>& paths,
                     const ImageSizes& sizes);
void write_scanpaths(const std::filesystem::path& path, const std::string& method,
                     const std::vector<Scanpath>& paths, const ImageSizes& sizes);
void write_records(const std::filesystem::path& path, const std::vector<EyeTrackingRecord>& records);

struct ImageSet {
    std::map<std::string, Image> images;  // keyed by file stem
    std::vector<std::string> failed;      // files that could not be decoded
};

// Decodes every raster image (png, jpg, jpeg, bmp, pgm, ppm, tif, tiff) in
// `dir` into [0,1] values. Grayscale stays single-channel; alpha is dropped.
ImageSet load_images(const std::filesystem::path& dir);
Image load_image(const std::filesystem::path& path);

// 8-bit PNG (or any extension OpenCV can encode).
void save_image(const std::filesystem::path& path, const Image& image);

ImageSizes sizes_of(const std::map<std::string, Image>& images);

}  // namespace neva::data
