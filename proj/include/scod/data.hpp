#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "scod/tensor.hpp"

namespace scod {

struct AnnotationObject {
    std::string class_name;
    // corner box in pixel coordinates, 0-based, xmin < xmax, ymin < ymax
    double xmin = 0, ymin = 0, xmax = 0, ymax = 0;
    bool difficult = false;
};

struct Annotation {
    std::string image_id;
    std::size_t width = 0, height = 0;
    std::vector<AnnotationObject> objects;
};

const std::vector<std::string>& voc_classes();      // 20
const std::vector<std::string>& exdark_classes();   // 12
const std::vector<std::string>& synthetic_classes(); // square, circle, triangle

// Pascal VOC annotation XML. 1-based pixel coordinates are converted to
// 0-based (xmin-1, ymin-1); the difficult flag is preserved. Malformed XML,
// a missing <size>, or a box outside the image are rejected with location.
Annotation parse_voc_xml(const std::string& bytes);

// Ex-Dark ground truth (bbGt v3): "% bbGt version=3" header, then rows of
// "class l t w h ..." which become corner boxes (l, t, l+w, t+h).
Annotation parse_exdark_bbgt(const std::string& bytes);

// Binary PPM (P6) or PGM (P5), maxval 255 only. Values divided by 255;
// grayscale replicated to three channels. Returns [3 x H x W] in [0,1].
Tensor read_image(const std::string& bytes);

std::string write_ppm_bytes(const Tensor& image); // [3 x H x W] in [0,1]
void write_ppm(const std::string& path, const Tensor& image);
Tensor read_image_file(const std::string& path);

struct ManifestRow {
    std::string image_path;
    std::string annotation_path;
    std::string split; // train | val
};

struct Manifest {
    std::vector<ManifestRow> rows;
};

std::string manifest_to_csv(const Manifest& m);
Manifest manifest_from_csv(const std::string& text);
Manifest load_manifest(const std::string& path);

// n synthetic 64x64 low-light images: 1-3 non-overlapping filled shapes
// (square, circle, triangle) on a noise background, every pixel scaled by
// dark_scale; one bbGt annotation file per image plus a manifest CSV.
// Byte-deterministic given the seed.
Manifest generate_synthetic_dataset(std::size_t n, std::uint64_t seed, double dark_scale,
                                    const std::string& out_dir);

// Seeded train/val assignment, stratified by each image's dominant object
// class (ties: lexicographically first name). Returns "train"/"val" per
// annotation, with ~val_fraction of every class group in "val".
std::vector<std::string> stratified_split(const std::vector<Annotation>& annotations,
                                          double val_fraction, std::uint64_t seed);

} // namespace scod
