#include "scod/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "scod/rng.hpp"

namespace scod {

namespace fs = std::filesystem;
namespace pt = boost::property_tree;

const std::vector<std::string>& voc_classes() {
    static const std::vector<std::string> k{
        "aeroplane", "bicycle", "bird",   "boat",        "bottle", "bus",   "car",
        "cat",       "chair",   "cow",    "diningtable", "dog",    "horse", "motorbike",
        "person",    "pottedplant", "sheep", "sofa",     "train",  "tvmonitor"};
    return k;
}

const std::vector<std::string>& exdark_classes() {
    static const std::vector<std::string> k{"Bicycle", "Boat", "Bottle", "Bus",
                                            "Car",     "Cat",  "Chair",  "Cup",
                                            "Dog",     "Motorbike", "People", "Table"};
    return k;
}

const std::vector<std::string>& synthetic_classes() {
    static const std::vector<std::string> k{"square", "circle", "triangle"};
    return k;
}

Annotation parse_voc_xml(const std::string& bytes) {
    pt::ptree tree;
    std::istringstream in(bytes);
    try {
        pt::read_xml(in, tree);
    } catch (const pt::xml_parser_error& e) {
        throw std::invalid_argument("voc xml: parse error at line " + std::to_string(e.line()) +
                                    ": " + e.message());
    }
    auto root = tree.get_child_optional("annotation");
    if (!root) throw std::invalid_argument("voc xml: missing <annotation> root element");

    Annotation ann;
    ann.image_id = root->get<std::string>("filename", "");
    auto size = root->get_child_optional("size");
    if (!size) throw std::invalid_argument("voc xml: missing <size> element");
    try {
        ann.width = size->get<std::size_t>("width");
        ann.height = size->get<std::size_t>("height");
    } catch (const pt::ptree_error&) {
        throw std::invalid_argument("voc xml: <size> lacks numeric width/height");
    }

    std::size_t index = 0;
    for (const auto& [key, node] : *root) {
        if (key != "object") continue;
        AnnotationObject obj;
        try {
            obj.class_name = node.get<std::string>("name");
            obj.difficult = node.get<int>("difficult", 0) != 0;
            // VOC boxes are 1-based; shift the mins to 0-based
            obj.xmin = node.get<double>("bndbox.xmin") - 1.0;
            obj.ymin = node.get<double>("bndbox.ymin") - 1.0;
            obj.xmax = node.get<double>("bndbox.xmax");
            obj.ymax = node.get<double>("bndbox.ymax");
        } catch (const pt::ptree_error& e) {
            throw std::invalid_argument("voc xml: object " + std::to_string(index) + ": " +
                                        e.what());
        }
        if (!(obj.xmin >= 0 && obj.xmin < obj.xmax &&
              obj.xmax <= static_cast<double>(ann.width)) ||
            !(obj.ymin >= 0 && obj.ymin < obj.ymax &&
              obj.ymax <= static_cast<double>(ann.height)))
            throw std::invalid_argument(
                "voc xml: object " + std::to_string(index) + " ('" + obj.class_name +
                "') box outside image bounds " + std::to_string(ann.width) + "x" +
                std::to_string(ann.height));
        ann.objects.push_back(std::move(obj));
        ++index;
    }
    return ann;
}

Annotation parse_exdark_bbgt(const std::string& bytes) {
    std::istringstream in(bytes);
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("bbGt: empty file");
    // tolerate trailing CR
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("% bbGt version=3", 0) != 0)
        throw std::invalid_argument("bbGt: missing '% bbGt version=3' header, got '" + line +
                                    "'");
    Annotation ann;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string cls;
        double l, t, w, h;
        row >> cls;
        if (!(row >> l >> t >> w >> h))
            throw std::invalid_argument("bbGt: line " + std::to_string(line_no) +
                                        ": fewer than 5 fields");
        if (w <= 0 || h <= 0)
            throw std::invalid_argument("bbGt: line " + std::to_string(line_no) +
                                        ": non-positive box extent");
        AnnotationObject obj;
        obj.class_name = cls;
        obj.xmin = l;
        obj.ymin = t;
        obj.xmax = l + w;
        obj.ymax = t + h;
        // remaining numeric fields: occluded, visible box, ignore, angle
        std::vector<double> rest;
        double v;
        while (row >> v) rest.push_back(v);
        obj.difficult = rest.size() >= 6 && rest[5] != 0.0; // bbGt "ignore" flag
        ann.objects.push_back(std::move(obj));
    }
    return ann;
}

namespace {

// Reads one header token, skipping whitespace and '#' comments.
std::string pnm_token(const std::string& bytes, std::size_t& pos) {
    while (pos < bytes.size()) {
        const char c = bytes[pos];
        if (c == '#') {
            while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
            ++pos;
        } else {
            break;
        }
    }
    const std::size_t start = pos;
    while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
    if (start == pos) throw std::invalid_argument("pnm: truncated header");
    return bytes.substr(start, pos - start);
}

std::size_t pnm_int(const std::string& bytes, std::size_t& pos, const char* what) {
    const std::string tok = pnm_token(bytes, pos);
    try {
        return std::stoul(tok);
    } catch (const std::exception&) {
        throw std::invalid_argument(std::string("pnm: bad ") + what + " '" + tok + "'");
    }
}

} // namespace

Tensor read_image(const std::string& bytes) {
    std::size_t pos = 0;
    const std::string magic = pnm_token(bytes, pos);
    if (magic != "P6" && magic != "P5")
        throw std::invalid_argument("pnm: bad magic '" + magic + "', want P6 or P5");
    const bool color = magic == "P6";
    const std::size_t w = pnm_int(bytes, pos, "width");
    const std::size_t h = pnm_int(bytes, pos, "height");
    const std::size_t maxval = pnm_int(bytes, pos, "maxval");
    if (w == 0 || h == 0) throw std::invalid_argument("pnm: zero image dimension");
    if (maxval != 255)
        throw std::invalid_argument("pnm: maxval " + std::to_string(maxval) + ", only 255");
    ++pos; // single whitespace after maxval
    const std::size_t need = (color ? 3 : 1) * w * h;
    if (pos + need > bytes.size())
        throw std::invalid_argument("pnm: payload truncated, need " + std::to_string(need) +
                                    " bytes, have " + std::to_string(bytes.size() - pos));

    Tensor img({3, h, w});
    for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
            if (color) {
                for (std::size_t c = 0; c < 3; ++c)
                    img(c, y, x) =
                        static_cast<unsigned char>(bytes[pos + (y * w + x) * 3 + c]) / 255.0;
            } else {
                const double v = static_cast<unsigned char>(bytes[pos + y * w + x]) / 255.0;
                img(0, y, x) = img(1, y, x) = img(2, y, x) = v;
            }
        }
    }
    return img;
}

std::string write_ppm_bytes(const Tensor& image) {
    if (image.rank() != 3 || image.shape[0] != 3)
        throw std::invalid_argument("write_ppm: image must be [3xHxW], got " +
                                    image.shape_string());
    const std::size_t h = image.shape[1], w = image.shape[2];
    std::string out = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + 3 * w * h);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = std::clamp(image(c, y, x), 0.0, 1.0);
                out.push_back(static_cast<char>(static_cast<int>(v * 255.0 + 0.5)));
            }
    return out;
}

void write_ppm(const std::string& path, const Tensor& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ppm: cannot open " + path);
    const std::string bytes = write_ppm_bytes(image);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write_ppm: write failed for " + path);
}

Tensor read_image_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_image: cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return read_image(bytes);
}

std::string manifest_to_csv(const Manifest& m) {
    std::string out = "image_path,annotation_path,split\n";
    for (const ManifestRow& r : m.rows)
        out += r.image_path + "," + r.annotation_path + "," + r.split + "\n";
    return out;
}

Manifest manifest_from_csv(const std::string& text) {
    Manifest m;
    std::istringstream in(text);
    std::string line;
    bool first = true;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first && line == "image_path,annotation_path,split") {
            first = false;
            continue;
        }
        first = false;
        const std::size_t c1 = line.find(',');
        const std::size_t c2 = c1 == std::string::npos ? std::string::npos
                                                       : line.find(',', c1 + 1);
        if (c1 == std::string::npos || c2 == std::string::npos)
            throw std::invalid_argument("manifest: line " + std::to_string(line_no) +
                                        ": expected 3 comma-separated columns");
        m.rows.push_back(ManifestRow{line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
                                     line.substr(c2 + 1)});
    }
    return m;
}

Manifest load_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("manifest: cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return manifest_from_csv(text);
}

namespace {

struct ShapePlacement {
    int type = 0; // 0 square, 1 circle, 2 triangle
    int x0 = 0, y0 = 0, side = 0;
};

bool boxes_touch(const ShapePlacement& a, const ShapePlacement& b, int margin) {
    return !(a.x0 + a.side + margin <= b.x0 || b.x0 + b.side + margin <= a.x0 ||
             a.y0 + a.side + margin <= b.y0 || b.y0 + b.side + margin <= a.y0);
}

void draw_shape(Tensor& img, const ShapePlacement& p, const double rgb[3]) {
    const int s = p.side;
    for (int j = 0; j < s; ++j) {
        for (int i = 0; i < s; ++i) {
            bool inside = false;
            switch (p.type) {
            case 0:
                inside = true;
                break;
            case 1: {
                const double dx = i - (s - 1) / 2.0;
                const double dy = j - (s - 1) / 2.0;
                inside = dx * dx + dy * dy <= ((s - 1) / 2.0) * ((s - 1) / 2.0) + 0.25;
                break;
            }
            case 2: {
                // apex at top-center widening to the full base row
                const int width = j + 1;
                const int start = (s - width) / 2;
                inside = i >= start && i < start + width;
                break;
            }
            }
            if (!inside) continue;
            for (int c = 0; c < 3; ++c)
                img(static_cast<std::size_t>(c), static_cast<std::size_t>(p.y0 + j),
                    static_cast<std::size_t>(p.x0 + i)) = rgb[c];
        }
    }
}

} // namespace

Manifest generate_synthetic_dataset(std::size_t n, std::uint64_t seed, double dark_scale,
                                    const std::string& out_dir) {
    if (n < 1) throw std::invalid_argument("generate_synthetic_dataset: n must be >= 1");
    if (!(dark_scale > 0.0 && dark_scale <= 1.0))
        throw std::invalid_argument("generate_synthetic_dataset: dark_scale must be in (0,1]");
    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec || !fs::is_directory(out_dir))
        throw std::runtime_error("generate_synthetic_dataset: cannot create directory " +
                                 out_dir);

    const int size = 64;
    Manifest manifest;
    for (std::size_t idx = 0; idx < n; ++idx) {
        Rng rng(mix_seed(seed, idx));
        Tensor img({3, static_cast<std::size_t>(size), static_cast<std::size_t>(size)});
        for (double& v : img.data) v = rng.uniform(0.05, 0.2);

        const std::size_t count = 1 + rng.below(3);
        std::vector<ShapePlacement> placed;
        for (std::size_t si = 0; si < count; ++si) {
            for (int attempt = 0; attempt < 40; ++attempt) {
                ShapePlacement p;
                p.type = static_cast<int>(rng.below(3));
                p.side = 14 + static_cast<int>(rng.below(15)); // 14..28
                p.x0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - p.side - 1)));
                p.y0 = 1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(size - p.side - 1)));
                bool clash = false;
                for (const ShapePlacement& q : placed)
                    if (boxes_touch(p, q, 2)) {
                        clash = true;
                        break;
                    }
                if (!clash) {
                    placed.push_back(p);
                    break;
                }
            }
        }
        for (const ShapePlacement& p : placed) {
            double rgb[3];
            for (double& c : rgb) c = rng.uniform(0.6, 1.0);
            draw_shape(img, p, rgb);
        }
        for (double& v : img.data) v = std::clamp(v * dark_scale + rng.uniform(0.0, 0.02), 0.0, 1.0);

        char stem[32];
        std::snprintf(stem, sizeof(stem), "img_%05zu", idx);
        const std::string img_name = std::string(stem) + ".ppm";
        const std::string ann_name = std::string(stem) + ".txt";
        write_ppm((fs::path(out_dir) / img_name).string(), img);

        std::string ann = "% bbGt version=3\n";
        for (const ShapePlacement& p : placed)
            ann += synthetic_classes()[static_cast<std::size_t>(p.type)] + " " +
                   std::to_string(p.x0) + " " + std::to_string(p.y0) + " " +
                   std::to_string(p.side) + " " + std::to_string(p.side) +
                   " 0 0 0 0 0 0 0\n";
        {
            std::ofstream out(fs::path(out_dir) / ann_name, std::ios::binary);
            if (!out)
                throw std::runtime_error("generate_synthetic_dataset: cannot write " + ann_name);
            out << ann;
        }
        manifest.rows.push_back(ManifestRow{img_name, ann_name, "train"});
    }

    std::ofstream mf(fs::path(out_dir) / "manifest.csv", std::ios::binary);
    if (!mf) throw std::runtime_error("generate_synthetic_dataset: cannot write manifest.csv");
    mf << manifest_to_csv(manifest);
    return manifest;
}

std::vector<std::string> stratified_split(const std::vector<Annotation>& annotations,
                                          double val_fraction, std::uint64_t seed) {
    if (!(val_fraction >= 0.0 && val_fraction <= 1.0))
        throw std::invalid_argument("stratified_split: val_fraction must lie in [0,1]");

    auto dominant = [](const Annotation& a) {
        std::map<std::string, std::size_t> counts;
        for (const AnnotationObject& o : a.objects) ++counts[o.class_name];
        std::string best;
        std::size_t best_n = 0;
        for (const auto& [name, n] : counts)
            if (n > best_n) { // map order breaks ties lexicographically
                best = name;
                best_n = n;
            }
        return best;
    };

    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < annotations.size(); ++i)
        groups[dominant(annotations[i])].push_back(i);

    auto fnv1a = [](const std::string& s) {
        std::uint64_t h = 1469598103934665603ULL;
        for (unsigned char c : s) h = (h ^ c) * 1099511628211ULL;
        return h;
    };

    std::vector<std::string> split(annotations.size(), "train");
    for (auto& [cls, members] : groups) {
        Rng rng(mix_seed(seed, fnv1a(cls)));
        for (std::size_t i = members.size(); i > 1; --i)
            std::swap(members[i - 1], members[rng.below(i)]);
        const std::size_t n_val = static_cast<std::size_t>(
            std::llround(val_fraction * static_cast<double>(members.size())));
        for (std::size_t i = 0; i < n_val; ++i) split[members[i]] = "val";
    }
    return split;
}

} // namespace scod
