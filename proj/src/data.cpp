#include "tracknet/data.hpp"

#include "tracknet/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace tracknet {

// ---------------------------------------------------------------------------
// PNM IO

namespace {

int pnm_token(std::istream& in, const std::string& path) {
    // skips whitespace and '#' comments, returns one non-negative integer
    int c = in.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = in.get();
        } else if (std::isspace(c)) {
            c = in.get();
        } else {
            break;
        }
    }
    if (c == EOF || !std::isdigit(c)) throw DataError("malformed PNM header in '" + path + "'");
    long v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        if (v > (1 << 24)) throw DataError("PNM header value out of range in '" + path + "'");
        c = in.get();
    }
    return static_cast<int>(v);
}

}  // namespace

RawImage read_pnm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw DataError("cannot open image '" + path + "'");
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || (m1 != '5' && m1 != '6'))
        throw DataError("'" + path + "' is not a binary PGM/PPM file");
    RawImage img;
    img.channels = m1 == '5' ? 1 : 3;
    img.width = pnm_token(f, path);
    img.height = pnm_token(f, path);
    const int maxval = pnm_token(f, path);
    if (maxval <= 0 || maxval > 255)
        throw DataError("unsupported maxval " + std::to_string(maxval) + " in '" + path + "'");
    if (img.width <= 0 || img.height <= 0) throw DataError("degenerate image size in '" + path + "'");
    // exactly one whitespace byte separates header and raster
    const std::size_t n = static_cast<std::size_t>(img.width) * img.height * img.channels;
    img.pixels.resize(n);
    f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(f.gcount()) != n)
        throw DataError("truncated raster in '" + path + "'");
    return img;
}

void write_pgm(const std::string& path, const Tensor& image) {
    if (image.rank() != 2) throw DataError("write_pgm expects a rank-2 tensor");
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot open '" + path + "' for writing");
    f << "P5\n" << image.shape[1] << " " << image.shape[0] << "\n255\n";
    const RawImage raw = to_raw_gray(image);
    f.write(reinterpret_cast<const char*>(raw.pixels.data()),
            static_cast<std::streamsize>(raw.pixels.size()));
    if (!f) throw DataError("write to '" + path + "' failed");
}

RawImage to_raw_gray(const Tensor& image) {
    RawImage raw;
    raw.height = image.shape[0];
    raw.width = image.shape[1];
    raw.channels = 1;
    raw.pixels.resize(image.data.size());
    for (std::size_t i = 0; i < image.data.size(); ++i) {
        const float v = std::clamp(image.data[i], 0.0f, 1.0f);
        raw.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
    }
    return raw;
}

// ---------------------------------------------------------------------------
// Preprocessing

namespace {

Tensor halve_2x2(const Tensor& in) {
    const int h = in.shape[0] / 2, w = in.shape[1] / 2;
    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double s = static_cast<double>(in.at(2 * y, 2 * x)) + in.at(2 * y, 2 * x + 1) +
                             in.at(2 * y + 1, 2 * x) + in.at(2 * y + 1, 2 * x + 1);
            out.at(y, x) = static_cast<float>(s / 4.0);
        }
    return out;
}

Tensor downscale_to(Tensor gray, int target_side, const std::string& what) {
    int side = gray.shape[0];
    if (gray.shape[0] != gray.shape[1])
        throw DataError(what + ": only square images are supported, got " + shape_str(gray.shape));
    while (side > target_side) {
        if (side % 2 != 0)
            throw DataError(what + ": side " + std::to_string(gray.shape[0]) +
                            " is not reducible to " + std::to_string(target_side));
        gray = halve_2x2(gray);
        side = gray.shape[0];
    }
    if (side != target_side)
        throw DataError(what + ": side " + std::to_string(gray.shape[0]) +
                        " is not reducible to " + std::to_string(target_side));
    return gray;
}

}  // namespace

Tensor preprocess_image(const Tensor& raw, int target_side) {
    if (target_side <= 0) throw DataError("preprocess: non-positive target side");
    Tensor gray;
    if (raw.rank() == 2) {
        gray = raw;
    } else if (raw.rank() == 3 && raw.shape[2] == 3) {
        gray = Tensor({raw.shape[0], raw.shape[1]});
        const float* p = raw.data.data();
        for (std::int64_t i = 0; i < gray.size(); ++i, p += 3)
            gray[i] = static_cast<float>(0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2]);
    } else {
        throw DataError("preprocess: expected [h,w] or [h,w,3], got " + shape_str(raw.shape));
    }
    gray = downscale_to(std::move(gray), target_side, "preprocess");
    for (auto& v : gray.data) v = std::clamp(v / 255.0f, 0.0f, 1.0f);
    return gray;
}

Tensor preprocess_image(const RawImage& raw, int target_side) {
    Tensor t;
    if (raw.channels == 1) {
        t = Tensor({raw.height, raw.width});
        for (std::size_t i = 0; i < raw.pixels.size(); ++i) t[static_cast<std::int64_t>(i)] = raw.pixels[i];
    } else if (raw.channels == 3) {
        t = Tensor({raw.height, raw.width, 3});
        for (std::size_t i = 0; i < raw.pixels.size(); ++i) t[static_cast<std::int64_t>(i)] = raw.pixels[i];
    } else {
        throw DataError("preprocess: unsupported channel count " + std::to_string(raw.channels));
    }
    return preprocess_image(t, target_side);
}

float label_to_norm(float pixel, int side) { return pixel / (static_cast<float>(side) / 2.0f) - 1.0f; }
float norm_to_label(float norm, int side) { return (norm + 1.0f) * (static_cast<float>(side) / 2.0f); }

// ---------------------------------------------------------------------------
// Synthetic generator

void GenConfig::validate() const {
    if (count < 1) throw DataError("gen: count must be >= 1");
    if (side < 8 || side % 4 != 0) throw DataError("gen: side must be a multiple of 4, >= 8");
    if (!(track_width_min > 0.0f) || track_width_max < track_width_min)
        throw DataError("gen: degenerate track width range");
    if (angle_max < angle_min || std::abs(angle_min) > 1.2f || std::abs(angle_max) > 1.2f)
        throw DataError("gen: angle range must lie within [-1.2, 1.2] radians");
    if (offset_max < offset_min) throw DataError("gen: degenerate offset range");
    if (!(brightness_min > 0.0f) || brightness_max < brightness_min || brightness_max > 1.0f)
        throw DataError("gen: brightness range must lie within (0, 1]");
    if (noise_sigma < 0.0f) throw DataError("gen: noise sigma must be >= 0");
}

int label_row(int side) { return (side * 3) / 4; }

namespace {

Sample render_sample(const GenConfig& cfg, std::uint64_t sample_seed) {
    SplitMix64 rng(sample_seed);
    const int side = cfg.side;
    const float width = rng.uniformf(cfg.track_width_min, cfg.track_width_max);
    const float angle = rng.uniformf(cfg.angle_min, cfg.angle_max);
    const float offset = rng.uniformf(cfg.offset_min, cfg.offset_max);
    const float brightness = rng.uniformf(cfg.brightness_min, cfg.brightness_max);

    const float row = static_cast<float>(label_row(side));
    // keep labels at least 4 px inside the frame so the tanh head can reach them
    const float cx = std::clamp(static_cast<float>(side) / 2.0f + offset, 4.0f, static_cast<float>(side) - 4.0f);

    const float road = 0.30f * brightness;
    const float line = brightness;
    const float cos_a = std::cos(angle);
    const float sin_a = std::sin(angle);
    const float half_w = width / 2.0f;

    Tensor img({side, side});
    for (int y = 0; y < side; ++y) {
        for (int x = 0; x < side; ++x) {
            const float px = static_cast<float>(x) + 0.5f;
            const float py = static_cast<float>(y) + 0.5f;
            // perpendicular distance to the center line through (cx, row)
            const float d = std::abs(cos_a * (px - cx) - sin_a * (py - row));
            // triangular profile peaking at the center line
            const float t = std::max(0.0f, 1.0f - d / half_w);
            float v = road + (line - road) * t;
            if (cfg.noise_sigma > 0.0f) v += static_cast<float>(rng.gaussian(cfg.noise_sigma));
            img.at(y, x) = std::clamp(v, 0.0f, 1.0f);
        }
    }

    // store exactly what a PGM round-trip would give back
    const RawImage quantized = to_raw_gray(img);
    for (std::int64_t i = 0; i < img.size(); ++i)
        img[i] = static_cast<float>(quantized.pixels[static_cast<std::size_t>(i)]) / 255.0f;

    Sample s;
    s.image = std::move(img);
    s.label_x = cx;
    // the label row marks the steering look-ahead point
    s.label_y = row;
    return s;
}

}  // namespace

Dataset generate_synthetic(const GenConfig& cfg) {
    cfg.validate();
    Dataset ds;
    ds.side = cfg.side;
    ds.split = "train";
    ds.samples.resize(static_cast<std::size_t>(cfg.count));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < cfg.count; ++i)
        ds.samples[static_cast<std::size_t>(i)] =
            render_sample(cfg, mix_seed(cfg.seed, static_cast<std::uint64_t>(i)));
    return ds;
}

// ---------------------------------------------------------------------------
// Dataset directory IO

namespace {

std::string format_float(float v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", static_cast<double>(v));
    return buf;
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& dir) {
    if (ds.samples.empty()) throw DataError("refusing to save an empty dataset");
    fs::create_directories(dir);
    std::ofstream csv(fs::path(dir) / "labels.csv", std::ios::trunc);
    if (!csv) throw DataError("cannot open '" + dir + "/labels.csv' for writing");
    csv << "filename,x,y\n";
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "image_%04zu.pgm", i);
        write_pgm((fs::path(dir) / name).string(), ds.samples[i].image);
        csv << name << "," << format_float(ds.samples[i].label_x) << ","
            << format_float(ds.samples[i].label_y) << "\n";
    }
    if (!csv) throw DataError("write to '" + dir + "/labels.csv' failed");
}

Dataset load_dataset(const std::string& dir, int target_side) {
    const fs::path csv_path = fs::path(dir) / "labels.csv";
    std::ifstream csv(csv_path);
    if (!csv) throw DataError("cannot open '" + csv_path.string() + "'");

    std::string header;
    if (!std::getline(csv, header)) throw DataError("'" + csv_path.string() + "' is empty");
    if (!header.empty() && header.back() == '\r') header.pop_back();
    if (header != "filename,x,y")
        throw DataError("'" + csv_path.string() + "': expected header 'filename,x,y', got '" +
                        header + "'");

    Dataset ds;
    ds.side = target_side;
    std::string line;
    int row_no = 1;
    while (std::getline(csv, line)) {
        ++row_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::istringstream ls(line);
        std::string fname, xs, ys;
        if (!std::getline(ls, fname, ',') || !std::getline(ls, xs, ',') || !std::getline(ls, ys))
            throw DataError("labels.csv row " + std::to_string(row_no) + " is malformed: '" + line + "'");
        float x = 0, y = 0;
        try {
            std::size_t px = 0, py = 0;
            x = std::stof(xs, &px);
            y = std::stof(ys, &py);
            if (px != xs.size() || py != ys.size()) throw std::invalid_argument("trailing junk");
        } catch (const std::exception&) {
            throw DataError("labels.csv row " + std::to_string(row_no) + " has non-numeric label: '" +
                            line + "'");
        }

        const fs::path img_path = fs::path(dir) / fname;
        if (!fs::exists(img_path))
            throw DataError("labels.csv row " + std::to_string(row_no) + " references missing image '" +
                            fname + "'");
        RawImage raw = read_pnm(img_path.string());
        const int stored_side = raw.width;
        if (raw.width != raw.height)
            throw DataError("image '" + fname + "' is not square (" + std::to_string(raw.width) +
                            "x" + std::to_string(raw.height) + ")");
        if (x < 0.0f || x > static_cast<float>(stored_side) || y < 0.0f ||
            y > static_cast<float>(stored_side))
            throw DataError("labels.csv row " + std::to_string(row_no) + ": label (" + format_float(x) +
                            ", " + format_float(y) + ") outside [0, " + std::to_string(stored_side) +
                            "]");

        Sample s;
        s.image = preprocess_image(raw, target_side);
        const float scale = static_cast<float>(target_side) / static_cast<float>(stored_side);
        s.label_x = x * scale;
        s.label_y = y * scale;
        ds.samples.push_back(std::move(s));
    }
    if (ds.samples.empty()) throw DataError("'" + csv_path.string() + "' lists no samples");
    return ds;
}

std::pair<Dataset, Dataset> split_dataset(const Dataset& ds, double test_fraction,
                                          std::uint64_t seed) {
    if (ds.samples.empty()) throw DataError("cannot split an empty dataset");
    if (test_fraction < 0.0 || test_fraction >= 1.0)
        throw DataError("test fraction must be in [0, 1)");
    std::vector<std::size_t> order(ds.samples.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    SplitMix64 rng(mix_seed(seed, 0x5117ULL));
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.next() % i]);

    std::size_t n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(order.size())));
    if (test_fraction > 0.0 && n_test == 0) n_test = 1;

    Dataset train, test;
    train.side = test.side = ds.side;
    train.split = "train";
    test.split = "test";
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_test ? test : train).samples.push_back(ds.samples[order[i]]);
    if (train.samples.empty()) throw DataError("split left the training set empty");
    return {std::move(train), std::move(test)};
}

}  // namespace tracknet
