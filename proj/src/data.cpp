#include "avseg/data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "avseg/png_io.hpp"
#include "avseg/rng.hpp"

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace avseg {

namespace {

const std::array<ShapeGeom, 4> kDefaultGeoms = {ShapeGeom::Circle, ShapeGeom::Square, ShapeGeom::Triangle,
                                                ShapeGeom::Diamond};
// bright saturated shape colors against a dull background
const std::array<std::array<double, 3>, 8> kPalette = {{{0.95, 0.15, 0.15},
                                                        {0.95, 0.90, 0.12},
                                                        {0.10, 0.85, 0.92},
                                                        {0.90, 0.15, 0.88},
                                                        {0.15, 0.92, 0.25},
                                                        {0.98, 0.55, 0.10},
                                                        {0.25, 0.35, 0.95},
                                                        {0.95, 0.95, 0.95}}};

std::string geom_name(ShapeGeom g) {
    switch (g) {
        case ShapeGeom::Circle: return "circle";
        case ShapeGeom::Square: return "square";
        case ShapeGeom::Triangle: return "triangle";
        case ShapeGeom::Diamond: return "diamond";
    }
    return "circle";
}

ShapeGeom geom_from_name(const std::string& s) {
    if (s == "circle") return ShapeGeom::Circle;
    if (s == "square") return ShapeGeom::Square;
    if (s == "triangle") return ShapeGeom::Triangle;
    if (s == "diamond") return ShapeGeom::Diamond;
    throw ConfigError("unknown shape geometry '" + s + "'");
}

double quant255(double v) { return std::lround(std::min(std::max(v, 0.0), 1.0) * 255.0) / 255.0; }

double quant_i16(double v) {
    const long q = std::lround(std::min(std::max(v, -1.0), 1.0) * 32768.0);
    return static_cast<double>(std::min<long>(std::max<long>(q, -32768), 32767)) / 32768.0;
}

// extent: half-size of the footprint's bounding box for a target area
double shape_extent(ShapeGeom g, double area) {
    switch (g) {
        case ShapeGeom::Circle: return std::sqrt(area / M_PI);
        case ShapeGeom::Square: return std::sqrt(area) / 2.0;
        case ShapeGeom::Triangle: return std::sqrt(area / 2.0);  // footprint area is 2e^2
        case ShapeGeom::Diamond: return std::sqrt(area / 2.0);
    }
    return std::sqrt(area / M_PI);
}

bool inside_shape(ShapeGeom g, double dy, double dx, double e) {
    switch (g) {
        case ShapeGeom::Circle: return dy * dy + dx * dx <= e * e;
        case ShapeGeom::Square: return std::abs(dy) <= e && std::abs(dx) <= e;
        case ShapeGeom::Triangle:
            // isoceles, apex up: height 2e, base 2e at the bottom edge
            return dy >= -e && dy <= e && std::abs(dx) <= (dy + e) / 2.0;
        case ShapeGeom::Diamond: return std::abs(dy) + std::abs(dx) <= e;
    }
    return false;
}

void paint_shape(Tensor& img, BinaryMask* mask, ShapeGeom geom, const std::array<double, 3>& color, double cy,
                 double cx, double e, double jitter) {
    const int h = img.dim(1), w = img.dim(2);
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - e - 1)));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(cy + e + 1)));
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - e - 1)));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(cx + e + 1)));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            if (!inside_shape(geom, y - cy, x - cx, e)) continue;
            for (int c = 0; c < 3; ++c) img(c, y, x) = quant255(color[static_cast<size_t>(c)] + jitter);
            if (mask) mask->at(y, x) = 1;
        }
}

}  // namespace

void SynthSpec::validate() const {
    if (n_classes < 1) throw ConfigError("synth: n_classes must be >= 1");
    if (samples_per_class < 1) throw ConfigError("synth: samples_per_class must be >= 1");
    if (image_h < 16 || image_w < 16) throw ConfigError("synth: image must be at least 16x16");
    if (!(min_fg_fraction > 0.0 && max_fg_fraction < 0.5 && min_fg_fraction <= max_fg_fraction))
        throw ConfigError("synth: fg fraction bounds must satisfy 0 < min <= max < 0.5");
    if (noise_level < 0.0) throw ConfigError("synth: noise_level must be >= 0");
    if (sample_rate <= 0.0 || clip_seconds <= 0.0) throw ConfigError("synth: bad audio parameters");
    const double max_area = max_fg_fraction * image_h * image_w;
    double worst_extent = 0.0;
    for (ShapeGeom g : kDefaultGeoms) worst_extent = std::max(worst_extent, shape_extent(g, max_area));
    if (2.0 * worst_extent + 2.0 >= std::min(image_h, image_w))
        throw ConfigError("synth: image too small for minimum shape placement margins");
}

SynthSpec SynthSpec::resolved() const {
    validate();
    SynthSpec out = *this;
    if (out.shape_kinds.empty()) {
        for (int c = 0; c < n_classes; ++c)
            out.shape_kinds.push_back({kDefaultGeoms[static_cast<size_t>(c) % kDefaultGeoms.size()],
                                       kPalette[static_cast<size_t>(c) % kPalette.size()]});
    }
    if (out.tone_map.empty()) {
        // fundamentals at bin centers of the toy 126-point grid
        const AudioConfig audio = toy_audio_config();
        for (int c = 0; c < n_classes; ++c) {
            const int bin = 6 * (c + 1);
            out.tone_map.push_back({bin * sample_rate / audio.fft_size, {1.0, 0.4}});
        }
    }
    if (static_cast<int>(out.shape_kinds.size()) != n_classes)
        throw ConfigError("synth: shape_kinds size must equal n_classes");
    if (static_cast<int>(out.tone_map.size()) != n_classes)
        throw ConfigError("synth: tone_map size must equal n_classes");
    return out;
}

AudioConfig toy_audio_config() {
    AudioConfig cfg;
    cfg.sample_rate = 8000.0;
    cfg.window_ms = 16.0;    // 128 samples
    cfg.hop_ms = 15.625;     // 125 samples
    cfg.fft_size = 126;      // 64 bins
    cfg.target_frames = 64;
    return cfg;
}

namespace {

SamplePair make_sample(const SynthSpec& spec, int class_id, int global_index) {
    Rng rng(spec.seed, static_cast<uint64_t>(global_index));
    const int h = spec.image_h, w = spec.image_w;

    SamplePair sp;
    std::ostringstream id;
    id << "v" << std::setfill('0') << std::setw(5) << global_index << "_c" << class_id;
    sp.id = id.str();
    sp.class_id = class_id;

    // smooth dull background
    sp.image = Tensor(Shape{3, h, w});
    const double fy = rng.uniform(0.5, 2.5), fx = rng.uniform(0.5, 2.5);
    const double py = rng.uniform(0.0, 2.0 * M_PI), px = rng.uniform(0.0, 2.0 * M_PI);
    const double base = rng.uniform(0.22, 0.34);
    const std::array<double, 3> tint = {rng.uniform(0.75, 0.9), rng.uniform(0.85, 1.0), rng.uniform(0.7, 0.85)};
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double v = base + 0.10 * std::sin(2.0 * M_PI * fy * y / h + py) *
                                         std::sin(2.0 * M_PI * fx * x / w + px);
            for (int c = 0; c < 3; ++c)
                sp.image(c, y, x) = quant255(v * tint[static_cast<size_t>(c)] + rng.uniform(-0.015, 0.015));
        }

    // optional silent distractor, drawn first so the sounding shape overlays it
    if (spec.distractors && spec.n_classes > 1) {
        int other = rng.uniform_int(0, spec.n_classes - 2);
        if (other >= class_id) ++other;
        const ShapeKind& kind = spec.shape_kinds[static_cast<size_t>(other)];
        const double frac = rng.uniform(spec.min_fg_fraction, spec.max_fg_fraction);
        const double e = shape_extent(kind.geom, frac * h * w);
        const double cy = rng.uniform(e + 1.0, h - 2.0 - e), cx = rng.uniform(e + 1.0, w - 2.0 - e);
        paint_shape(sp.image, nullptr, kind.geom, kind.color, cy, cx, e, rng.uniform(-0.04, 0.04));
    }

    // the sounding shape: footprint becomes the ground-truth mask
    const ShapeKind& kind = spec.shape_kinds[static_cast<size_t>(class_id)];
    const double frac = rng.uniform(spec.min_fg_fraction, spec.max_fg_fraction);
    const double e = shape_extent(kind.geom, frac * h * w);
    const double cy = rng.uniform(e + 1.0, h - 2.0 - e), cx = rng.uniform(e + 1.0, w - 2.0 - e);
    sp.gt_mask = BinaryMask(h, w);
    paint_shape(sp.image, &sp.gt_mask, kind.geom, kind.color, cy, cx, e, rng.uniform(-0.04, 0.04));

    // class tone plus optional noise, quantized to the int16 grid
    const ToneSpec& tone = spec.tone_map[static_cast<size_t>(class_id)];
    const int n = static_cast<int>(std::lround(spec.sample_rate * spec.clip_seconds));
    sp.waveform.sample_rate = spec.sample_rate;
    sp.waveform.samples.resize(static_cast<size_t>(n));
    for (int t = 0; t < n; ++t) {
        double v = 0.0;
        for (size_t k = 0; k < tone.harmonic_amps.size(); ++k)
            v += tone.harmonic_amps[k] *
                 std::sin(2.0 * M_PI * tone.freq_hz * static_cast<double>(k + 1) * t / spec.sample_rate);
        v *= 0.4;
        if (spec.noise_level > 0.0) v += spec.noise_level * rng.normal();
        sp.waveform.samples[static_cast<size_t>(t)] = quant_i16(v);
    }
    return sp;
}

}  // namespace

Dataset generate_dataset(const SynthSpec& raw_spec) {
    const SynthSpec spec = raw_spec.resolved();
    const int n = spec.n_classes * spec.samples_per_class;
    std::vector<SamplePair> all(static_cast<size_t>(n));
#pragma omp parallel for schedule(static)
    for (int i = 0; i < n; ++i) all[static_cast<size_t>(i)] = make_sample(spec, i % spec.n_classes, i);

    std::vector<int> order(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
    Rng shuffle_rng(spec.seed, 999);
    std::shuffle(order.begin(), order.end(), shuffle_rng.engine());

    const int n_train = static_cast<int>(std::floor(n * 0.70));
    const int n_val = static_cast<int>(std::floor(n * 0.15));
    Dataset ds;
    for (int i = 0; i < n; ++i) {
        SamplePair& sp = all[static_cast<size_t>(order[static_cast<size_t>(i)])];
        if (i < n_train)
            ds.train.push_back(std::move(sp));
        else if (i < n_train + n_val)
            ds.val.push_back(std::move(sp));
        else
            ds.test.push_back(std::move(sp));
    }
    return ds;
}

// ---- (de)serialization ---------------------------------------------------------

std::string SynthSpec::to_json() const {
    json j;
    j["n_classes"] = n_classes;
    j["samples_per_class"] = samples_per_class;
    j["image_h"] = image_h;
    j["image_w"] = image_w;
    j["noise_level"] = noise_level;
    j["seed"] = seed;
    j["sample_rate"] = sample_rate;
    j["clip_seconds"] = clip_seconds;
    j["min_fg_fraction"] = min_fg_fraction;
    j["max_fg_fraction"] = max_fg_fraction;
    j["distractors"] = distractors;
    j["shape_kinds"] = json::array();
    for (const auto& k : shape_kinds)
        j["shape_kinds"].push_back({{"geom", geom_name(k.geom)}, {"color", k.color}});
    j["tone_map"] = json::array();
    for (const auto& t : tone_map)
        j["tone_map"].push_back({{"freq_hz", t.freq_hz}, {"harmonic_amps", t.harmonic_amps}});
    return j.dump(2);
}

SynthSpec SynthSpec::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("synth spec: invalid json: ") + e.what());
    }
    SynthSpec s;
    s.n_classes = j.value("n_classes", s.n_classes);
    s.samples_per_class = j.value("samples_per_class", s.samples_per_class);
    s.image_h = j.value("image_h", s.image_h);
    s.image_w = j.value("image_w", s.image_w);
    s.noise_level = j.value("noise_level", s.noise_level);
    s.seed = j.value("seed", s.seed);
    s.sample_rate = j.value("sample_rate", s.sample_rate);
    s.clip_seconds = j.value("clip_seconds", s.clip_seconds);
    s.min_fg_fraction = j.value("min_fg_fraction", s.min_fg_fraction);
    s.max_fg_fraction = j.value("max_fg_fraction", s.max_fg_fraction);
    s.distractors = j.value("distractors", s.distractors);
    if (j.contains("shape_kinds"))
        for (const auto& k : j["shape_kinds"]) {
            ShapeKind kind;
            kind.geom = geom_from_name(k.at("geom").get<std::string>());
            kind.color = k.at("color").get<std::array<double, 3>>();
            s.shape_kinds.push_back(kind);
        }
    if (j.contains("tone_map"))
        for (const auto& t : j["tone_map"]) {
            ToneSpec tone;
            tone.freq_hz = t.at("freq_hz").get<double>();
            tone.harmonic_amps = t.at("harmonic_amps").get<std::vector<double>>();
            s.tone_map.push_back(tone);
        }
    s.validate();
    return s;
}

// ---- on-disk layout --------------------------------------------------------------

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Val: return "val";
        case Split::Test: return "test";
    }
    return "train";
}

void write_avsbench_layout(const Dataset& ds, const SynthSpec* provenance, const std::string& root) {
    std::error_code ec;
    fs::create_directories(root, ec);
    if (ec) throw IoError("cannot create dataset root " + root + ": " + ec.message());
    for (int s = 0; s < 3; ++s) {
        const std::string split_dir = (fs::path(root) / split_name(static_cast<Split>(s))).string();
        for (const auto& sp : ds.split(s)) {
            const fs::path vdir = fs::path(split_dir) / sp.id;
            fs::create_directories(vdir / "frames", ec);
            if (ec) throw IoError("cannot create " + (vdir / "frames").string());
            write_png_rgb8((vdir / "frames" / "00000.png").string(), tensor_to_rgb8(sp.image));
            write_wav_pcm16((vdir / "audio.wav").string(), sp.waveform);
            if (sp.has_gt()) {
                fs::create_directories(vdir / "masks", ec);
                write_png_gray1((vdir / "masks" / "00000.png").string(), sp.gt_mask);
            }
            std::ofstream meta(vdir / "meta.json", std::ios::trunc);
            meta << json{{"class_id", sp.class_id}}.dump() << "\n";
        }
    }
    if (provenance) {
        std::ofstream out(fs::path(root) / "synth_spec.json", std::ios::trunc);
        if (!out) throw IoError("cannot write synth_spec.json under " + root);
        out << provenance->to_json() << "\n";
    }
}

LoadResult load_avsbench_layout(const std::string& root) {
    if (!fs::exists(root)) throw DataError("dataset root does not exist: " + root);
    if (!fs::is_directory(root)) throw DataError("dataset root is not a directory: " + root);
    LoadResult res;
    for (int s = 0; s < 3; ++s) {
        const Split split = static_cast<Split>(s);
        const fs::path split_dir = fs::path(root) / split_name(split);
        if (!fs::is_directory(split_dir)) {
            res.warnings.push_back(std::string("split '") + split_name(split) + "' missing; loaded empty");
            continue;
        }
        std::vector<std::string> videos;
        for (const auto& e : fs::directory_iterator(split_dir))
            if (e.is_directory()) videos.push_back(e.path().filename().string());
        std::sort(videos.begin(), videos.end());
        if (videos.empty()) {
            res.warnings.push_back(std::string("split '") + split_name(split) + "' empty");
            continue;
        }
        for (const auto& vid : videos) {
            const fs::path vdir = split_dir / vid;
            const fs::path frames_dir = vdir / "frames";
            if (!fs::is_directory(frames_dir)) throw DataError("missing frames directory: " + frames_dir.string());
            const fs::path audio_path = vdir / "audio.wav";
            if (!fs::exists(audio_path)) throw DataError("missing audio.wav: " + audio_path.string());
            Waveform wav = read_wav(audio_path.string());

            int class_id = -1;
            const fs::path meta_path = vdir / "meta.json";
            if (fs::exists(meta_path)) {
                std::ifstream meta(meta_path);
                std::stringstream buf;
                buf << meta.rdbuf();
                try {
                    class_id = json::parse(buf.str()).value("class_id", -1);
                } catch (const json::parse_error&) {
                    throw DataError("malformed meta.json: " + meta_path.string());
                }
            }

            std::vector<std::string> frames;
            for (const auto& e : fs::directory_iterator(frames_dir))
                if (e.path().extension() == ".png") frames.push_back(e.path().filename().string());
            std::sort(frames.begin(), frames.end());
            if (frames.empty()) throw DataError("no frames in " + frames_dir.string());

            for (const auto& frame : frames) {
                SamplePair sp;
                sp.id = vid + "/" + fs::path(frame).stem().string();
                sp.class_id = class_id;
                ImageU8 img = read_png((frames_dir / frame).string());
                if (img.ch != 3) throw DataError("expected RGB frame: " + (frames_dir / frame).string());
                sp.image = rgb8_to_tensor(img);
                sp.waveform = wav;
                const fs::path mask_path = vdir / "masks" / frame;
                if (fs::exists(mask_path)) {
                    sp.gt_mask = read_mask_png(mask_path.string());
                    if (sp.gt_mask.h != img.h || sp.gt_mask.w != img.w)
                        throw DataError("mask size differs from frame: " + mask_path.string());
                } else if (split != Split::Train) {
                    throw DataError(std::string("missing ") + split_name(split) + " mask: " + mask_path.string());
                }
                res.ds.split(s).push_back(std::move(sp));
            }
        }
    }
    return res;
}

// ---- SampleStore -------------------------------------------------------------------

SampleStore::SampleStore(Dataset ds, const AudioConfig& audio) : data_(std::move(ds)), audio_(audio) {
    audio_.validate();
    for (int s = 0; s < 3; ++s) {
        auto& samples = data_.split(s);
        auto& specs = spectrograms_[static_cast<size_t>(s)];
        specs.resize(samples.size());
        const int n = static_cast<int>(samples.size());
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            specs[static_cast<size_t>(i)] = compute_spectrogram(samples[static_cast<size_t>(i)].waveform, audio_);
    }
}

const Spectrogram& SampleStore::spectrogram(Split s, int i) const {
    return spectrograms_[static_cast<size_t>(s)][static_cast<size_t>(i)];
}

const BinaryMask& SampleStore::gt_mask(Split s, int i) const {
    const SamplePair& sp = at(s, i);
    if (!sp.has_gt()) throw DataError("sample '" + sp.id + "' has no ground-truth mask");
    gt_reads_[static_cast<size_t>(s)].fetch_add(1, std::memory_order_relaxed);
    return sp.gt_mask;
}

void SampleStore::reset_gt_read_counters() {
    for (auto& c : gt_reads_) c.store(0);
}

}  // namespace avseg
