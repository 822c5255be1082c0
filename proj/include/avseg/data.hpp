#pragma once

#include <array>
#include <atomic>
#include <string>
#include <vector>

#include "avseg/audio.hpp"
#include "avseg/mask.hpp"
#include "avseg/tensor.hpp"

namespace avseg {

enum class ShapeGeom { Circle, Square, Triangle, Diamond };

struct ShapeKind {
    ShapeGeom geom = ShapeGeom::Circle;
    std::array<double, 3> color = {0.9, 0.2, 0.2};
};

struct ToneSpec {
    double freq_hz = 500.0;
    std::vector<double> harmonic_amps = {1.0, 0.4};  // amplitude per harmonic, fundamental first
};

/// Procedural audio-visual dataset: one textured background plus one
/// class-specific bright shape (the sounding object) per image; the waveform
/// is the class tone plus noise. The class tone uniquely identifies the shape
/// kind, so audio-visual alignment is learnable by construction.
struct SynthSpec {
    int n_classes = 4;
    int samples_per_class = 50;
    int image_h = 64, image_w = 64;
    std::vector<ShapeKind> shape_kinds;  // per class; defaults filled when empty
    std::vector<ToneSpec> tone_map;      // per class; defaults filled when empty
    double noise_level = 0.02;
    uint64_t seed = 7;
    double sample_rate = 8000.0;
    double clip_seconds = 1.0;
    double min_fg_fraction = 0.06;
    double max_fg_fraction = 0.30;  // keeps gt fg fraction < 0.5 by construction
    bool distractors = false;       // add one silent shape of another class

    void validate() const;
    /// Copy with shape_kinds/tone_map populated (cycled defaults).
    SynthSpec resolved() const;
    std::string to_json() const;
    static SynthSpec from_json(const std::string& text);
};

/// Toy audio frontend matching SynthSpec defaults (64 bins x 64 frames).
AudioConfig toy_audio_config();

struct SamplePair {
    std::string id;
    Tensor image;        // [3,H,W], values on the 8-bit grid
    Waveform waveform;   // samples on the int16 grid
    BinaryMask gt_mask;  // evaluation only; empty when unavailable (weak train data)
    int class_id = -1;

    bool has_gt() const { return gt_mask.h > 0; }
};

struct Dataset {
    std::vector<SamplePair> train, val, test;

    std::vector<SamplePair>& split(int s) { return s == 0 ? train : s == 1 ? val : test; }
    const std::vector<SamplePair>& split(int s) const { return s == 0 ? train : s == 1 ? val : test; }
};

/// Deterministic generation; splits are disjoint by id at ~70/15/15.
Dataset generate_dataset(const SynthSpec& spec);

/// Writes the AVSBench-style tree: root/{split}/{id}/frames/00000.png,
/// audio.wav, masks/00000.png, meta.json; spec provenance at root.
void write_avsbench_layout(const Dataset& ds, const SynthSpec* provenance, const std::string& root);

struct LoadResult {
    Dataset ds;
    std::vector<std::string> warnings;
};

/// Loads root/{split}/{video_id}/frames/*.png (+audio.wav, masks/*.png) into
/// per-frame samples. Missing masks are permitted in train (weak mode) and an
/// error in val/test. Missing split directories yield empty splits with a
/// warning.
LoadResult load_avsbench_layout(const std::string& root);

enum class Split { Train = 0, Val = 1, Test = 2 };
const char* split_name(Split s);

/// Dataset wrapper enforcing the weak-supervision API split: the training
/// surface exposes image/spectrogram/id/class only; every ground-truth mask
/// access goes through gt_mask() and is counted per split.
class SampleStore {
public:
    SampleStore(Dataset ds, const AudioConfig& audio);

    int size(Split s) const { return static_cast<int>(data_.split(static_cast<int>(s)).size()); }

    const std::string& id(Split s, int i) const { return at(s, i).id; }
    const Tensor& image(Split s, int i) const { return at(s, i).image; }
    const Spectrogram& spectrogram(Split s, int i) const;
    int class_id(Split s, int i) const { return at(s, i).class_id; }
    bool has_gt(Split s, int i) const { return at(s, i).has_gt(); }

    /// Evaluation-only surface; counted. Throws on absent masks.
    const BinaryMask& gt_mask(Split s, int i) const;

    int64_t gt_reads(Split s) const { return gt_reads_[static_cast<size_t>(s)].load(); }
    void reset_gt_read_counters();

    const AudioConfig& audio_config() const { return audio_; }

private:
    const SamplePair& at(Split s, int i) const { return data_.split(static_cast<int>(s))[static_cast<size_t>(i)]; }

    Dataset data_;
    AudioConfig audio_;
    std::array<std::vector<Spectrogram>, 3> spectrograms_;
    mutable std::array<std::atomic<int64_t>, 3> gt_reads_{};
};

}  // namespace avseg
