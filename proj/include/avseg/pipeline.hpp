#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "avseg/checkpoint.hpp"
#include "avseg/data.hpp"
#include "avseg/encoders.hpp"
#include "avseg/fusion.hpp"
#include "avseg/losses.hpp"
#include "avseg/metrics.hpp"
#include "avseg/optim.hpp"
#include "avseg/pseudomask.hpp"
#include "avseg/segmentation.hpp"

namespace avseg {

enum class Mode { Weak, Supervised, AvfOnly, PmrOnly };

Mode mode_from_string(const std::string& s);
const char* mode_name(Mode m);

struct LossConfig {
    double temperature = 0.07;
    double w_avf = 1.0;
    double w_pmr = 1.0;
    bool contrast_on_fused = false;  // M2ICL runs on pre-fusion features by default
};

/// Configuration of the pseudo-mask (CCAM) pre-training phase.
struct PseudoPhaseConfig {
    EncoderConfig encoder;  // shallow, independent of the main backbone
    CcamConfig ccam;
    OptimConfig optimizer{.kind = "adam", .lr = 2e-3, .beta1 = 0.9, .beta2 = 0.999, .eps = 1e-8};
    int epochs = 12;
    int batch_size = 16;
    int regen_interval = 0;  // epochs between pseudo-mask regenerations; 0 = fixed once
};

struct RunConfig {
    Mode mode = Mode::Weak;
    EncoderConfig encoder;
    FusionConfig fusion;
    DecoderConfig decoder;
    LossConfig loss;
    PseudoPhaseConfig pseudomask;
    MetricConfig metric;
    OptimConfig optimizer;
    AudioConfig audio;
    int epochs = 20;
    int batch_size = 64;
    uint64_t seed = 0;
    std::string output_dir = "runs/default";
    int eval_every = 1;  // epochs between val-split evaluations; 0 disables

    static RunConfig full_profile();
    static RunConfig toy_profile();

    void validate() const;
    uint64_t model_hash() const;  // over everything that fixes parameter shapes

    std::string to_json() const;
    static RunConfig from_json(const std::string& text);
    /// dotted-path override, e.g. "optimizer.lr=0.001"
    void apply_override(const std::string& key_eq_value);
};

/// The trainable bundle: encoders + fusion + decoder.
class Model {
public:
    explicit Model(const RunConfig& cfg);

    ad::Var audio_embed(const Tensor& specs_b1ft) const;
    std::vector<ad::Var> visual_stages(const Tensor& images_b3hw) const;
    SoftMask predict_mask(const Tensor& image_3hw, const Spectrogram& spec) const;

    AudioEncoder& audio_encoder() { return *audio_enc_; }
    VisualEncoder& visual_encoder() { return *visual_enc_; }
    FusionModule& fusion() { return *fusion_; }
    FpnDecoder& decoder() { return *decoder_; }

    nn::ParamSet all_params() const;
    const RunConfig& config() const { return cfg_; }

    void save_checkpoint(const std::string& path, int64_t epoch, Adam* opt = nullptr) const;
    /// Restores parameters (and optimizer state when opt != nullptr); refuses
    /// checkpoints whose config hash differs.
    int64_t load_checkpoint(const std::string& path, Adam* opt = nullptr);

private:
    RunConfig cfg_;
    std::unique_ptr<AudioEncoder> audio_enc_;
    std::unique_ptr<VisualEncoder> visual_enc_;
    std::unique_ptr<FusionModule> fusion_;
    std::unique_ptr<FpnDecoder> decoder_;
};

struct PseudoMaskStore {
    std::map<std::string, BinaryMask> by_id;

    const BinaryMask& require(const std::string& id) const;
    static PseudoMaskStore from_dir(const std::string& dir);  // reads manifest.jsonl
};

struct PseudoPhase {
    std::unique_ptr<CcamModel> model;
    std::unique_ptr<Adam> opt;  // kept so regeneration intervals can keep training
    PseudoMaskStore masks;
    double final_loss = 0.0;
    bool flipped = false;
};

/// Trains the CCAM encoder+head on train-split images (no ground truth is
/// touched), calibrates foreground orientation, and derives one pseudo mask
/// per training sample.
PseudoPhase run_pseudomask_phase(const RunConfig& cfg, const SampleStore& data);

struct EpochRecord {
    int epoch = 0;
    LossReport mean_loss;
    double val_miou = -1.0, val_fscore = -1.0;  // -1 when not evaluated
};

struct TrainResult {
    std::string final_checkpoint;
    std::vector<EpochRecord> epochs;
};

/// End-to-end training per the configured mode. Writes ckpt_epoch_K.bin and
/// train_log.jsonl under cfg.output_dir; deterministic under cfg.seed;
/// resumable from a checkpoint path. Weak/pmr modes consume pseudo masks
/// (phase runs internally when `pseudo` is null). Aborts with a diagnostic
/// dump on NaN loss.
TrainResult train(const RunConfig& cfg, SampleStore& data, PseudoPhase* pseudo = nullptr,
                  const std::string& resume_from = "");

MetricsReport evaluate_model(const Model& model, SampleStore& data, Split split, const RunConfig& cfg,
                             const std::string& mask_out_dir = "");
MetricsReport evaluate(const std::string& checkpoint_path, SampleStore& data, Split split, const RunConfig& cfg,
                       const std::string& out_dir = "");

struct SweepPoint {
    double axis_value = 0.0;
    double miou = 0.0, fscore = 0.0;
    bool skipped = false;
    std::string note;
};

struct SweepReport {
    std::string axis;
    std::vector<SweepPoint> points;
    std::string csv_path, plot_path;
};

/// axis is "fusion_stages" (1..4) or "batch_size" ({8,16,32,64,128}); one
/// training run per value under a shared seed; invalid values are skipped
/// with a warning note.
SweepReport sweep(const RunConfig& base, SampleStore& data, const std::string& axis,
                  const std::string& out_dir);

/// Renders loss-vs-epoch and metric-vs-epoch charts (plus backing CSVs) from
/// the run's train_log.jsonl.
std::vector<std::string> plot_losses(const std::string& run_dir);

}  // namespace avseg
