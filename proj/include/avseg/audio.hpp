#pragma once

#include <string>
#include <vector>

#include "avseg/tensor.hpp"

namespace avseg {

struct Waveform {
    std::vector<Scalar> samples;
    double sample_rate = 22050.0;

    void validate() const;
};

/// Log-magnitude time-frequency matrix, frequency bands x timesteps.
struct Spectrogram {
    Tensor values;  // [F, T]

    int freq_bins() const { return values.dim(0); }
    int time_steps() const { return values.dim(1); }
};

struct AudioConfig {
    double sample_rate = 22050.0;
    double window_ms = 50.0;
    double hop_ms = 25.0;
    int fft_size = 512;       // 257 bands at full scale
    int target_frames = 300;  // 0 disables time-axis normalization

    void validate() const;
    int freq_bins() const { return fft_size / 2 + 1; }
    int window_samples() const;
    int hop_samples() const;
};

/// Periodic Hann STFT -> log(1 + |.|) -> time axis normalized to
/// cfg.target_frames (centered crop / edge pad). Input is resampled to
/// cfg.sample_rate first when rates differ (linear interpolation).
Spectrogram compute_spectrogram(const Waveform& w, const AudioConfig& cfg);

/// Time axis to exactly target_t: centered window when cropping, edge
/// replication (split evenly, left first) when padding.
Spectrogram pad_or_crop(const Spectrogram& s, int target_t);

std::vector<Scalar> resample_linear(const std::vector<Scalar>& samples, double from_rate, double to_rate);

// mono WAV codec; readers accept PCM16 and IEEE float32
Waveform read_wav(const std::string& path);
void write_wav_pcm16(const std::string& path, const Waveform& w);

}  // namespace avseg
