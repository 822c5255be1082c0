#include "avseg/audio.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "avseg/kernels.hpp"

namespace avseg {

void Waveform::validate() const {
    if (samples.empty()) throw DataError("invalid waveform: empty");
    if (sample_rate <= 0.0) throw DataError("invalid waveform: sample_rate must be > 0");
    for (Scalar v : samples)
        if (!std::isfinite(v)) throw DataError("invalid waveform: non-finite sample");
}

void AudioConfig::validate() const {
    if (sample_rate <= 0.0) throw ConfigError("audio config: sample_rate must be > 0");
    if (window_ms <= 0.0 || hop_ms <= 0.0) throw ConfigError("audio config: window/hop must be > 0 ms");
    if (fft_size < 2 || fft_size % 2 != 0) throw ConfigError("audio config: fft_size must be even and >= 2");
    if (target_frames < 0) throw ConfigError("audio config: target_frames must be >= 0");
    if (window_samples() < 1 || hop_samples() < 1)
        throw ConfigError("audio config: window/hop shorter than one sample");
}

int AudioConfig::window_samples() const { return static_cast<int>(std::lround(window_ms * 1e-3 * sample_rate)); }
int AudioConfig::hop_samples() const { return static_cast<int>(std::lround(hop_ms * 1e-3 * sample_rate)); }

std::vector<Scalar> resample_linear(const std::vector<Scalar>& samples, double from_rate, double to_rate) {
    if (from_rate == to_rate) return samples;
    const double ratio = from_rate / to_rate;
    const size_t n_out = static_cast<size_t>(std::lround(samples.size() * to_rate / from_rate));
    std::vector<Scalar> out(std::max<size_t>(n_out, 1));
    for (size_t i = 0; i < out.size(); ++i) {
        const double x = i * ratio;
        size_t i0 = static_cast<size_t>(x);
        if (i0 >= samples.size() - 1) {
            out[i] = samples.back();
            continue;
        }
        const double f = x - i0;
        out[i] = (1.0 - f) * samples[i0] + f * samples[i0 + 1];
    }
    return out;
}

Spectrogram compute_spectrogram(const Waveform& w, const AudioConfig& cfg) {
    w.validate();
    cfg.validate();

    const std::vector<Scalar>* samples = &w.samples;
    std::vector<Scalar> resampled;
    if (w.sample_rate != cfg.sample_rate) {
        resampled = resample_linear(w.samples, w.sample_rate, cfg.sample_rate);
        samples = &resampled;
    }

    const int win = cfg.window_samples();
    if (static_cast<int>(samples->size()) < win) throw DataError("audio too short: needs at least one window");

    std::vector<Scalar> window(static_cast<size_t>(win));
    for (int t = 0; t < win; ++t) window[static_cast<size_t>(t)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * t / win);

    Tensor mag = kern::stft_mag(*samples, window, cfg.hop_samples(), cfg.fft_size);
    for (int64_t i = 0; i < mag.size(); ++i) mag[i] = std::log1p(mag[i]);

    Spectrogram s{std::move(mag)};
    if (cfg.target_frames > 0) s = pad_or_crop(s, cfg.target_frames);
    return s;
}

Spectrogram pad_or_crop(const Spectrogram& s, int target_t) {
    if (target_t < 1) throw ConfigError("pad_or_crop: target_T must be >= 1");
    const int f = s.freq_bins(), t = s.time_steps();
    if (t == target_t) return s;
    Tensor out(Shape{f, target_t});
    if (t > target_t) {
        const int start = (t - target_t) / 2;
        for (int i = 0; i < f; ++i)
            for (int j = 0; j < target_t; ++j) out(i, j) = s.values(i, start + j);
    } else {
        const int left = (target_t - t) / 2;
        for (int i = 0; i < f; ++i)
            for (int j = 0; j < target_t; ++j) {
                const int src = std::min(std::max(j - left, 0), t - 1);
                out(i, j) = s.values(i, src);
            }
    }
    return Spectrogram{std::move(out)};
}

// ---- WAV codec ---------------------------------------------------------------

namespace {

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) | (static_cast<uint32_t>(b[2]) << 16) |
           (static_cast<uint32_t>(b[3]) << 24);
}

uint16_t read_u16(std::istream& in) {
    unsigned char b[2];
    in.read(reinterpret_cast<char*>(b), 2);
    return static_cast<uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u16(std::ostream& out, uint16_t v) {
    const unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
    out.write(reinterpret_cast<const char*>(b), 2);
}

}  // namespace

Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open wav file: " + path);

    char tag[5] = {0};
    in.read(tag, 4);
    if (std::strncmp(tag, "RIFF", 4) != 0) throw DataError("not a RIFF file: " + path);
    read_u32(in);  // riff size
    in.read(tag, 4);
    if (std::strncmp(tag, "WAVE", 4) != 0) throw DataError("not a WAVE file: " + path);

    uint16_t format = 0, channels = 0, bits = 0;
    uint32_t rate = 0;
    bool have_fmt = false;
    Waveform w;
    while (in.read(tag, 4)) {
        const uint32_t chunk_size = read_u32(in);
        if (std::strncmp(tag, "fmt ", 4) == 0) {
            format = read_u16(in);
            channels = read_u16(in);
            rate = read_u32(in);
            read_u32(in);  // byte rate
            read_u16(in);  // block align
            bits = read_u16(in);
            if (chunk_size > 16) in.ignore(chunk_size - 16);
            have_fmt = true;
        } else if (std::strncmp(tag, "data", 4) == 0) {
            if (!have_fmt) throw DataError("wav data chunk before fmt: " + path);
            if (channels != 1) throw DataError("expected mono wav, got " + std::to_string(channels) + " channels: " + path);
            if (format == 1 && bits == 16) {
                const size_t n = chunk_size / 2;
                w.samples.resize(n);
                for (size_t i = 0; i < n; ++i) {
                    const uint16_t u = read_u16(in);
                    w.samples[i] = static_cast<int16_t>(u) / 32768.0;
                }
            } else if (format == 3 && bits == 32) {
                const size_t n = chunk_size / 4;
                w.samples.resize(n);
                for (size_t i = 0; i < n; ++i) {
                    const uint32_t u = read_u32(in);
                    float f;
                    std::memcpy(&f, &u, 4);
                    w.samples[i] = f;
                }
            } else {
                throw DataError("unsupported wav encoding (want PCM16 or float32): " + path);
            }
            w.sample_rate = rate;
            return w;
        } else {
            in.ignore(chunk_size + (chunk_size & 1));
        }
    }
    throw DataError("wav file has no data chunk: " + path);
}

void write_wav_pcm16(const std::string& path, const Waveform& w) {
    w.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write wav file: " + path);
    const uint32_t n = static_cast<uint32_t>(w.samples.size());
    const uint32_t rate = static_cast<uint32_t>(std::lround(w.sample_rate));
    out.write("RIFF", 4);
    write_u32(out, 36 + n * 2);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    write_u32(out, 16);
    write_u16(out, 1);  // PCM
    write_u16(out, 1);  // mono
    write_u32(out, rate);
    write_u32(out, rate * 2);
    write_u16(out, 2);
    write_u16(out, 16);
    out.write("data", 4);
    write_u32(out, n * 2);
    for (Scalar v : w.samples) {
        // scale by 32768 with clamping, the inverse of the reader's /32768
        const long q = std::lround(std::min(std::max(v, -1.0), 1.0) * 32768.0);
        const int16_t s = static_cast<int16_t>(std::min<long>(std::max<long>(q, -32768), 32767));
        write_u16(out, static_cast<uint16_t>(s));
    }
    if (!out) throw IoError("short write: " + path);
}

}  // namespace avseg
