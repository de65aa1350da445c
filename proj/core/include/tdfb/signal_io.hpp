#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace tdfb {

inline constexpr int kSampleRate = 16000;

struct Waveform {
  std::vector<double> samples;
  int sample_rate = kSampleRate;

  std::size_t size() const { return samples.size(); }
};

inline constexpr std::size_t kToyClasses = 4;

struct ToyExample {
  Waveform wave;
  std::size_t label = 0;
};

/// Reads a RIFF/WAVE file holding mono PCM16 at 16 kHz. Samples are scaled
/// by 1/32768. Anything else is rejected with UnsupportedFormat; truncated or
/// malformed files raise ParseError carrying the byte offset.
Waveform load_wav(const std::filesystem::path& path);

/// Writes mono PCM16. Values are clamped to [-1, 1 - 1/32768] and rounded.
void save_wav(const Waveform& wave, const std::filesystem::path& path);

/// In-memory variants of the above, used by the file functions.
Waveform decode_wav(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_wav(const Waveform& wave);

/// Zero mean, unit population variance over the whole sequence
/// (x - mean) / sqrt(var + 1e-8). Requires at least two samples.
Waveform normalize_sequence(const Waveform& wave);

/// Deterministic labelled toy utterance: one second at 16 kHz containing a
/// gated burst of three sinusoids drawn from the class band and, in the other
/// half second, a white-noise reference burst of equal power, all over white
/// noise at 20 dB SNR relative to the tonal burst.
///
/// Class bands: 0: 200-500 Hz, 1: 700-1200 Hz, 2: 1800-2600 Hz,
/// 3: 3500-5000 Hz.
ToyExample synth_toy_example(std::size_t label, std::uint64_t seed);

struct Band {
  double low_hz;
  double high_hz;
};
Band toy_class_band(std::size_t label);

}  // namespace tdfb
