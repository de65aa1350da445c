#include "tdfb/signal_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <string>
#include <utility>

#include "standardize.hpp"
#include "tdfb/errors.hpp"

namespace tdfb {
namespace {

class ByteReader {
 public:
  explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return bytes_.size() - pos_; }

  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw ParseError(std::string("truncated WAV: expected ") + what, pos_);
    }
  }
  std::uint16_t u16(const char* what) {
    need(2, what);
    const std::uint16_t v = static_cast<std::uint16_t>(bytes_[pos_] | (bytes_[pos_ + 1] << 8));
    pos_ += 2;
    return v;
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | bytes_[pos_ + i];
    pos_ += 4;
    return v;
  }
  std::string tag(const char* what) {
    need(4, what);
    std::string t(bytes_.begin() + pos_, bytes_.begin() + pos_ + 4);
    pos_ += 4;
    return t;
  }
  void skip(std::size_t n, const char* what) {
    need(n, what);
    pos_ += n;
  }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) {
  out.insert(out.end(), tag, tag + 4);
}

}  // namespace

Waveform decode_wav(const std::vector<std::uint8_t>& bytes) {
  ByteReader in(bytes);
  if (in.tag("RIFF tag") != "RIFF") throw ParseError("missing RIFF tag", 0);
  in.u32("RIFF size");
  if (in.tag("WAVE tag") != "WAVE") throw ParseError("missing WAVE tag", 8);

  bool have_fmt = false;
  int sample_rate = 0;
  while (true) {
    const std::size_t chunk_start = in.offset();
    const std::string id = in.tag("chunk id");
    const std::uint32_t size = in.u32("chunk size");
    if (id == "fmt ") {
      if (size < 16) throw ParseError("fmt chunk shorter than 16 bytes", chunk_start);
      in.need(size, "fmt chunk body");
      const std::uint16_t format = in.u16("audio format");
      const std::uint16_t channels = in.u16("channel count");
      const std::uint32_t rate = in.u32("sample rate");
      in.u32("byte rate");
      in.u16("block align");
      const std::uint16_t bits = in.u16("bits per sample");
      in.skip(size - 16, "fmt extension");
      if (format != 1) {
        throw UnsupportedFormat("unsupported WAV audio format tag " + std::to_string(format) +
                                " (only PCM, tag 1)");
      }
      if (channels != 1) {
        throw UnsupportedFormat("unsupported WAV channel count " + std::to_string(channels) +
                                " (mono only)");
      }
      if (bits != 16) {
        throw UnsupportedFormat("unsupported WAV bits per sample " + std::to_string(bits) +
                                " (16 only)");
      }
      if (rate != static_cast<std::uint32_t>(kSampleRate)) {
        throw UnsupportedFormat("unsupported WAV sample rate " + std::to_string(rate) +
                                " (16000 only)");
      }
      sample_rate = static_cast<int>(rate);
      have_fmt = true;
    } else if (id == "data") {
      if (!have_fmt) throw ParseError("data chunk before fmt chunk", chunk_start);
      if (size % 2 != 0) throw ParseError("odd data chunk size for PCM16", chunk_start);
      in.need(size, "data chunk body");
      if (size == 0) throw ParseError("empty data chunk", chunk_start);
      Waveform wave;
      wave.sample_rate = sample_rate;
      wave.samples.reserve(size / 2);
      for (std::uint32_t i = 0; i < size / 2; ++i) {
        const auto raw = static_cast<std::int16_t>(in.u16("sample"));
        wave.samples.push_back(static_cast<double>(raw) / 32768.0);
      }
      return wave;
    } else {
      in.skip(size + (size & 1u), "chunk body");
    }
  }
}

std::vector<std::uint8_t> encode_wav(const Waveform& wave) {
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(wave.samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(wave.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double x : wave.samples) {
    if (!std::isfinite(x)) throw ContractViolation("save_wav: non-finite sample");
    const double clamped = std::clamp(x, -1.0, 1.0 - 1.0 / 32768.0);
    const long q = std::clamp(std::lround(clamped * 32768.0), -32768L, 32767L);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  return out;
}

Waveform load_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes);
}

void save_wav(const Waveform& wave, const std::filesystem::path& path) {
  const auto bytes = encode_wav(wave);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

Waveform normalize_sequence(const Waveform& wave) {
  if (wave.samples.size() < 2) {
    throw ContractViolation("normalize_sequence: need at least 2 samples, got " +
                            std::to_string(wave.samples.size()));
  }
  Waveform out;
  out.sample_rate = wave.sample_rate;
  out.samples.resize(wave.samples.size());
  detail::standardize(wave.samples, out.samples);
  return out;
}

Band toy_class_band(std::size_t label) {
  switch (label) {
    case 0: return {200.0, 500.0};
    case 1: return {700.0, 1200.0};
    case 2: return {1800.0, 2600.0};
    case 3: return {3500.0, 5000.0};
    default:
      throw ContractViolation("toy class must be < 4, got " + std::to_string(label));
  }
}

ToyExample synth_toy_example(std::size_t label, std::uint64_t seed) {
  const Band band = toy_class_band(label);
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(label), 0x7d1fu};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  constexpr std::size_t n = kSampleRate;
  constexpr double fs = kSampleRate;
  constexpr double two_pi = 2.0 * std::numbers::pi;

  std::vector<double> tone(n, 0.0);
  for (int k = 0; k < 3; ++k) {
    const double freq = band.low_hz + (band.high_hz - band.low_hz) * unit(rng);
    const double phase = two_pi * unit(rng);
    const double amp = 0.5 + 0.5 * unit(rng);
    for (std::size_t i = 0; i < n; ++i) {
      tone[i] += 0.25 * amp * std::cos(two_pi * freq * static_cast<double>(i) / fs + phase);
    }
  }

  // The tonal burst and a broadband reference burst of equal power occupy
  // opposite halves of the second (order random). Each lasts [250, 400) ms
  // at a random position inside its half, with 10 ms raised-cosine ramps.
  // Per-channel normalization removes absolute levels, so class identity is
  // carried by each channel's tonal response relative to its broadband one.
  const bool tone_first = unit(rng) < 0.5;
  auto place = [&](std::size_t half) {
    const auto length = static_cast<std::size_t>((0.25 + 0.15 * unit(rng)) * fs);
    const std::size_t slack = n / 2 - length;
    const auto onset = half * (n / 2) + static_cast<std::size_t>(unit(rng) * static_cast<double>(slack));
    return std::pair{onset, length};
  };
  const auto [tone_onset, tone_length] = place(tone_first ? 0 : 1);
  const auto [ref_onset, ref_length] = place(tone_first ? 1 : 0);

  constexpr std::size_t ramp = 160;
  auto gate = [&](std::size_t i, std::size_t onset, std::size_t length) {
    if (i < onset || i >= onset + length) return 0.0;
    const std::size_t edge = std::min(i - onset, onset + length - 1 - i);
    if (edge >= ramp) return 1.0;
    return 0.5 - 0.5 * std::cos(std::numbers::pi * static_cast<double>(edge) /
                                static_cast<double>(ramp));
  };

  double active_power = 0.0;
  for (std::size_t i = tone_onset + ramp; i + ramp < tone_onset + tone_length; ++i) {
    active_power += tone[i] * tone[i];
  }
  active_power /= static_cast<double>(tone_length - 2 * ramp);

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double ref_sd = std::sqrt(active_power);
  const double noise_sd = std::sqrt(active_power / 100.0);  // 20 dB below the burst
  ToyExample ex;
  ex.label = label;
  ex.wave.sample_rate = kSampleRate;
  ex.wave.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ref = ref_sd * gauss(rng) * gate(i, ref_onset, ref_length);
    ex.wave.samples[i] = tone[i] * gate(i, tone_onset, tone_length) + ref + noise_sd * gauss(rng);
  }
  return ex;
}

}  // namespace tdfb
