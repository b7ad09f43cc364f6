#include "ddavs/audio/waveform.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>

#include "ddavs/error.hpp"

namespace ddavs::audio {

double Waveform::peak() const noexcept {
  double p = 0.0;
  for (double s : samples) p = std::max(p, std::abs(s));
  return p;
}

double Waveform::power() const noexcept {
  if (samples.empty()) return 0.0;
  double e = 0.0;
  for (double s : samples) e += s * s;
  return e / static_cast<double>(samples.size());
}

void peak_normalize(Waveform& w) {
  const double p = w.peak();
  if (p <= 0.0) return;
  for (double& s : w.samples) s /= p;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>(v >> 8));
}

std::uint32_t get_u32(const unsigned char* p) {
  return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

std::uint16_t get_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

}  // namespace

void write_wav(const Waveform& w, const std::filesystem::path& path) {
  const auto n = static_cast<std::uint32_t>(w.samples.size());
  std::string out;
  out.reserve(44 + 2 * n);
  out += "RIFF";
  put_u32(out, 36 + 2 * n);
  out += "WAVEfmt ";
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out += "data";
  put_u32(out, 2 * n);
  for (double s : w.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const auto q = static_cast<std::int16_t>(std::lround(c * 32767.0));
    put_u16(out, static_cast<std::uint16_t>(q));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                         std::istreambuf_iterator<char>());
  using K = DecodeError::Kind;
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw DecodeError(K::BadMagic, path.string() + ": not a RIFF/WAVE file");
  }
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = get_u32(bytes.data() + pos + 4);
    const unsigned char* body = bytes.data() + pos + 8;
    if (pos + 8 + len > bytes.size()) {
      throw DecodeError(K::Truncated, path.string() + ": truncated chunk");
    }
    if (std::memcmp(bytes.data() + pos, "fmt ", 4) == 0) {
      if (len < 16) throw DecodeError(K::Malformed, path.string() + ": short fmt chunk");
      const auto format = get_u16(body), channels = get_u16(body + 2),
                 bits = get_u16(body + 14);
      const auto rate = get_u32(body + 4);
      if (format != 1 || channels != 1 || bits != 16 || rate != kSampleRate) {
        throw DecodeError(K::Malformed,
                          path.string() + ": expected 16-bit PCM mono at 16000 Hz");
      }
      have_fmt = true;
    } else if (std::memcmp(bytes.data() + pos, "data", 4) == 0) {
      if (!have_fmt) throw DecodeError(K::Malformed, path.string() + ": data before fmt");
      Waveform w;
      w.samples.resize(len / 2);
      for (std::size_t i = 0; i < w.samples.size(); ++i) {
        const auto raw = static_cast<std::int16_t>(get_u16(body + 2 * i));
        w.samples[i] = static_cast<double>(raw) / 32767.0;
      }
      return w;
    }
    pos += 8 + len + (len & 1);
  }
  throw DecodeError(K::Truncated, path.string() + ": no data chunk");
}

}  // namespace ddavs::audio
