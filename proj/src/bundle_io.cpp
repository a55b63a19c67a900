#include "halluguard/bundle_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <string>

#include "halluguard/error.hpp"

namespace halluguard {
namespace {

constexpr std::uint32_t kAbsentRougeBits = 0x7FC00000u;  // quiet NaN

class Writer {
 public:
  explicit Writer(std::ostream& os) : os_(os) {}

  void u8(std::uint8_t v) {
    os_.put(static_cast<char>(v));
    ++written_;
  }

  void u32(std::uint32_t v) {
    char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
    os_.write(buf, 4);
    written_ += 4;
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    os_.write(s.data(), static_cast<std::streamsize>(s.size()));
    written_ += s.size();
  }

  std::size_t written() const { return written_; }

 private:
  std::ostream& os_;
  std::size_t written_ = 0;
};

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string bytes(std::size_t n, const std::string& section) {
    // Chunked so a corrupted length field cannot force a huge allocation
    // before the stream runs dry.
    constexpr std::size_t kChunk = 1 << 20;
    std::string out;
    while (out.size() < n) {
      const std::size_t want = std::min(kChunk, n - out.size());
      const std::size_t old = out.size();
      out.resize(old + want);
      is_.read(out.data() + old, static_cast<std::streamsize>(want));
      const auto got = static_cast<std::size_t>(is_.gcount());
      offset_ += got;
      if (got != want) throw TruncatedError(section, offset_);
    }
    return out;
  }

  std::uint8_t u8(const std::string& section) {
    return static_cast<std::uint8_t>(bytes(1, section)[0]);
  }

  std::uint32_t u32(const std::string& section) {
    return decode_u32(bytes(4, section).data());
  }

  float f32(const std::string& section) {
    return std::bit_cast<float>(u32(section));
  }

  std::string str(const std::string& section) {
    const std::uint32_t n = u32(section);
    return bytes(n, section);
  }

  std::vector<std::uint32_t> u32_array(std::size_t n, const std::string& section) {
    const std::string raw = bytes(checked_mul(n, 4, section), section);
    std::vector<std::uint32_t> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = decode_u32(raw.data() + 4 * i);
    return out;
  }

  std::vector<float> f32_array(std::size_t n, const std::string& section) {
    const std::string raw = bytes(checked_mul(n, 4, section), section);
    std::vector<float> out(n);
    for (std::size_t i = 0; i < n; ++i) {
      out[i] = std::bit_cast<float>(decode_u32(raw.data() + 4 * i));
    }
    return out;
  }

  std::size_t offset() const { return offset_; }

 private:
  static std::uint32_t decode_u32(const char* p) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(p[i])) << (8 * i);
    }
    return v;
  }

  std::size_t checked_mul(std::size_t a, std::size_t b, const std::string& section) {
    if (b != 0 && a > std::numeric_limits<std::size_t>::max() / b) {
      throw TruncatedError(section, offset_);
    }
    return a * b;
  }

  std::istream& is_;
  std::size_t offset_ = 0;
};

bool has_non_finite(const TrajectoryBundle& b) {
  auto bad = [](const std::vector<float>& v) {
    return std::any_of(v.begin(), v.end(), [](float x) { return !std::isfinite(x); });
  };
  if (b.rouge_to_ref && !std::isfinite(*b.rouge_to_ref)) return true;
  for (const auto& g : b.generations) {
    if (bad(g.logprob) || bad(g.step_entropy) || bad(g.step_lse) ||
        bad(g.sent_embed)) {
      return true;
    }
    if (g.step_states && bad(*g.step_states)) return true;
  }
  return false;
}

std::string gen_section(std::size_t g, const char* field) {
  return "generation[" + std::to_string(g) + "]." + field;
}

}  // namespace

std::size_t encoded_size(const TrajectoryBundle& b) {
  std::size_t n = 4 + 4 + 4 + 4 + 4 + 1 + 1 + 4;
  n += 4 + b.prompt_id.size();
  n += 4 + b.prompt_text.size();
  for (const auto& r : b.references) n += 4 + r.size();
  n += 4;
  for (const auto& [key, value] : b.meta) n += 8 + key.size() + value.size();
  for (const auto& g : b.generations) {
    const std::size_t steps = g.steps();
    n += 4 + 1 + 4 * steps * 4 + 4 + g.text.size() + 4 * b.embed_dim;
    if (g.step_states) n += 4 * steps * b.embed_dim;
  }
  return n;
}

std::size_t write_bundle(const TrajectoryBundle& b, std::ostream& sink) {
  if (has_non_finite(b)) {
    throw Error(ErrorCode::kNonFinite, "bundle '" + b.prompt_id +
                                           "' contains non-finite floats");
  }
  const ValidationReport report = validate_bundle(b);
  if (!report.ok) {
    throw Error(ErrorCode::kInvalidBundle,
                "bundle '" + b.prompt_id + "': " + report.violations.front());
  }

  Writer w(sink);
  for (char c : kBundleMagic) w.u8(static_cast<std::uint8_t>(c));
  w.u32(kBundleVersion);
  w.u32(static_cast<std::uint32_t>(b.k()));
  w.u32(b.embed_dim);
  w.u32(static_cast<std::uint32_t>(b.references.size()));
  w.u8(b.label ? 1 : 0);
  w.u8(b.label.value_or(0));
  if (b.rouge_to_ref) {
    w.f32(*b.rouge_to_ref);
  } else {
    w.u32(kAbsentRougeBits);
  }
  w.str(b.prompt_id);
  w.str(b.prompt_text);
  for (const auto& r : b.references) w.str(r);
  w.u32(static_cast<std::uint32_t>(b.meta.size()));
  for (const auto& [key, value] : b.meta) {
    w.str(key);
    w.str(value);
  }
  for (const auto& g : b.generations) {
    w.u32(static_cast<std::uint32_t>(g.steps()));
    w.u8(g.step_states ? 1 : 0);
    for (TokenId t : g.tokens) w.u32(t);
    for (float v : g.logprob) w.f32(v);
    for (float v : g.step_entropy) w.f32(v);
    for (float v : g.step_lse) w.f32(v);
    w.str(g.text);
    for (float v : g.sent_embed) w.f32(v);
    if (g.step_states) {
      for (float v : *g.step_states) w.f32(v);
    }
  }
  if (!sink) throw Error(ErrorCode::kIo, "write failed");
  return w.written();
}

TrajectoryBundle read_bundle(std::istream& source, bool check) {
  Reader r(source);
  const std::string magic = r.bytes(4, "magic");
  if (std::memcmp(magic.data(), kBundleMagic, 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "expected magic \"HGB1\"");
  }
  const std::uint32_t version = r.u32("header");
  if (version != kBundleVersion) {
    throw Error(ErrorCode::kVersionMismatch,
                "unsupported bundle version " + std::to_string(version));
  }

  TrajectoryBundle b;
  const std::uint32_t k = r.u32("header");
  b.embed_dim = r.u32("header");
  const std::uint32_t ref_count = r.u32("header");
  const std::uint8_t has_label = r.u8("header");
  const std::uint8_t label = r.u8("header");
  if (has_label) b.label = label;
  const float rouge = r.f32("header");
  if (!std::isnan(rouge)) b.rouge_to_ref = rouge;

  b.prompt_id = r.str("prompt_id");
  b.prompt_text = r.str("prompt_text");
  for (std::uint32_t i = 0; i < ref_count; ++i) {
    b.references.push_back(r.str("reference[" + std::to_string(i) + "]"));
  }
  const std::uint32_t meta_count = r.u32("meta_count");
  for (std::uint32_t i = 0; i < meta_count; ++i) {
    const std::string section = "meta[" + std::to_string(i) + "]";
    std::string key = r.str(section);
    b.meta[std::move(key)] = r.str(section);
  }

  for (std::uint32_t g = 0; g < k; ++g) {
    Generation gen;
    const std::uint32_t steps = r.u32(gen_section(g, "header"));
    const std::uint8_t has_states = r.u8(gen_section(g, "header"));
    gen.tokens = r.u32_array(steps, gen_section(g, "tokens"));
    gen.logprob = r.f32_array(steps, gen_section(g, "logprob"));
    gen.step_entropy = r.f32_array(steps, gen_section(g, "step_entropy"));
    gen.step_lse = r.f32_array(steps, gen_section(g, "step_lse"));
    gen.text = r.str(gen_section(g, "text"));
    gen.sent_embed = r.f32_array(b.embed_dim, gen_section(g, "sent_embed"));
    if (has_states) {
      gen.step_states = r.f32_array(static_cast<std::size_t>(steps) * b.embed_dim,
                                    gen_section(g, "step_states"));
    }
    b.generations.push_back(std::move(gen));
  }

  if (!check) return b;
  const ValidationReport report = validate_bundle(b);
  if (!report.ok) {
    throw Error(ErrorCode::kInvalidBundle,
                "bundle '" + b.prompt_id + "': " + report.violations.front());
  }
  return b;
}

std::size_t write_bundle_file(const TrajectoryBundle& bundle,
                              const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorCode::kIo, "cannot open " + path.string() + " for writing");
  return write_bundle(bundle, os);
}

TrajectoryBundle read_bundle_file(const std::filesystem::path& path, bool check) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return read_bundle(is, check);
}

}  // namespace halluguard
