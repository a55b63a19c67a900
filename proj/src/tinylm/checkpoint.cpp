#include "halluguard/tinylm/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <istream>
#include <ostream>

#include "halluguard/error.hpp"

namespace halluguard::tinylm {
namespace {

constexpr char kMagic[4] = {'H', 'G', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(buf, 8);
}

void put_u32(std::ostream& os, std::uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xFFu);
  os.write(buf, 4);
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::uint64_t uint(int bytes, const char* section) {
    char buf[8];
    is_.read(buf, bytes);
    const auto got = static_cast<std::size_t>(is_.gcount());
    offset_ += got;
    if (got != static_cast<std::size_t>(bytes)) throw TruncatedError(section, offset_);
    std::uint64_t v = 0;
    for (int i = 0; i < bytes; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
    return v;
  }

  std::string bytes(std::size_t n, const char* section) {
    std::string s(n, '\0');
    is_.read(s.data(), static_cast<std::streamsize>(n));
    offset_ += static_cast<std::size_t>(is_.gcount());
    if (static_cast<std::size_t>(is_.gcount()) != n) throw TruncatedError(section, offset_);
    return s;
  }

 private:
  std::istream& is_;
  std::size_t offset_ = 0;
};

}  // namespace

void save_checkpoint(std::ostream& out, const TinyLM& model, const Vocabulary& vocab) {
  const auto& c = model.config();
  out.write(kMagic, 4);
  put_u32(out, kVersion);
  for (int v : {c.vocab_size, c.d_model, c.n_layers, c.n_heads, c.d_ff, c.context_len}) {
    put_u32(out, static_cast<std::uint32_t>(v));
  }
  put_u64(out, c.seed);
  put_u32(out, static_cast<std::uint32_t>(vocab.alphabet().size()));
  out.write(vocab.alphabet().data(), static_cast<std::streamsize>(vocab.alphabet().size()));
  put_u32(out, static_cast<std::uint32_t>(model.tensors().size()));
  for (std::size_t i = 0; i < model.tensors().size(); ++i) {
    const auto t = model.tensor(static_cast<int>(i));
    for (Eigen::Index r = 0; r < t.rows(); ++r) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(t(r, c))));
    }
  }
  if (!out) throw Error(ErrorCode::kIo, "failed writing checkpoint");
}

void save_checkpoint(const std::string& path, const TinyLM& model, const Vocabulary& vocab) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open " + path + " for writing");
  save_checkpoint(out, model, vocab);
}

Checkpoint load_checkpoint(std::istream& in) {
  Reader r(in);
  if (r.bytes(4, "magic") != std::string(kMagic, 4)) throw Error(ErrorCode::kBadMagic, "not a tiny LM checkpoint");
  const auto version = r.uint(4, "version");
  if (version != kVersion) {
    throw Error(ErrorCode::kVersionMismatch, "unsupported checkpoint version " + std::to_string(version));
  }
  TinyLMConfig c;
  int* fields[] = {&c.vocab_size, &c.d_model, &c.n_layers, &c.n_heads, &c.d_ff, &c.context_len};
  for (int* f : fields) {
    const auto v = r.uint(4, "config");
    if (v > 1u << 20) throw Error(ErrorCode::kParse, "implausible config value " + std::to_string(v));
    *f = static_cast<int>(v);
  }
  c.seed = r.uint(8, "config");
  const auto alphabet_len = r.uint(4, "alphabet");
  if (alphabet_len > 253) throw Error(ErrorCode::kParse, "alphabet too long");
  Vocabulary vocab(r.bytes(alphabet_len, "alphabet"));
  if (vocab.size() != c.vocab_size) {
    throw Error(ErrorCode::kParse, "vocab_size " + std::to_string(c.vocab_size) + " does not match alphabet");
  }
  try {
    c.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kParse, std::string("bad checkpoint config: ") + e.what());
  }
  TinyLM model(c);
  const auto n = r.uint(4, "tensors");
  if (n != model.tensors().size()) {
    throw Error(ErrorCode::kParse, "tensor count " + std::to_string(n) + " does not match config");
  }
  for (std::size_t i = 0; i < n; ++i) {
    auto t = model.tensor_in(model.parameters(), static_cast<int>(i));
    for (Eigen::Index row = 0; row < t.rows(); ++row) {
      for (Eigen::Index c = 0; c < t.cols(); ++c) {
        t(row, c) = std::bit_cast<float>(static_cast<std::uint32_t>(r.uint(4, "tensors")));
      }
    }
  }
  return Checkpoint{std::move(model), std::move(vocab)};
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  return load_checkpoint(in);
}

}  // namespace halluguard::tinylm
