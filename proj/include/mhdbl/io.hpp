#pragma once

// Binary checkpoints, git-style content hashes and the run manifest.
//
// Checkpoint layout (little-endian):
//   "MHDL" | u32 version | domain | f64 time | u32 field count | fields...
//   domain = i32 dim, f64 Lx, f64 Ly, f64 Zmax, i32 Nx, i32 Ny, i32 Nz,
//            f64 stretch, f64 ell, f64 nu, f64 mu, f64 eps
//   field  = u32 name length | name bytes | nk * Nz interleaved f64 (re, im),
//            k-major then z

#include <openssl/evp.h>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mhdbl/auxiliary.hpp"
#include "mhdbl/errors.hpp"
#include "mhdbl/solver.hpp"

namespace mhdbl {

inline constexpr char kCheckpointMagic[4] = {'M', 'H', 'D', 'L'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  DomainConfig domain;
  State state;
  std::optional<AuxState> aux;

  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

class ByteWriter {
public:
  void u32(std::uint32_t v) { put(v, 4); }
  void i32(std::int32_t v) { put(static_cast<std::uint32_t>(v), 4); }
  void f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }
  void bytes(const std::string& s) { out_.insert(out_.end(), s.begin(), s.end()); }
  const std::string& str() const { return out_; }

private:
  void put(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  std::string out_;
};

class ByteReader {
public:
  ByteReader(const std::string& data, std::string source) : data_(data), source_(std::move(source)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::int32_t i32() { return static_cast<std::int32_t>(static_cast<std::uint32_t>(get(4))); }
  double f64() { return std::bit_cast<double>(get(8)); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (pos_ + n > data_.size())
      throw IoError(source_ + ": truncated checkpoint: expected at least " + std::to_string(pos_ + n) + " bytes, got " +
                    std::to_string(data_.size()));
  }
  std::size_t position() const { return pos_; }
  std::size_t size() const { return data_.size(); }

private:
  std::uint64_t get(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::string& data_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::vector<std::pair<std::string, const Field*>> named_fields(const Checkpoint& c) {
  std::vector<std::pair<std::string, const Field*>> out;
  const State& s = c.state;
  const char* tangential_u[] = {"u", "v"};
  const char* tangential_f[] = {"f", "g"};
  for (std::size_t a = 0; a < s.u_h.size(); ++a) out.emplace_back(tangential_u[a], &s.u_h[a]);
  for (std::size_t a = 0; a < s.f_h.size(); ++a) out.emplace_back(tangential_f[a], &s.f_h[a]);
  out.emplace_back("w", &s.w);
  if (s.magnetic()) out.emplace_back("h", &s.h);
  if (c.aux) {
    auto add = [&](const char* base, const std::vector<Field>& fs) {
      for (std::size_t i = 0; i < fs.size(); ++i) out.emplace_back(std::string("aux.") + base + std::to_string(i), &fs[i]);
    };
    add("V", c.aux->V);
    add("U", c.aux->U);
    add("lambda", c.aux->lambda);
    add("delta", c.aux->delta);
  }
  return out;
}

inline void write_domain(ByteWriter& w, const DomainConfig& d) {
  w.i32(d.dim);
  w.f64(d.Lx);
  w.f64(d.Ly);
  w.f64(d.Zmax);
  w.i32(d.Nx);
  w.i32(d.Ny);
  w.i32(d.Nz);
  w.f64(d.stretch);
  w.f64(d.ell);
  w.f64(d.nu);
  w.f64(d.mu);
  w.f64(d.eps);
}

inline DomainConfig read_domain(ByteReader& r) {
  DomainConfig d;
  d.dim = r.i32();
  d.Lx = r.f64();
  d.Ly = r.f64();
  d.Zmax = r.f64();
  d.Nx = r.i32();
  d.Ny = r.i32();
  d.Nz = r.i32();
  d.stretch = r.f64();
  d.ell = r.f64();
  d.nu = r.f64();
  d.mu = r.f64();
  d.eps = r.f64();
  return d;
}

}  // namespace detail

inline std::string serialize_checkpoint(const Checkpoint& c) {
  detail::ByteWriter w;
  w.bytes(std::string(kCheckpointMagic, 4));
  w.u32(kCheckpointVersion);
  detail::write_domain(w, c.domain);
  w.f64(c.state.t);
  const auto fields = detail::named_fields(c);
  w.u32(static_cast<std::uint32_t>(fields.size()));
  for (const auto& [name, f] : fields) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name);
    for (const cplx& v : f->spectrum()) {
      w.f64(v.real());
      w.f64(v.imag());
    }
  }
  return w.str();
}

inline Checkpoint deserialize_checkpoint(const std::string& data, const std::string& source = "checkpoint") {
  detail::ByteReader r(data, source);
  if (data.size() < 4 || std::memcmp(data.data(), kCheckpointMagic, 4) != 0)
    throw IoError(source + ": checkpoint version error: missing MHDL magic");
  r.bytes(4);
  const std::uint32_t version = r.u32();
  if (version != kCheckpointVersion)
    throw IoError(source + ": checkpoint version error: file has version " + std::to_string(version) + ", reader supports " +
                  std::to_string(kCheckpointVersion));
  Checkpoint c;
  c.domain = detail::read_domain(r);
  const double t = r.f64();
  const std::uint32_t count = r.u32();
  try {
    c.domain.validate();
  } catch (const ConfigError& e) {
    throw IoError(source + ": corrupt checkpoint header: " + e.what());
  }
  auto grid = make_grid(c.domain);
  const std::size_t payload = grid->size() * 16;

  // Walk the names once to learn the expected total size.
  std::vector<std::pair<std::string, std::size_t>> index;
  std::size_t expected = r.position();
  for (std::uint32_t i = 0; i < count; ++i) {
    if (expected + 4 > data.size())
      throw IoError(source + ": truncated checkpoint: expected at least " + std::to_string(expected + 4) + " bytes, got " +
                    std::to_string(data.size()));
    std::uint32_t len = 0;
    for (int b = 0; b < 4; ++b) len |= static_cast<std::uint32_t>(static_cast<unsigned char>(data[expected + b])) << (8 * b);
    if (expected + 4 + len > data.size())
      throw IoError(source + ": truncated checkpoint: expected at least " + std::to_string(expected + 4 + len) + " bytes, got " +
                    std::to_string(data.size()));
    index.emplace_back(data.substr(expected + 4, len), expected + 4 + len);
    expected += 4 + len + payload;
  }
  if (data.size() != expected)
    throw IoError(source + ": truncated checkpoint: expected " + std::to_string(expected) + " bytes, got " +
                  std::to_string(data.size()));

  State s;
  s.t = t;
  AuxState aux;
  aux.t = t;
  bool has_aux = false;
  for (const auto& [name, offset] : index) {
    Field f(grid);
    detail::ByteReader fr(data, source);
    fr.bytes(offset);
    for (cplx& v : f.spectrum()) {
      const double re = fr.f64();
      const double im = fr.f64();
      v = {re, im};
    }
    auto numbered = [&](const std::string& base, std::vector<Field>& into) {
      if (name.rfind(base, 0) != 0) return false;
      into.push_back(std::move(f));
      has_aux = true;
      return true;
    };
    if (name == "u" || name == "v") {
      s.u_h.push_back(std::move(f));
    } else if (name == "f" || name == "g") {
      s.f_h.push_back(std::move(f));
    } else if (name == "w") {
      s.w = std::move(f);
    } else if (name == "h") {
      s.h = std::move(f);
    } else if (!numbered("aux.V", aux.V) && !numbered("aux.U", aux.U) && !numbered("aux.lambda", aux.lambda) &&
               !numbered("aux.delta", aux.delta)) {
      throw IoError(source + ": unknown field '" + name + "' in checkpoint");
    }
  }
  const std::size_t nh = static_cast<std::size_t>(c.domain.dim - 1);
  if (s.u_h.size() != nh || s.w.empty() || (!s.f_h.empty() && (s.f_h.size() != nh || s.h.empty())))
    throw IoError(source + ": checkpoint is missing state fields");
  c.state = std::move(s);
  if (has_aux) c.aux = std::move(aux);
  return c;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), {});
}

inline void write_file(const std::filesystem::path& path, const std::string& data) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(data.data(), static_cast<std::streamsize>(data.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void write_checkpoint(const std::filesystem::path& path, const Checkpoint& c) { write_file(path, serialize_checkpoint(c)); }

inline Checkpoint read_checkpoint(const std::filesystem::path& path) { return deserialize_checkpoint(read_file(path), path.string()); }

// SHA-1 of "blob <size>\0" + data, as git computes object ids.
inline std::string git_blob_hash(const std::string& data) {
  const std::string header = "blob " + std::to_string(data.size()) + '\0';
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw IoError("EVP_MD_CTX_new failed");
  const bool ok = EVP_DigestInit_ex(ctx, EVP_sha1(), nullptr) == 1 && EVP_DigestUpdate(ctx, header.data(), header.size()) == 1 &&
                  EVP_DigestUpdate(ctx, data.data(), data.size()) == 1 && EVP_DigestFinal_ex(ctx, digest, &len) == 1;
  EVP_MD_CTX_free(ctx);
  if (!ok) throw IoError("SHA-1 computation failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

}  // namespace mhdbl
