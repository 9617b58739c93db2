#include "panoweave/ntf.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>

#include "panoweave/errors.hpp"

namespace panoweave {

namespace {

constexpr char kTensorMagic[4] = {'N', 'T', 'F', '1'};
constexpr char kBundleMagic[4] = {'N', 'T', 'B', '1'};

void put_u32(std::string& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff),
               static_cast<char>((v >> 24) & 0xff)};
  out.append(b, 4);
}

void put_f32(std::string& out, float v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

struct Cursor {
  const std::string& bytes;
  std::size_t pos = 0;
  const std::string& origin;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) {
      throw FormatError("truncated tensor file: " + origin);
    }
  }
  std::uint32_t u32() {
    need(4);
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
    pos += 4;
    return static_cast<std::uint32_t>(p[0]) |
           (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
  }
  void magic(const char m[4], const char* what) {
    need(4);
    if (std::memcmp(bytes.data() + pos, m, 4) != 0) {
      throw FormatError(std::string("bad ") + what + " magic: " + origin);
    }
    pos += 4;
  }
};

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void encode_tensor(std::string& out, const NtfTensor& t) {
  if (t.element_count() != t.data.size()) {
    throw ShapeError("tensor dims do not match payload size");
  }
  out.append(kTensorMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
  for (std::uint32_t d : t.dims) put_u32(out, d);
  for (float v : t.data) put_f32(out, v);
}

NtfTensor decode_tensor(Cursor& c) {
  c.magic(kTensorMagic, "tensor");
  NtfTensor t;
  const std::uint32_t rank = c.u32();
  if (rank > 8) throw FormatError("implausible tensor rank: " + c.origin);
  t.dims.resize(rank);
  std::size_t n = 1;
  for (std::uint32_t i = 0; i < rank; ++i) {
    t.dims[i] = c.u32();
    n *= t.dims[i];
  }
  c.need(4 * n);
  t.data.resize(n);
  std::memcpy(t.data.data(), c.bytes.data() + c.pos, 4 * n);
  c.pos += 4 * n;
  return t;
}

}  // namespace

std::size_t NtfTensor::element_count() const {
  std::size_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

NtfTensor NtfTensor::from_tensor(const Tensor& t) {
  NtfTensor out;
  out.dims = {static_cast<std::uint32_t>(t.channels()),
              static_cast<std::uint32_t>(t.height()),
              static_cast<std::uint32_t>(t.width())};
  out.data.assign(t.data(), t.data() + t.size());
  return out;
}

NtfTensor NtfTensor::from_doubles(const double* p, std::size_t n) {
  NtfTensor out;
  out.dims = {static_cast<std::uint32_t>(n)};
  out.data.assign(p, p + n);
  return out;
}

Tensor NtfTensor::to_tensor() const {
  if (dims.size() != 3) {
    throw ShapeError("expected a rank-3 tensor record, got rank " +
                     std::to_string(dims.size()));
  }
  Tensor t(static_cast<int>(dims[0]), static_cast<int>(dims[1]),
           static_cast<int>(dims[2]));
  for (std::size_t i = 0; i < data.size(); ++i) t[i] = data[i];
  return t;
}

NtfTensor ntf_read(const std::string& path) {
  const std::string bytes = read_all(path);
  Cursor c{bytes, 0, path};
  NtfTensor t = decode_tensor(c);
  if (c.pos != bytes.size()) {
    throw FormatError("trailing bytes after tensor record: " + path);
  }
  return t;
}

void ntf_write(const NtfTensor& t, const std::string& path) {
  std::string out;
  encode_tensor(out, t);
  atomic_write_file(path, out);
}

const NtfTensor* NtfBundle::find(const std::string& name) const {
  for (const auto& [n, t] : items) {
    if (n == name) return &t;
  }
  return nullptr;
}

NtfBundle ntf_bundle_read(const std::string& path) {
  const std::string bytes = read_all(path);
  Cursor c{bytes, 0, path};
  c.magic(kBundleMagic, "bundle");
  const std::uint32_t count = c.u32();
  NtfBundle b;
  b.items.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t len = c.u32();
    c.need(len);
    std::string name(bytes.data() + c.pos, len);
    c.pos += len;
    b.items.emplace_back(std::move(name), decode_tensor(c));
  }
  if (c.pos != bytes.size()) {
    throw FormatError("trailing bytes after bundle records: " + path);
  }
  return b;
}

void ntf_bundle_write(const NtfBundle& b, const std::string& path) {
  std::string out;
  out.append(kBundleMagic, 4);
  put_u32(out, static_cast<std::uint32_t>(b.items.size()));
  for (const auto& [name, t] : b.items) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out.append(name);
    encode_tensor(out, t);
  }
  atomic_write_file(path, out);
}

void atomic_write_file(const std::string& path, const std::string& bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot open for writing: " + tmp);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw DataError("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw DataError("cannot rename into place: " + path);
  }
}

}  // namespace panoweave
