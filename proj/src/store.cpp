#include "podecm/store.hpp"

#include <cstring>
#include <filesystem>
#include <fstream>

namespace podecm {

namespace {

constexpr char kMagic[8] = {'P', 'O', 'D', 'E', 'C', 'M', '1', '\0'};
constexpr std::uint32_t kVersion = 1;
constexpr std::uint32_t kEndianMarker = 0x01020304u;

void append(std::vector<char>& buf, const void* p, std::size_t n) {
  const char* c = static_cast<const char*>(p);
  buf.insert(buf.end(), c, c + n);
}

template <typename T>
void append_pod(std::vector<char>& buf, T v) {
  append(buf, &v, sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<char>& buf, const std::string& path)
      : buf_(buf), path_(path) {}

  void read(void* out, std::size_t n) {
    if (pos_ + n > buf_.size())
      throw FormatError(path_ + ": truncated file (need " + std::to_string(n) +
                        " bytes at offset " + std::to_string(pos_) + ")");
    std::memcpy(out, buf_.data() + pos_, n);
    pos_ += n;
  }

  template <typename T>
  T read_pod() {
    T v;
    read(&v, sizeof(T));
    return v;
  }

  std::size_t pos() const { return pos_; }

 private:
  const std::vector<char>& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t seed) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

void ArrayStore::put(const std::string& name, const MatX& a) {
  if (has(name)) throw FormatError("duplicate array name '" + name + "'");
  Entry e;
  e.dtype = DType::F64;
  e.f64 = a;
  entries_.emplace_back(name, std::move(e));
}

void ArrayStore::put(const std::string& name, const MatI64& a) {
  if (has(name)) throw FormatError("duplicate array name '" + name + "'");
  Entry e;
  e.dtype = DType::I64;
  e.i64 = a;
  entries_.emplace_back(name, std::move(e));
}

void ArrayStore::put_scalar(const std::string& name, double v) {
  MatX a(1, 1);
  a(0, 0) = v;
  put(name, a);
}

bool ArrayStore::has(const std::string& name) const {
  for (const auto& [n, e] : entries_)
    if (n == name) return true;
  return false;
}

const ArrayStore::Entry& ArrayStore::find(const std::string& name) const {
  for (const auto& [n, e] : entries_)
    if (n == name) return e;
  throw FormatError("array '" + name + "' not present in container");
}

const MatX& ArrayStore::get_f64(const std::string& name) const {
  const Entry& e = find(name);
  if (e.dtype != DType::F64)
    throw FormatError("array '" + name + "' is not f64");
  return e.f64;
}

const MatI64& ArrayStore::get_i64(const std::string& name) const {
  const Entry& e = find(name);
  if (e.dtype != DType::I64)
    throw FormatError("array '" + name + "' is not i64");
  return e.i64;
}

double ArrayStore::get_scalar(const std::string& name) const {
  const MatX& a = get_f64(name);
  if (a.rows() != 1 || a.cols() != 1)
    throw FormatError("array '" + name + "' is not a scalar");
  return a(0, 0);
}

std::vector<std::string> ArrayStore::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [n, e] : entries_) out.push_back(n);
  return out;
}

void ArrayStore::save(const std::string& path) const {
  std::vector<char> buf;
  append(buf, kMagic, sizeof(kMagic));
  append_pod(buf, kVersion);
  append_pod(buf, kEndianMarker);
  append_pod(buf, content_tag);
  append_pod(buf, static_cast<std::uint64_t>(entries_.size()));

  for (const auto& [name, e] : entries_) {
    append_pod(buf, static_cast<std::uint32_t>(name.size()));
    append(buf, name.data(), name.size());
    append_pod(buf, static_cast<std::uint8_t>(e.dtype));
    const bool f = e.dtype == DType::F64;
    append_pod(buf, static_cast<std::uint64_t>(f ? e.f64.rows() : e.i64.rows()));
    append_pod(buf, static_cast<std::uint64_t>(f ? e.f64.cols() : e.i64.cols()));
  }

  const std::size_t payload_begin = buf.size();
  for (const auto& [name, e] : entries_) {
    if (e.dtype == DType::F64)
      append(buf, e.f64.data(), sizeof(double) * e.f64.size());
    else
      append(buf, e.i64.data(), sizeof(std::int64_t) * e.i64.size());
  }
  const std::uint64_t sum =
      fnv1a64(buf.data() + payload_begin, buf.size() - payload_begin);
  append_pod(buf, sum);

  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
    if (!os) throw IoError("cannot open '" + tmp.string() + "' for writing");
    os.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!os) throw IoError("short write to '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) throw IoError("cannot rename '" + tmp.string() + "' to '" + path +
                        "': " + ec.message());
}

ArrayStore ArrayStore::load(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path + "' for reading");
  std::vector<char> buf((std::istreambuf_iterator<char>(is)),
                        std::istreambuf_iterator<char>());

  Reader r(buf, path);
  char magic[8];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path + ": bad magic, not a PODECM1 container");
  const auto version = r.read_pod<std::uint32_t>();
  if (version != kVersion)
    throw FormatError(path + ": unsupported container version " +
                      std::to_string(version));
  const auto endian = r.read_pod<std::uint32_t>();
  if (endian != kEndianMarker)
    throw FormatError(path + ": endianness mismatch, file written on an "
                      "incompatible platform");

  ArrayStore store;
  store.content_tag = r.read_pod<std::uint64_t>();
  const auto count = r.read_pod<std::uint64_t>();

  struct Dir {
    std::string name;
    DType dtype;
    std::uint64_t rows, cols;
  };
  std::vector<Dir> dir(count);
  for (auto& d : dir) {
    const auto name_len = r.read_pod<std::uint32_t>();
    d.name.resize(name_len);
    r.read(d.name.data(), name_len);
    const auto dt = r.read_pod<std::uint8_t>();
    if (dt > 1)
      throw FormatError(path + ": array '" + d.name + "' has unknown dtype " +
                        std::to_string(dt));
    d.dtype = static_cast<DType>(dt);
    d.rows = r.read_pod<std::uint64_t>();
    d.cols = r.read_pod<std::uint64_t>();
  }

  const std::size_t payload_begin = r.pos();
  for (const auto& d : dir) {
    const std::size_t n = d.rows * d.cols;
    if (d.dtype == DType::F64) {
      MatX a(d.rows, d.cols);
      r.read(a.data(), sizeof(double) * n);
      store.put(d.name, a);
    } else {
      MatI64 a(d.rows, d.cols);
      r.read(a.data(), sizeof(std::int64_t) * n);
      store.put(d.name, a);
    }
  }

  const std::uint64_t computed =
      fnv1a64(buf.data() + payload_begin, r.pos() - payload_begin);
  const auto stored = r.read_pod<std::uint64_t>();
  if (stored != computed)
    throw FormatError(path + ": payload checksum mismatch (stored " +
                      std::to_string(stored) + ", computed " +
                      std::to_string(computed) + ")");
  if (r.pos() != buf.size())
    throw FormatError(path + ": trailing bytes after checksum");
  return store;
}

}  // namespace podecm
