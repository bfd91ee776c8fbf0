#pragma once

#include "podecm/types.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace podecm {

using MatI64 = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

// Named-array binary container.  One file holds an ordered set of dense
// arrays (f64 or i64, column-major) plus a caller-defined content tag used
// to bind derived artifacts to their source (e.g. a mesh fingerprint).
// Layout is documented bit-exactly in docs/formats.md; files are written to
// a temporary name and renamed so readers never observe partial writes.
class ArrayStore {
 public:
  enum class DType : std::uint8_t { F64 = 0, I64 = 1 };

  struct Entry {
    DType dtype = DType::F64;
    MatX f64;
    MatI64 i64;
  };

  std::uint64_t content_tag = 0;

  void put(const std::string& name, const MatX& a);
  void put(const std::string& name, const MatI64& a);
  void put_scalar(const std::string& name, double v);

  bool has(const std::string& name) const;
  const MatX& get_f64(const std::string& name) const;
  const MatI64& get_i64(const std::string& name) const;
  double get_scalar(const std::string& name) const;

  std::vector<std::string> names() const;
  std::size_t size() const { return entries_.size(); }

  void save(const std::string& path) const;
  static ArrayStore load(const std::string& path);

 private:
  const Entry& find(const std::string& name) const;

  std::vector<std::pair<std::string, Entry>> entries_;
};

// FNV-1a 64-bit hash, the checksum and fingerprint primitive for all
// on-disk artifacts.
std::uint64_t fnv1a64(const void* data, std::size_t n,
                      std::uint64_t seed = 14695981039346656037ull);

}  // namespace podecm
