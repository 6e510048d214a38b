#include "satin/serialize.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <set>

namespace satin {

namespace {

constexpr char kMagic[] = "SATINW1";
constexpr size_t kMagicLen = 7;

void write_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  os.write(reinterpret_cast<const char*>(b), 8);
}

void write_f32(std::ostream& os, float v) {
  uint32_t u;
  std::memcpy(&u, &v, 4);
  write_u32(os, u);
}

bool read_u32(std::istream& is, uint32_t& v) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  if (is.gcount() != 4) return false;
  v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return true;
}

uint64_t read_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  check(is.gcount() == 8, "parameter file truncated");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

float read_f32(std::istream& is) {
  uint32_t u;
  check(read_u32(is, u), "parameter file truncated");
  float v;
  std::memcpy(&v, &u, 4);
  return v;
}

}  // namespace

void save_params(const std::string& path, const ParamStore& store) {
  std::ofstream os(path, std::ios::binary);
  check(os.good(), "cannot open parameter file for writing: " + path);
  os.write(kMagic, kMagicLen);
  for (const auto& p : store.all()) {
    write_u32(os, static_cast<uint32_t>(p->name.size()));
    os.write(p->name.data(), static_cast<std::streamsize>(p->name.size()));
    write_u32(os, static_cast<uint32_t>(p->value.rank()));
    for (int i = 0; i < p->value.rank(); ++i)
      write_u64(os, static_cast<uint64_t>(p->value.extent(i)));
    for (int64_t i = 0; i < p->value.size(); ++i)
      write_f32(os, static_cast<float>(p->value.data()[i]));
  }
  check(os.good(), "write failed: " + path);
}

void load_params(const std::string& path, ParamStore& store) {
  std::ifstream is(path, std::ios::binary);
  check(is.good(), "cannot open parameter file: " + path);
  char magic[kMagicLen];
  is.read(magic, kMagicLen);
  check(is.gcount() == static_cast<std::streamsize>(kMagicLen) &&
            std::memcmp(magic, kMagic, kMagicLen) == 0,
        "not a SATINW1 parameter file: " + path);
  std::set<std::string> seen;
  uint32_t name_len;
  while (read_u32(is, name_len)) {
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    check(is.gcount() == static_cast<std::streamsize>(name_len), "parameter file truncated");
    uint32_t rank;
    check(read_u32(is, rank), "parameter file truncated");
    std::vector<int64_t> shape(rank);
    for (uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<int64_t>(read_u64(is));
    Param* p = store.find(name);
    check(p != nullptr, "parameter file contains unknown entry: " + name);
    check(p->value.shape() == shape, "parameter shape mismatch for " + name + ": file has " +
                                         shape_str(shape) + ", model has " +
                                         shape_str(p->value.shape()));
    for (int64_t i = 0; i < p->value.size(); ++i)
      p->value.data()[i] = static_cast<double>(read_f32(is));
    seen.insert(name);
  }
  for (const auto& p : store.all())
    check(seen.count(p->name) > 0, "parameter file is missing entry: " + p->name);
}

}  // namespace satin
