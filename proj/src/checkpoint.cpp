#include "ns2d/checkpoint.hpp"

#include <cinttypes>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace ns2d::checkpoint {

static_assert(__BYTE_ORDER__ == __ORDER_LITTLE_ENDIAN__,
              "checkpoint binary format assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'S', 'N', 'S', '2'};

struct Row {
  std::int32_t kx;
  std::int32_t ky;
  double re;
  double im;
};

std::vector<Row> half_rows(const VorticityField& field) {
  std::vector<Row> rows;
  const Truncation& trunc = field.truncation();
  rows.reserve(trunc.half_modes().size());
  for (const WaveVector k : trunc.half_modes()) {
    const Complex v = field[trunc.index(k)];
    rows.push_back({k.kx, k.ky, v.real(), v.imag()});
  }
  return rows;
}

VorticityField from_rows(int k_max, const std::vector<Row>& rows) {
  VorticityField field{Truncation(k_max)};
  for (const Row& r : rows) {
    const WaveVector k{r.kx, r.ky};
    if (!upper_half(k)) throw std::runtime_error("checkpoint: row not in half lattice");
    field.set_pair(k, Complex(r.re, r.im));
  }
  return field;
}

}  // namespace

void write_binary(const VorticityField& field, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  const auto rows = half_rows(field);
  const std::uint32_t version = format_version;
  const std::uint32_t k_max = static_cast<std::uint32_t>(field.truncation().k_max());
  const std::uint64_t count = rows.size();
  out.write(kMagic, 4);
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&k_max), sizeof(k_max));
  out.write(reinterpret_cast<const char*>(&count), sizeof(count));
  for (const Row& r : rows) {
    out.write(reinterpret_cast<const char*>(&r.kx), sizeof(r.kx));
    out.write(reinterpret_cast<const char*>(&r.ky), sizeof(r.ky));
    out.write(reinterpret_cast<const char*>(&r.re), sizeof(r.re));
    out.write(reinterpret_cast<const char*>(&r.im), sizeof(r.im));
  }
  if (!out) throw std::runtime_error("checkpoint: write failed for " + path.string());
}

VorticityField read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  char magic[4];
  std::uint32_t version = 0, k_max = 0;
  std::uint64_t count = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&k_max), sizeof(k_max));
  in.read(reinterpret_cast<char*>(&count), sizeof(count));
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("checkpoint: bad magic in " + path.string());
  if (version != format_version)
    throw std::runtime_error("checkpoint: unsupported version in " + path.string());
  std::vector<Row> rows(count);
  for (Row& r : rows) {
    in.read(reinterpret_cast<char*>(&r.kx), sizeof(r.kx));
    in.read(reinterpret_cast<char*>(&r.ky), sizeof(r.ky));
    in.read(reinterpret_cast<char*>(&r.re), sizeof(r.re));
    in.read(reinterpret_cast<char*>(&r.im), sizeof(r.im));
  }
  if (!in) throw std::runtime_error("checkpoint: truncated file " + path.string());
  return from_rows(static_cast<int>(k_max), rows);
}

void write_csv(const VorticityField& field, const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.string().c_str(), "w");
  if (!f) throw std::runtime_error("checkpoint: cannot write " + path.string());
  std::fprintf(f, "# stoch-ns2d field checkpoint version=%u k_max=%d\n", format_version,
               field.truncation().k_max());
  std::fprintf(f, "kx,ky,re,im\n");
  for (const Row& r : half_rows(field))
    std::fprintf(f, "%d,%d,%.17g,%.17g\n", r.kx, r.ky, r.re, r.im);
  std::fclose(f);
}

VorticityField read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("checkpoint: empty " + path.string());
  unsigned version = 0;
  int k_max = 0;
  if (std::sscanf(line.c_str(), "# stoch-ns2d field checkpoint version=%u k_max=%d",
                  &version, &k_max) != 2)
    throw std::runtime_error("checkpoint: bad CSV header in " + path.string());
  if (version != format_version)
    throw std::runtime_error("checkpoint: unsupported version in " + path.string());
  std::getline(in, line);  // column header
  std::vector<Row> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    Row r;
    if (std::sscanf(line.c_str(), "%" SCNd32 ",%" SCNd32 ",%lg,%lg", &r.kx, &r.ky, &r.re,
                    &r.im) != 4)
      throw std::runtime_error("checkpoint: bad CSV row in " + path.string());
    rows.push_back(r);
  }
  return from_rows(k_max, rows);
}

}  // namespace ns2d::checkpoint
