#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "imclab/sampler.hpp"

namespace imclab {

static_assert(std::endian::native == std::endian::little,
              "field cache format is little-endian");

namespace {

constexpr std::uint32_t kMagic = 0x464d4349;  // "ICMF"
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error("truncated field cache file");
  return v;
}

}  // namespace

void save_field(const FieldSample& field, const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error("cannot open field cache for writing: " + path);
  put(os, kMagic);
  put(os, kVersion);
  put(os, static_cast<std::uint32_t>(field.grid.dim));
  put(os, static_cast<std::uint32_t>(field.grid.cells));
  put(os, field.grid.side);
  put(os, static_cast<std::uint32_t>(field.reg.mode));
  put(os, static_cast<std::uint32_t>(field.reg.truncation));
  put(os, field.reg.delta);
  put(os, field.seed.master);
  put(os, field.seed.replica);
  const auto count = static_cast<std::uint64_t>(field.values.size());
  put(os, count);
  const std::uint32_t subset = field.points ? 1 : 0;
  put(os, subset);
  if (subset) {
    os.write(reinterpret_cast<const char*>(field.points->idx.data()),
             static_cast<std::streamsize>(count * sizeof(std::int64_t)));
    os.write(reinterpret_cast<const char*>(field.points->weight.data()),
             static_cast<std::streamsize>(count * sizeof(double)));
  }
  os.write(reinterpret_cast<const char*>(field.values.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
  os.write(reinterpret_cast<const char*>(field.variance.data()),
           static_cast<std::streamsize>(count * sizeof(double)));
  if (!os) throw Error("failed writing field cache: " + path);
}

FieldSample load_field(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open field cache: " + path);
  if (get<std::uint32_t>(is) != kMagic) throw Error("bad field cache magic");
  if (get<std::uint32_t>(is) != kVersion)
    throw Error("unsupported field cache version");
  FieldSample f;
  f.grid.dim = static_cast<int>(get<std::uint32_t>(is));
  f.grid.cells = static_cast<int>(get<std::uint32_t>(is));
  f.grid.side = get<double>(is);
  f.grid.spacing = f.grid.side / f.grid.cells;
  f.reg.mode = static_cast<RegularizationSpec::Mode>(get<std::uint32_t>(is));
  f.reg.truncation = static_cast<int>(get<std::uint32_t>(is));
  f.reg.delta = get<double>(is);
  f.seed.master = get<std::uint64_t>(is);
  f.seed.replica = get<std::uint64_t>(is);
  const auto count = get<std::uint64_t>(is);
  const auto subset = get<std::uint32_t>(is);
  if (subset) {
    std::vector<std::int64_t> idx(count);
    std::vector<double> w(count);
    is.read(reinterpret_cast<char*>(idx.data()),
            static_cast<std::streamsize>(count * sizeof(std::int64_t)));
    is.read(reinterpret_cast<char*>(w.data()),
            static_cast<std::streamsize>(count * sizeof(double)));
    if (!is) throw Error("truncated field cache file");
    f.points = std::make_shared<PointSet>(
        PointSet::from_indices(f.grid, std::move(idx), std::move(w)));
  }
  f.values.resize(count);
  f.variance.resize(count);
  is.read(reinterpret_cast<char*>(f.values.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  is.read(reinterpret_cast<char*>(f.variance.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
  if (!is) throw Error("truncated field cache file");
  return f;
}

}  // namespace imclab
