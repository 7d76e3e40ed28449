#include "stereosr/weights_io.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace stereosr {

namespace {

constexpr char kMagic[4] = {'S', 'S', 'R', 'W'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& is) {
  T v;
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw std::runtime_error("read_weights: truncated file");
  return v;
}

}  // namespace

void write_weights(const std::string& path,
                   const std::vector<WeightBlob>& blobs) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("write_weights: cannot open " + path);
  os.write(kMagic, 4);
  write_pod(os, kVersion);
  write_pod(os, static_cast<std::uint32_t>(blobs.size()));
  for (const WeightBlob& b : blobs) {
    write_pod(os, static_cast<std::uint32_t>(b.name.size()));
    os.write(b.name.data(), static_cast<std::streamsize>(b.name.size()));
    write_pod(os, static_cast<std::uint32_t>(b.shape.size()));
    std::uint64_t numel = 1;
    for (std::uint64_t d : b.shape) {
      write_pod(os, d);
      numel *= d;
    }
    if (numel != static_cast<std::uint64_t>(b.data.size()))
      throw std::invalid_argument("write_weights: shape/data mismatch for " +
                                  b.name);
    os.write(reinterpret_cast<const char*>(b.data.data()),
             static_cast<std::streamsize>(numel * sizeof(double)));
  }
  if (!os) throw std::runtime_error("write_weights: write error for " + path);
}

std::vector<WeightBlob> read_weights(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("read_weights: cannot open " + path);
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0)
    throw std::runtime_error("read_weights: bad magic in " + path);
  if (read_pod<std::uint32_t>(is) != kVersion)
    throw std::runtime_error("read_weights: unsupported version in " + path);
  const auto count = read_pod<std::uint32_t>(is);
  std::vector<WeightBlob> blobs(count);
  for (WeightBlob& b : blobs) {
    const auto name_len = read_pod<std::uint32_t>(is);
    b.name.resize(name_len);
    is.read(b.name.data(), name_len);
    const auto ndim = read_pod<std::uint32_t>(is);
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < ndim; ++d) {
      b.shape.push_back(read_pod<std::uint64_t>(is));
      numel *= b.shape.back();
    }
    b.data.resize(static_cast<Eigen::Index>(numel));
    is.read(reinterpret_cast<char*>(b.data.data()),
            static_cast<std::streamsize>(numel * sizeof(double)));
    if (!is) throw std::runtime_error("read_weights: truncated file");
  }
  return blobs;
}

}  // namespace stereosr
