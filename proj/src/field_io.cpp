#include "ionaddr/field_io.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fmt/format.h>
#include <fmt/os.h>
#include <fstream>

#include "ionaddr/error.h"

namespace ionaddr::wave {

namespace {

template <class T>
void put(std::vector<char>& out, T value) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

template <class T>
T get(const char* in) {
  std::array<char, sizeof(T)> bytes;
  std::memcpy(bytes.data(), in, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  T value;
  std::memcpy(&value, bytes.data(), sizeof(T));
  return value;
}

}  // namespace

void write_field_sfld(const std::filesystem::path& path, const ScalarField& field) {
  field.validate();
  std::vector<char> buf;
  buf.reserve(kSfldHeaderBytes + field.samples.size() * 8);
  buf.insert(buf.end(), {'S', 'F', 'L', 'D'});
  put<std::uint32_t>(buf, kSfldVersion);
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(field.nx));
  put<std::uint32_t>(buf, static_cast<std::uint32_t>(field.ny));
  put<double>(buf, field.pitch);
  put<double>(buf, field.wavelength);
  put<double>(buf, field.index);
  put<double>(buf, field.origin_x);
  put<double>(buf, field.origin_y);
  put<std::uint64_t>(buf, 0);
  for (const auto& e : field.samples) {
    put<float>(buf, static_cast<float>(e.real()));
    put<float>(buf, static_cast<float>(e.imag()));
  }
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::kIo, fmt::format("cannot open {} for writing", path.string()));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  require(static_cast<bool>(out), ErrorKind::kIo, fmt::format("failed writing {}", path.string()));
}

ScalarField read_field_sfld(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::kIo, fmt::format("cannot open {}", path.string()));
  std::vector<char> buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  require(buf.size() >= kSfldHeaderBytes && std::memcmp(buf.data(), "SFLD", 4) == 0, ErrorKind::kParse,
          fmt::format("{} is not an SFLD field dump", path.string()));
  require(get<std::uint32_t>(&buf[4]) == kSfldVersion, ErrorKind::kParse,
          fmt::format("unsupported SFLD version in {}", path.string()));
  ScalarField f;
  f.nx = static_cast<int>(get<std::uint32_t>(&buf[8]));
  f.ny = static_cast<int>(get<std::uint32_t>(&buf[12]));
  f.pitch = get<double>(&buf[16]);
  f.wavelength = get<double>(&buf[24]);
  f.index = get<double>(&buf[32]);
  f.origin_x = get<double>(&buf[40]);
  f.origin_y = get<double>(&buf[48]);
  const std::size_t count = static_cast<std::size_t>(f.nx) * f.ny;
  require(buf.size() == kSfldHeaderBytes + count * 8, ErrorKind::kParse,
          fmt::format("{} is truncated or has trailing data", path.string()));
  f.samples.resize(count);
  const char* p = buf.data() + kSfldHeaderBytes;
  for (std::size_t i = 0; i < count; ++i, p += 8)
    f.samples[i] = {get<float>(p), get<float>(p + 4)};
  return f;
}

void write_field_csv(const std::filesystem::path& path, const ScalarField& field) {
  field.validate();
  try {
    auto out = fmt::output_file(path.string());
    out.print("x_um,y_um,re,im,intensity\n");
    for (int iy = 0; iy < field.ny; ++iy)
      for (int ix = 0; ix < field.nx; ++ix) {
        const auto e = field.at(ix, iy);
        out.print("{:.6g},{:.6g},{:.9g},{:.9g},{:.9g}\n", field.x(ix) * 1e6, field.y(iy) * 1e6,
                  e.real(), e.imag(), std::norm(e));
      }
  } catch (const std::system_error& e) {
    fail(ErrorKind::kIo, fmt::format("failed writing {}: {}", path.string(), e.what()));
  }
}

void write_field(const std::filesystem::path& path, const ScalarField& field) {
  if (path.extension() == ".csv")
    write_field_csv(path, field);
  else
    write_field_sfld(path, field);
}

}  // namespace ionaddr::wave
