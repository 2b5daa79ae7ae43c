#pragma once

// Field dumps.
//
// SFLD binary, all little-endian:
//   offset  size  content
//        0     4  magic "SFLD"
//        4     4  u32 format version (1)
//        8     4  u32 nx
//       12     4  u32 ny
//       16     8  f64 pitch [m]
//       24     8  f64 vacuum wavelength [m]
//       32     8  f64 ambient index
//       40     8  f64 origin x [m]
//       48     8  f64 origin y [m]
//       56     8  reserved, zero
//       64     -  nx * ny pairs of f32 (Re, Im), y-major
//
// CSV: header "x_um,y_um,re,im,intensity", one row per sample, y-major.

#include <cstdint>
#include <filesystem>

#include "ionaddr/wave_optics.h"

namespace ionaddr::wave {

inline constexpr std::uint32_t kSfldVersion = 1;
inline constexpr std::size_t kSfldHeaderBytes = 64;

void write_field_sfld(const std::filesystem::path& path, const ScalarField& field);
ScalarField read_field_sfld(const std::filesystem::path& path);
void write_field_csv(const std::filesystem::path& path, const ScalarField& field);

// Chooses CSV for a ".csv" extension and SFLD otherwise.
void write_field(const std::filesystem::path& path, const ScalarField& field);

}  // namespace ionaddr::wave
