#pragma once

#include <filesystem>

#include "ns2d/field.hpp"

namespace ns2d::checkpoint {

inline constexpr std::uint32_t format_version = 1;

// Field checkpoints store one (kx, ky, re, im) record per half-lattice mode
// (kx > 0 or kx == 0, ky > 0) plus a (k_max, version) header. The binary
// form is little-endian and round-trips bit-exactly; the CSV form is the
// human-readable mirror.

void write_binary(const VorticityField& field, const std::filesystem::path& path);
VorticityField read_binary(const std::filesystem::path& path);

void write_csv(const VorticityField& field, const std::filesystem::path& path);
VorticityField read_csv(const std::filesystem::path& path);

}  // namespace ns2d::checkpoint
