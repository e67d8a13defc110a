#pragma once

#include "apde/exponents.hpp"
#include "apde/grid.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <vector>

namespace apde {

// Field file layout, all little-endian, values row-major with the last axis fastest:
//   "APDE" | u32 version = 1 | u32 N | N x f64 p_i | N x u64 dims |
//   N x f64 origin | N x f64 spacing | f64 time | prod(dims) x f64 values

inline constexpr std::uint32_t kFieldVersion = 1;

class FieldFormatError : public std::runtime_error {
public:
    FieldFormatError(const std::string& what, std::uint64_t offset);
    std::uint64_t offset() const { return offset_; }

private:
    std::uint64_t offset_;
};

struct FieldFile {
    Field field;
    std::vector<double> exponents;
};

std::vector<std::uint8_t> encode_field(const Field& u, std::span<const double> exponents);
FieldFile decode_field(std::span<const std::uint8_t> bytes);

void write_field(const std::filesystem::path& path, const Field& u, std::span<const double> exponents);
FieldFile read_field(const std::filesystem::path& path);

/// Directory layout: snapshot_NNNN.apde per snapshot plus diagnostics.csv.
void write_trajectory(const std::filesystem::path& dir, const Trajectory& traj, std::span<const double> exponents);
struct TrajectoryFile {
    Trajectory trajectory;
    std::vector<double> exponents;
};
TrajectoryFile read_trajectory(const std::filesystem::path& dir);

} // namespace apde
