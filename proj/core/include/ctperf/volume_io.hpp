#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ctperf/deconv.hpp"
#include "ctperf/phantom.hpp"
#include "ctperf/types.hpp"

namespace ctperf {

/// Volume container: a JSON header next to a raw little-endian payload.
/// The header carries dtype ("f32le" for sample volumes, "u8" for masks),
/// shape (x, y, z, and t for time series), voxel size, the acquisition
/// grid for 4-D data, and the payload's file name. Payload order is
/// x-fastest, t-slowest. Floating-point volumes are stored as 32-bit
/// floats regardless of the in-memory double representation.
///
/// All writers are atomic: content goes to a temporary file in the target
/// directory which is then renamed over the destination.

void write_volume(const std::filesystem::path& header_path, const Volume3<double>& volume,
                  Vec3 voxel_size);
Volume3<double> read_volume(const std::filesystem::path& header_path,
                            Vec3* voxel_size = nullptr);

void write_mask(const std::filesystem::path& header_path, const Mask3& mask, Vec3 voxel_size);
Mask3 read_mask(const std::filesystem::path& header_path, Vec3* voxel_size = nullptr);

void write_series(const std::filesystem::path& header_path, const CtpSeries& series);
CtpSeries read_series(const std::filesystem::path& header_path);

/// IrfMap headers additionally record method and lambda_rel.
void write_irf(const std::filesystem::path& header_path, const IrfMap& irf, Vec3 voxel_size);
IrfMap read_irf(const std::filesystem::path& header_path, Vec3* voxel_size = nullptr);

/// Sampled curve as CSV with a "t_s,value" header row. Reading infers the
/// grid from the time column and rejects non-uniform spacing.
void write_curve_csv(const std::filesystem::path& path, const Curve& curve);
Curve read_curve_csv(const std::filesystem::path& path);

/// One axial slice as binary 8-bit PGM, values mapped linearly from
/// [vmin, vmax] to [0, 255] with clamping; vmin == vmax renders black.
void write_pgm_slice(const std::filesystem::path& path, const Volume3<double>& volume, int z,
                     double vmin, double vmax);
void write_pgm_slice(const std::filesystem::path& path, const Mask3& mask, int z);

/// Shortest round-trip decimal rendering, for deterministic text output.
std::string format_double(double value);

/// FNV-1a 64-bit digest of a byte range, as 16 hex digits.
std::uint64_t fnv1a64(const void* data, std::size_t n);
std::string fnv1a64_hex(const void* data, std::size_t n);

/// Atomic text write (temp + rename), shared by every writer here.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace ctperf
