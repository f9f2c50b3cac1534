#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "cloudsample/types.hpp"

namespace cloudsample::io {

/// KITTI velodyne scan: little-endian float32 (x, y, z, intensity) per point.
/// Intensity is dropped. Throws IoFailure, MalformedLength (size % 16 != 0)
/// or NonFiniteCoordinate(row).
PointCloud read_kitti_bin(const std::filesystem::path& path);
PointCloud decode_kitti_bin(std::span<const std::uint8_t> bytes);
/// Writes zero intensity.
void write_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud);
std::vector<std::uint8_t> encode_kitti_bin(const PointCloud& cloud);

/// One point per line, whitespace-separated. Extra columns are ignored.
/// Throws ParseFailure(line), EmptyCloud or NonFiniteCoordinate(row).
PointCloud read_xyz(const std::filesystem::path& path);
PointCloud parse_xyz(const std::string& text);
/// 17 significant digits per coordinate.
void write_xyz(const std::filesystem::path& path, const PointCloud& cloud);
std::string format_xyz(const PointCloud& cloud);

enum class CloudFormat { KittiBin, Xyz };
CloudFormat parse_cloud_format(const std::string& text);
/// From the extension: ".bin" or anything else treated as xyz.
CloudFormat guess_cloud_format(const std::filesystem::path& path);
PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                 CloudFormat format);

enum class ReportFormat { Csv, Markdown };
ReportFormat parse_report_format(const std::string& text);

inline constexpr const char* kReportHeader =
    "method,n_in,n_out,oa,k,t_batch_s,t_sample_s,acc,prec,rec,f1";

/// CSV with kReportHeader; markdown groups consecutive rows by method with
/// the method name on the first row of its block. Times carry 6 decimals.
/// Throws InvalidConfig on an empty record list.
std::string format_report(std::span<const RunRecord> records, ReportFormat format);
void write_report(std::span<const RunRecord> records, ReportFormat format,
                  const std::filesystem::path& path);

}  // namespace cloudsample::io
