#include "cloudsample/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace cloudsample::io {

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(Errc::IoFailure, "write failed for " + path.string());
}

float load_le_float(const std::uint8_t* p) {
  const std::uint32_t bits = std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) |
                             (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
  return std::bit_cast<float>(bits);
}

void store_le_float(float v, std::vector<std::uint8_t>& out) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

}  // namespace

PointCloud decode_kitti_bin(std::span<const std::uint8_t> bytes) {
  if (bytes.size() % 16 != 0)
    throw Error(Errc::MalformedLength,
                std::to_string(bytes.size()) + " bytes is not a whole number of records");
  const std::size_t n = bytes.size() / 16;
  PointMatrix points(static_cast<Eigen::Index>(n), 3);
  for (std::size_t i = 0; i < n; ++i)
    for (int c = 0; c < 3; ++c)
      points(static_cast<Eigen::Index>(i), c) = load_le_float(bytes.data() + 16 * i + 4 * c);
  PointCloud cloud(std::move(points));
  validate_cloud(cloud);
  return cloud;
}

PointCloud read_kitti_bin(const std::filesystem::path& path) {
  return decode_kitti_bin(read_bytes(path));
}

std::vector<std::uint8_t> encode_kitti_bin(const PointCloud& cloud) {
  std::vector<std::uint8_t> out;
  out.reserve(cloud.size() * 16);
  const auto& p = cloud.points();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    for (int c = 0; c < 3; ++c) store_le_float(p(i, c), out);
    store_le_float(0.0f, out);
  }
  return out;
}

void write_kitti_bin(const std::filesystem::path& path, const PointCloud& cloud) {
  write_bytes(path, encode_kitti_bin(cloud));
}

PointCloud parse_xyz(const std::string& text) {
  std::vector<std::array<float, 3>> rows;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::array<float, 3> row{};
    const char* cur = line.data();
    const char* end = line.data() + line.size();
    for (int c = 0; c < 3; ++c) {
      while (cur < end && (*cur == ' ' || *cur == '\t' || *cur == ',')) ++cur;
      auto [ptr, ec] = std::from_chars(cur, end, row[static_cast<std::size_t>(c)]);
      if (ec != std::errc())
        throw Error(Errc::ParseFailure, "expected three numbers", line_no);
      cur = ptr;
    }
    if (cur < end && !(*cur == ' ' || *cur == '\t' || *cur == ',' || *cur == '\r'))
      throw Error(Errc::ParseFailure, "trailing garbage after coordinates", line_no);
    rows.push_back(row);
  }
  PointCloud cloud(rows);
  validate_cloud(cloud);
  return cloud;
}

PointCloud read_xyz(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  return parse_xyz(std::string(bytes.begin(), bytes.end()));
}

std::string format_xyz(const PointCloud& cloud) {
  std::string out;
  char buffer[96];
  const auto& p = cloud.points();
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    const int len = std::snprintf(buffer, sizeof buffer, "%.17g %.17g %.17g\n",
                                  static_cast<double>(p(i, 0)), static_cast<double>(p(i, 1)),
                                  static_cast<double>(p(i, 2)));
    out.append(buffer, static_cast<std::size_t>(len));
  }
  return out;
}

void write_xyz(const std::filesystem::path& path, const PointCloud& cloud) {
  const std::string text = format_xyz(cloud);
  write_bytes(path, {reinterpret_cast<const std::uint8_t*>(text.data()), text.size()});
}

CloudFormat parse_cloud_format(const std::string& text) {
  if (text == "bin" || text == "kitti") return CloudFormat::KittiBin;
  if (text == "xyz") return CloudFormat::Xyz;
  throw Error(Errc::InvalidConfig, "unknown cloud format '" + text + "'");
}

CloudFormat guess_cloud_format(const std::filesystem::path& path) {
  return path.extension() == ".bin" ? CloudFormat::KittiBin : CloudFormat::Xyz;
}

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  return format == CloudFormat::KittiBin ? read_kitti_bin(path) : read_xyz(path);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud,
                 CloudFormat format) {
  if (format == CloudFormat::KittiBin)
    write_kitti_bin(path, cloud);
  else
    write_xyz(path, cloud);
}

}  // namespace cloudsample::io
