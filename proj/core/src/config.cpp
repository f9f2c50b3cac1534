#include "cloudsample/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cloudsample/error.hpp"
#include "cloudsample/types.hpp"

namespace cloudsample {

std::string_view to_string(SearchBackend backend) {
  switch (backend) {
    case SearchBackend::BallQuery: return "ball_query";
    case SearchBackend::KnnBruteforce: return "knn_bruteforce";
    case SearchBackend::KdTree: return "kdtree";
  }
  return "?";
}

std::string_view to_string(SamplingMode mode) {
  return mode == SamplingMode::Soft ? "assn" : "ahsn";
}

std::string_view to_string(CosineAxis axis) {
  return axis == CosineAxis::Rows ? "rows" : "columns";
}

SearchBackend parse_backend(std::string_view text) {
  if (text == "ball_query" || text == "ball") return SearchBackend::BallQuery;
  if (text == "knn_bruteforce" || text == "knn") return SearchBackend::KnnBruteforce;
  if (text == "kdtree") return SearchBackend::KdTree;
  throw Error(Errc::InvalidConfig, "unknown backend '" + std::string(text) + "'");
}

SamplingMode parse_mode(std::string_view text) {
  if (text == "assn" || text == "ASSN") return SamplingMode::Soft;
  if (text == "ahsn" || text == "AHSN") return SamplingMode::Hard;
  throw Error(Errc::InvalidConfig, "unknown mode '" + std::string(text) + "'");
}

CosineAxis parse_cosine_axis(std::string_view text) {
  if (text == "rows") return CosineAxis::Rows;
  if (text == "columns" || text == "cols") return CosineAxis::Columns;
  throw Error(Errc::InvalidConfig, "unknown cosine axis '" + std::string(text) + "'");
}

std::size_t CasNetConfig::output_count(std::size_t n) const {
  if (m) return *m;
  return ratio_to_count(n, ratio);
}

void CasNetConfig::validate(std::size_t n) const {
  auto fail = [](const std::string& what) { throw Error(Errc::InvalidConfig, what); };
  if (k < 1 || k > n) fail("k must satisfy 1 <= k <= n");
  const std::size_t out = output_count(n);
  if (out < 1 || out > n) fail("m must satisfy 1 <= m <= n");
  if (oa_layers < 1) fail("oa_layers must be >= 1");
  if (c < 1 || embed_hidden < 1 || score_hidden < 1) fail("layer widths must be >= 1");
  if (!(radius > 0) || !std::isfinite(radius)) fail("radius must be > 0");
  if (!(alpha >= 0) || !(beta >= 0)) fail("alpha and beta must be >= 0");
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(std::string_view key, std::string_view value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc() || ptr != end)
    throw Error(Errc::InvalidConfig,
                "bad value '" + std::string(value) + "' for " + std::string(key));
  return out;
}

}  // namespace

void CasNetConfig::set(std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  if (key == "k") k = parse_number<std::size_t>(key, value);
  else if (key == "oa_layers" || key == "oa") oa_layers = parse_number<std::size_t>(key, value);
  else if (key == "c") c = parse_number<std::size_t>(key, value);
  else if (key == "radius") radius = parse_number<double>(key, value);
  else if (key == "backend") backend = parse_backend(value);
  else if (key == "m") m = parse_number<std::size_t>(key, value);
  else if (key == "ratio" || key == "D") ratio = parse_number<std::size_t>(key, value);
  else if (key == "alpha") alpha = parse_number<double>(key, value);
  else if (key == "beta") beta = parse_number<double>(key, value);
  else if (key == "mode") mode = parse_mode(value);
  else if (key == "seed") seed = parse_number<std::uint64_t>(key, value);
  else if (key == "embed_hidden") embed_hidden = parse_number<std::size_t>(key, value);
  else if (key == "score_hidden") score_hidden = parse_number<std::size_t>(key, value);
  else if (key == "cosine_axis") cosine_axis = parse_cosine_axis(value);
  else throw Error(Errc::InvalidConfig, "unknown config key '" + std::string(key) + "'");
}

CasNetConfig CasNetConfig::parse(std::string_view text) {
  CasNetConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto nl = text.find('\n');
    auto line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(Errc::InvalidConfig, "expected key=value", line_no);
    config.set(line.substr(0, eq), line.substr(eq + 1));
  }
  return config;
}

CasNetConfig CasNetConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

namespace {

std::string shortest(double v) {
  char buffer[32];
  const auto result = std::to_chars(buffer, buffer + sizeof buffer, v);
  return std::string(buffer, result.ptr);
}

}  // namespace

std::string CasNetConfig::to_text() const {
  std::ostringstream out;
  out << "k=" << k << "\n"
      << "oa_layers=" << oa_layers << "\n"
      << "c=" << c << "\n"
      << "radius=" << shortest(radius) << "\n"
      << "backend=" << to_string(backend) << "\n";
  if (m) out << "m=" << *m << "\n";
  out << "ratio=" << ratio << "\n"
      << "alpha=" << shortest(alpha) << "\n"
      << "beta=" << shortest(beta) << "\n"
      << "mode=" << to_string(mode) << "\n"
      << "seed=" << seed << "\n"
      << "embed_hidden=" << embed_hidden << "\n"
      << "score_hidden=" << score_hidden << "\n"
      << "cosine_axis=" << to_string(cosine_axis) << "\n";
  return out.str();
}

}  // namespace cloudsample
