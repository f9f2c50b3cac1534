#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace cloudsample {

enum class SearchBackend { BallQuery, KnnBruteforce, KdTree };
enum class SamplingMode { Soft, Hard };  // ASSN, AHSN
enum class CosineAxis { Rows, Columns };

std::string_view to_string(SearchBackend backend);
std::string_view to_string(SamplingMode mode);
std::string_view to_string(CosineAxis axis);
SearchBackend parse_backend(std::string_view text);
SamplingMode parse_mode(std::string_view text);
CosineAxis parse_cosine_axis(std::string_view text);

/// Hyperparameters of the learned sampler and its training objective.
struct CasNetConfig {
  std::size_t k = 32;
  std::size_t oa_layers = 3;
  std::size_t c = 64;
  double radius = 2.0;
  SearchBackend backend = SearchBackend::BallQuery;

  /// Output size. Exactly one of `m` and `ratio` is consulted: `m` wins when set.
  std::optional<std::size_t> m;
  std::size_t ratio = 2;

  double alpha = 1.0;
  double beta = 1.0;
  SamplingMode mode = SamplingMode::Hard;
  std::uint64_t seed = 0;

  // Widths the learned sampler needs but which have no canonical value.
  std::size_t embed_hidden = 64;
  std::size_t score_hidden = 256;
  CosineAxis cosine_axis = CosineAxis::Rows;

  /// Output count for an input of n points.
  std::size_t output_count(std::size_t n) const;

  /// Throws InvalidConfig unless 1 <= k <= n, 1 <= m <= n, oa_layers >= 1,
  /// radius > 0 and alpha, beta >= 0.
  void validate(std::size_t n) const;

  /// Applies one `key=value` setting; throws InvalidConfig on unknown keys or
  /// unparsable values.
  void set(std::string_view key, std::string_view value);

  /// Reads `key=value` lines. Blank lines and `#` comments are skipped.
  static CasNetConfig load(const std::filesystem::path& path);
  static CasNetConfig parse(std::string_view text);

  std::string to_text() const;
};

}  // namespace cloudsample
