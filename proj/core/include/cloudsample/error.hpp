#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace cloudsample {

enum class Errc {
  EmptyCloud,
  NonFiniteCoordinate,
  InvalidRatio,
  InvalidConfig,
  KTooLarge,
  MTooLarge,
  BadStart,
  BadChunkCount,
  ShapeMismatch,
  BadLabel,
  NonScalarRoot,
  IndexOutOfRange,
  NoCache,
  DegenerateAxis,
  EmptySplit,
  IoFailure,
  MalformedLength,
  ParseFailure,
};

std::string_view errc_name(Errc code);

/// Exception carried by every failing operation in the library.
///
/// `location()` holds the offending row index (NonFiniteCoordinate) or
/// 1-based line number (ParseFailure) when one applies.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message,
        std::optional<std::size_t> location = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> location() const noexcept { return location_; }

 private:
  Errc code_;
  std::optional<std::size_t> location_;
};

}  // namespace cloudsample
