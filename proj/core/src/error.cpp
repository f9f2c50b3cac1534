#include "cloudsample/error.hpp"

namespace cloudsample {

std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::EmptyCloud: return "EmptyCloud";
    case Errc::NonFiniteCoordinate: return "NonFiniteCoordinate";
    case Errc::InvalidRatio: return "InvalidRatio";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::KTooLarge: return "KTooLarge";
    case Errc::MTooLarge: return "MTooLarge";
    case Errc::BadStart: return "BadStart";
    case Errc::BadChunkCount: return "BadChunkCount";
    case Errc::ShapeMismatch: return "ShapeMismatch";
    case Errc::BadLabel: return "BadLabel";
    case Errc::NonScalarRoot: return "NonScalarRoot";
    case Errc::IndexOutOfRange: return "IndexOutOfRange";
    case Errc::NoCache: return "NoCache";
    case Errc::DegenerateAxis: return "DegenerateAxis";
    case Errc::EmptySplit: return "EmptySplit";
    case Errc::IoFailure: return "IoFailure";
    case Errc::MalformedLength: return "MalformedLength";
    case Errc::ParseFailure: return "ParseFailure";
  }
  return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& message,
                           std::optional<std::size_t> location) {
  std::string out(errc_name(code));
  if (location) out += "(" + std::to_string(*location) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message,
             std::optional<std::size_t> location)
    : std::runtime_error(format_message(code, message, location)),
      code_(code),
      location_(location) {}

}  // namespace cloudsample
