#include "storygen/error.hpp"

namespace storygen {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::MalformedRecord: return "MalformedRecord";
    case ErrorCode::DuplicateTimestamp: return "DuplicateTimestamp";
    case ErrorCode::UnknownSource: return "UnknownSource";
    case ErrorCode::InconsistentSource: return "InconsistentSource";
    case ErrorCode::InsufficientStories: return "InsufficientStories";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::InvalidRequest: return "InvalidRequest";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::ProviderError: return "ProviderError";
    case ErrorCode::MockMiss: return "MockMiss";
    case ErrorCode::MissingTag: return "MissingTag";
    case ErrorCode::UnclosedTag: return "UnclosedTag";
    case ErrorCode::NoCategoriesFound: return "NoCategoriesFound";
    case ErrorCode::ClaimWithoutEvidence: return "ClaimWithoutEvidence";
    case ErrorCode::LabelMissing: return "LabelMissing";
    case ErrorCode::ScoreOutOfRange: return "ScoreOutOfRange";
    case ErrorCode::UnknownSourceTemplate: return "UnknownSourceTemplate";
    case ErrorCode::SheetParseFailed: return "SheetParseFailed";
    case ErrorCode::RefOutOfRange: return "RefOutOfRange";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::DuplicateDocId: return "DuplicateDocId";
    case ErrorCode::PersonaParseFailed: return "PersonaParseFailed";
    case ErrorCode::RulesParseFailed: return "RulesParseFailed";
    case ErrorCode::MissingArtifact: return "MissingArtifact";
    case ErrorCode::MetadataRequired: return "MetadataRequired";
    case ErrorCode::JudgeParseFailed: return "JudgeParseFailed";
    case ErrorCode::FewerThanTwo: return "FewerThanTwo";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

bool is_upstream_failure(ErrorCode code) {
  switch (code) {
    case ErrorCode::NetworkError:
    case ErrorCode::ProviderError:
    case ErrorCode::MockMiss:
    case ErrorCode::MissingTag:
    case ErrorCode::UnclosedTag:
    case ErrorCode::NoCategoriesFound:
    case ErrorCode::ClaimWithoutEvidence:
    case ErrorCode::LabelMissing:
    case ErrorCode::ScoreOutOfRange:
    case ErrorCode::SheetParseFailed:
    case ErrorCode::RefOutOfRange:
    case ErrorCode::PersonaParseFailed:
    case ErrorCode::RulesParseFailed:
    case ErrorCode::JudgeParseFailed:
    case ErrorCode::ZeroVector:
      return true;
    default:
      return false;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(message), code_(code), detail_(message) {
  refresh_what();
}

Error& Error::with_author(std::string author) {
  if (!context_.author) context_.author = std::move(author);
  refresh_what();
  return *this;
}

Error& Error::with_wp(std::string wp) {
  if (!context_.wp) context_.wp = std::move(wp);
  refresh_what();
  return *this;
}

Error& Error::with_step(int step) {
  if (!context_.step) context_.step = step;
  refresh_what();
  return *this;
}

void Error::refresh_what() {
  what_ = std::string(error_code_name(code_)) + ": " + detail_;
  if (context_.author) what_ += " [author " + *context_.author + "]";
  if (context_.step) what_ += " [step " + std::to_string(*context_.step) + "]";
  if (context_.wp) what_ += " [wp \"" + *context_.wp + "\"]";
}

}  // namespace storygen
