#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace storygen {

enum class ErrorCode {
  // corpus
  MalformedRecord,
  DuplicateTimestamp,
  UnknownSource,
  InconsistentSource,
  InsufficientStories,
  EmptyInput,
  InvalidArgument,
  // gateway
  InvalidRequest,
  NetworkError,
  ProviderError,
  MockMiss,
  // tagparse
  MissingTag,
  UnclosedTag,
  NoCategoriesFound,
  ClaimWithoutEvidence,
  LabelMissing,
  ScoreOutOfRange,
  // profiler
  UnknownSourceTemplate,
  SheetParseFailed,
  RefOutOfRange,
  PreconditionViolated,
  // retrieval
  EmptyCorpus,
  DuplicateDocId,
  // stylist
  PersonaParseFailed,
  RulesParseFailed,
  // generator
  MissingArtifact,
  MetadataRequired,
  // judge
  JudgeParseFailed,
  // metrics
  FewerThanTwo,
  ZeroVector,
  // io
  IoError,
};

std::string_view error_code_name(ErrorCode code);

/// True for failures caused by the LLM/embedding backend or its output,
/// as opposed to bad user input. The CLI maps these to exit status 2.
bool is_upstream_failure(ErrorCode code);

/// Where in the pipeline an error happened. Filled in progressively as the
/// exception propagates outward.
struct ErrorContext {
  std::optional<std::string> author;
  std::optional<std::string> wp;
  std::optional<int> step;
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  const std::string& detail() const noexcept { return detail_; }
  const ErrorContext& context() const noexcept { return context_; }

  Error& with_author(std::string author);
  Error& with_wp(std::string wp);
  Error& with_step(int step);

 private:
  void refresh_what();

  ErrorCode code_;
  std::string detail_;
  ErrorContext context_;
  std::string what_;

 public:
  const char* what() const noexcept override { return what_.c_str(); }
};

}  // namespace storygen
