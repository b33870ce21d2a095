#pragma once

#include <string>
#include <utility>

#include "storygen/error.hpp"
#include "storygen/gateway.hpp"

namespace storygen::detail {

inline bool is_retryable_parse_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingTag:
    case ErrorCode::UnclosedTag:
    case ErrorCode::NoCategoriesFound:
    case ErrorCode::ClaimWithoutEvidence:
    case ErrorCode::LabelMissing:
    case ErrorCode::ScoreOutOfRange:
    case ErrorCode::PersonaParseFailed:
    case ErrorCode::RulesParseFailed:
      return true;
    default:
      return false;
  }
}

// Sends `request`, parses the reply, and on a structural parse error sends
// the identical request once more. A second failure is reported as `failure`.
template <typename Parse>
auto complete_and_parse(Gateway& gateway, const ChatRequest& request, ErrorCode failure, Parse&& parse) {
  std::string first_problem;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto completion = gateway.complete(request);
    try {
      return parse(completion.text);
    } catch (const Error& e) {
      if (!is_retryable_parse_error(e.code())) throw;
      if (attempt == 1) {
        throw Error(failure, "unparseable reply after retry: " + std::string(error_code_name(e.code())) + ": " +
                                 e.detail() + " (first attempt: " + first_problem + ")");
      }
      first_problem = std::string(error_code_name(e.code())) + ": " + e.detail();
    }
  }
  throw Error(failure, "unreachable");
}

}  // namespace storygen::detail
