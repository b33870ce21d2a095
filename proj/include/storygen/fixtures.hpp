#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "storygen/gateway.hpp"

// Deterministic offline data: a small two-author corpus and a responder that
// answers every gateway role with well-formed, content-dependent output.
namespace storygen::fixtures {

inline constexpr std::uint64_t kDefaultFixtureSeed = 20250101;
inline constexpr int kFixtureStoriesPerAuthor = 4;
/// 4 stories per author at this ratio leaves 3 for profiling.
inline constexpr double kFixtureSplitRatio = 0.75;

/// One Reddit and one AO3 author, kFixtureStoriesPerAuthor stories each,
/// as dataset JSON Lines. Same seed, same bytes.
std::string synthetic_dataset(std::uint64_t seed = kDefaultFixtureSeed);

/// Pure function of the request: safe to call from several threads.
FunctionBackend::Responder synthetic_responder();

struct FixtureSummary {
  std::size_t exchanges = 0;
  std::size_t golden_files = 0;
};

/// Writes dataset.jsonl, config.json, mock_script.json, mock_map.json and a
/// golden/ copy of every stage output produced by replaying the script.
FixtureSummary emit_fixture(const std::filesystem::path& dir, std::uint64_t seed = kDefaultFixtureSeed);

}  // namespace storygen::fixtures
