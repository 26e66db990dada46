#pragma once

#include <memory>
#include <ostream>

#include "gravwell/config.hpp"
#include "gravwell/gravity.hpp"
#include "gravwell/scoring.hpp"

namespace gravwell {

// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1; // runtime / data errors
inline constexpr int kExitUsage = 2;   // bad flags or configuration

// Backend factories; "remote" reads the API key from the environment and
// throws ConfigError when it is absent.
std::unique_ptr<ScorerBackend> make_scorer(const BackendSettings& settings);
std::unique_ptr<Embedder> make_embedder(const BackendSettings& settings);

// Entry point shared by the executable and the tests.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace gravwell
