#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace parkipipe {

inline constexpr int kCohortSchemaVersion = 1;
inline constexpr int kModelSchemaVersion = 1;
inline constexpr int kStackSchemaVersion = 1;
inline constexpr int kReportSchemaVersion = 1;

/// Domain error with a stable machine-readable code ("SignalTooShort",
/// "MissingModality", ...) next to the human-readable message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message)
      : std::runtime_error(code + ": " + message), code_(std::move(code)) {}

  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

[[noreturn]] inline void fail(std::string code, const std::string& message) {
  throw Error(std::move(code), message);
}

// --- seeded substreams -----------------------------------------------------
//
// All randomness in the project flows from one top-level seed expanded into
// labeled substreams, so that independent pieces (cohort generation, fold
// plans, per-subject signals) never share a stream.

std::uint64_t mix_seed(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

std::mt19937_64 seeded_stream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0);

/// Uniform integer in [0, n), rejection sampled. Stable across platforms,
/// unlike std::uniform_int_distribution.
std::uint64_t random_below(std::mt19937_64& rng, std::uint64_t n);

/// Uniform double in [0, 1) with 53 random bits.
double random_unit(std::mt19937_64& rng);

/// Standard normal via Box-Muller on explicit uniforms (portable).
double random_gauss(std::mt19937_64& rng);

/// Fisher-Yates with random_below; std::shuffle is implementation-defined.
template <typename T>
void shuffle_in_place(std::vector<T>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(random_below(rng, i));
    std::swap(v[i - 1], v[j]);
  }
}

// --- formatting ------------------------------------------------------------

/// Shortest decimal string that round-trips to the same double.
std::string format_double(double value);

/// Fixed-point with the given number of decimals (for report tables).
std::string format_fixed(double value, int decimals);

// --- parallelism -----------------------------------------------------------

/// Thread cap resolved from PARKIPIPE_THREADS, else hardware concurrency.
int default_thread_count();

/// Runs fn(0..n-1), split across at most `threads` workers. Results must be
/// written to index-addressed slots so the schedule cannot change output.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace parkipipe
