#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace bose {

/// FNV-1a 64-bit over raw bytes. Used for config digests, run ids and the
/// mock backend's hash matcher. Non-cryptographic on purpose.
std::uint64_t fnv1a64(std::string_view data);

/// Lower-case hex rendering of fnv1a64, 16 chars.
std::string fnv1a64_hex(std::string_view data);

/// Strip leading/trailing ASCII whitespace.
std::string trim(std::string_view s);

/// Round half away from zero at `decimals` fractional digits.
double round_half_up(double value, int decimals);

/// Fixed-point rendering with `decimals` digits after round_half_up.
std::string format_fixed(double value, int decimals);

/// Current wall-clock time as milliseconds since the Unix epoch.
std::int64_t now_epoch_ms();

/// "YYYY-MM-DDTHH:MM:SS.mmmZ" for a millisecond epoch timestamp.
std::string iso8601_utc(std::int64_t epoch_ms);

/// Writes "warning: <msg>" to stderr. Reports only; never alters results.
void warn(const std::string& msg);

/// Runs fn(0..n-1) on up to max_inflight worker threads. Results land in
/// index order, so output is independent of scheduling. Exceptions thrown
/// by fn are re-thrown on the calling thread (lowest index wins).
void parallel_for_indexed(std::size_t n, unsigned max_inflight,
                          const std::function<void(std::size_t)>& fn);

} // namespace bose
