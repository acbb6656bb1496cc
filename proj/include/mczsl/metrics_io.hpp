#pragma once

// Metrics files.
//
// JSON (schema "mczsl.metrics/1"):
//   {
//     "schema": "mczsl.metrics/1",
//     "protocol": "fixed", "dataset": "synth",
//     "tasks": [{"task": 1, "seen_acc": .., "unseen_acc": .., "harmonic": ..}, ...],
//     "mSA": .., "mUA": .., "mH": ..
//   }
// Task numbers are 1-based. Values are percentages at full double precision.
//
// CSV: header "task,seen_acc,unseen_acc,harmonic", then one row per task.

#include <filesystem>
#include <string>
#include <string_view>

#include "mczsl/protocols.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

inline constexpr std::string_view kMetricsSchema = "mczsl.metrics/1";
inline constexpr std::string_view kMetricsCsvHeader = "task,seen_acc,unseen_acc,harmonic";

std::string metrics_to_json(const MetricsRecord& record);
/// DataError(invariant_violation) on malformed input or a schema mismatch.
MetricsRecord metrics_from_json(std::string_view text);

void write_metrics_json(const MetricsRecord& record, const std::filesystem::path& path);
MetricsRecord read_metrics_json(const std::filesystem::path& path);

std::string metrics_to_csv(const MetricsRecord& record);
/// Rebuilds the per-task rows and recomputes the aggregates from them.
MetricsRecord metrics_from_csv(std::string_view text);

/// Human-readable table with two decimals.
std::string format_metrics(const MetricsRecord& record);

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
