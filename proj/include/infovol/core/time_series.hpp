#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "infovol/core/error.hpp"

namespace infovol {

inline constexpr std::int64_t kMillisPerMinute = 60'000;

/// Epoch minute containing a millisecond timestamp; intervals are half-open [m, m+60s).
constexpr std::int64_t epoch_minute(std::int64_t timestamp_ms) noexcept {
    std::int64_t q = timestamp_ms / kMillisPerMinute;
    if (timestamp_ms % kMillisPerMinute < 0) --q;
    return q;
}

/// Fixed-interval series. `gap_mask[i]` marks values that were filled rather than observed.
struct TimeSeries {
    std::int64_t start = 0;     // epoch minute of values[0]
    std::int64_t interval = 1;  // minutes
    std::vector<double> values;
    std::vector<bool> gap_mask;

    TimeSeries() = default;

    explicit TimeSeries(std::vector<double> v, std::int64_t start_minute = 0, std::int64_t interval_minutes = 1)
        : start(start_minute), interval(interval_minutes), values(std::move(v)), gap_mask(values.size(), false) {
        validate();
    }

    TimeSeries(std::vector<double> v, std::vector<bool> gaps, std::int64_t start_minute = 0,
               std::int64_t interval_minutes = 1)
        : start(start_minute), interval(interval_minutes), values(std::move(v)), gap_mask(std::move(gaps)) {
        validate();
    }

    std::size_t size() const noexcept { return values.size(); }
    bool empty() const noexcept { return values.empty(); }
    double operator[](std::size_t i) const { return values[i]; }
    std::span<const double> view() const noexcept { return values; }

    std::int64_t minute_at(std::size_t i) const noexcept {
        return start + static_cast<std::int64_t>(i) * interval;
    }

    std::size_t gap_count() const noexcept {
        std::size_t n = 0;
        for (bool g : gap_mask) n += g ? 1 : 0;
        return n;
    }

    /// Sub-series [first, first + count).
    TimeSeries slice(std::size_t first, std::size_t count) const {
        if (first + count > size()) throw ArgumentError("slice out of range");
        TimeSeries out;
        out.start = minute_at(first);
        out.interval = interval;
        out.values.assign(values.begin() + first, values.begin() + first + count);
        out.gap_mask.assign(gap_mask.begin() + first, gap_mask.begin() + first + count);
        return out;
    }

    void validate() const {
        if (values.size() != gap_mask.size()) throw ArgumentError("values and gap_mask differ in length");
        if (interval <= 0) throw ArgumentError("interval must be positive");
    }
};

/// Trim two series to their common minute range. Both must share the interval.
inline std::pair<TimeSeries, TimeSeries> align(const TimeSeries& a, const TimeSeries& b) {
    if (a.interval != b.interval) throw ArgumentError("cannot align series with different intervals");
    const std::int64_t first = std::max(a.start, b.start);
    const std::int64_t a_end = a.start + static_cast<std::int64_t>(a.size()) * a.interval;
    const std::int64_t b_end = b.start + static_cast<std::int64_t>(b.size()) * b.interval;
    const std::int64_t last = std::min(a_end, b_end);
    if (last <= first) throw AlignmentError("series do not overlap", a.size(), b.size());
    const auto count = static_cast<std::size_t>((last - first) / a.interval);
    return {a.slice(static_cast<std::size_t>((first - a.start) / a.interval), count),
            b.slice(static_cast<std::size_t>((first - b.start) / b.interval), count)};
}

inline void require_same_length(const TimeSeries& a, const TimeSeries& b, const std::string& what) {
    if (a.size() != b.size()) throw AlignmentError(what + ": series are not aligned", a.size(), b.size());
}

}  // namespace infovol
