#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "infovol/core/error.hpp"
#include "infovol/core/time_series.hpp"

namespace infovol::marketdata {

struct TradeTick {
    std::int64_t timestamp = 0;  // epoch ms, UTC
    double price = 0.0;
    double quantity = 0.0;
};

struct QuoteTick {
    std::int64_t timestamp = 0;
    double best_bid = 0.0;
    double best_ask = 0.0;
};

struct SignalPoint {
    std::int64_t timestamp = 0;
    double value = 0.0;
};

/// Column layout of an input CSV. Columns are zero-based; the two value columns are
/// (price, quantity) for trades, (bid, ask) for quotes, and (value, unused) for signals.
struct CsvFormat {
    bool has_header = false;
    char delimiter = ',';
    std::size_t timestamp_col = 0;
    std::size_t first_col = 1;
    std::size_t second_col = 2;
};

template <class Tick>
struct ParseResult {
    std::vector<Tick> ticks;
    std::vector<std::size_t> malformed_rows;  // 1-based physical line numbers
    std::size_t rows_read = 0;
};

inline constexpr std::size_t kUnusedColumn = static_cast<std::size_t>(-1);

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t pos = 0;
    while (true) {
        const auto next = line.find(delim, pos);
        out.push_back(trim(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos)));
        if (next == std::string_view::npos) break;
        pos = next + 1;
    }
    return out;
}

inline std::optional<double> to_double(std::string_view s) {
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

inline std::optional<std::int64_t> to_int64(std::string_view s) {
    std::int64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc{} && ptr == s.data() + s.size()) return v;
    // tolerate "1555545600000.0"
    if (auto d = to_double(s); d && *d == std::floor(*d) && std::abs(*d) < 9.0e18) return static_cast<std::int64_t>(*d);
    return std::nullopt;
}

/// Generic row loop: `make` returns a tick for a valid row, or nullopt to reject it.
template <class Tick, class Make>
ParseResult<Tick> parse_rows(std::istream& in, const CsvFormat& fmt, const char* what, Make&& make) {
    ParseResult<Tick> out;
    std::string line;
    std::size_t line_no = 0;
    bool header_pending = fmt.has_header;
    std::size_t first_bad = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto body = trim(line);
        if (body.empty()) continue;
        if (header_pending) {
            header_pending = false;
            continue;
        }
        ++out.rows_read;
        const auto fields = split(body, fmt.delimiter);
        std::optional<Tick> tick;
        std::size_t last_col = std::max(fmt.timestamp_col, fmt.first_col);
        if (fmt.second_col != kUnusedColumn) last_col = std::max(last_col, fmt.second_col);
        if (fields.size() > last_col) tick = make(fields);
        if (tick) {
            out.ticks.push_back(*tick);
        } else {
            out.malformed_rows.push_back(line_no);
            if (first_bad == 0) first_bad = line_no;
        }
    }
    if (out.rows_read == 0) throw EmptyInputError(std::string(what) + ": input has no data rows");
    if (out.ticks.empty()) throw IngestionError(std::string(what) + ": no parseable rows", first_bad);
    std::stable_sort(out.ticks.begin(), out.ticks.end(),
                     [](const Tick& a, const Tick& b) { return a.timestamp < b.timestamp; });
    return out;
}

}  // namespace detail

/// Reads `timestamp_ms,price,quantity` rows. Rows that fail to parse or violate
/// price > 0, quantity > 0 are skipped and reported; output is sorted by timestamp.
inline ParseResult<TradeTick> parse_trades(std::istream& in, const CsvFormat& fmt = {}) {
    return detail::parse_rows<TradeTick>(in, fmt, "trades", [&](const auto& f) -> std::optional<TradeTick> {
        auto ts = detail::to_int64(f[fmt.timestamp_col]);
        auto p = detail::to_double(f[fmt.first_col]);
        auto q = detail::to_double(f[fmt.second_col]);
        if (!ts || !p || !q || *p <= 0.0 || *q <= 0.0) return std::nullopt;
        return TradeTick{*ts, *p, *q};
    });
}

/// Reads `timestamp_ms,bid,ask` rows; requires ask >= bid > 0.
inline ParseResult<QuoteTick> parse_quotes(std::istream& in, const CsvFormat& fmt = {}) {
    return detail::parse_rows<QuoteTick>(in, fmt, "quotes", [&](const auto& f) -> std::optional<QuoteTick> {
        auto ts = detail::to_int64(f[fmt.timestamp_col]);
        auto bid = detail::to_double(f[fmt.first_col]);
        auto ask = detail::to_double(f[fmt.second_col]);
        if (!ts || !bid || !ask || *bid <= 0.0 || *ask < *bid) return std::nullopt;
        return QuoteTick{*ts, *bid, *ask};
    });
}

/// Reads `timestamp_ms,value` rows.
inline ParseResult<SignalPoint> parse_signal(std::istream& in, CsvFormat fmt = {}) {
    fmt.second_col = kUnusedColumn;
    return detail::parse_rows<SignalPoint>(in, fmt, "signal", [&](const auto& f) -> std::optional<SignalPoint> {
        auto ts = detail::to_int64(f[fmt.timestamp_col]);
        auto v = detail::to_double(f[fmt.first_col]);
        if (!ts || !v) return std::nullopt;
        return SignalPoint{*ts, *v};
    });
}

namespace detail {

/// Buckets sorted items by epoch minute, calling `reduce(bucket)` for each occupied
/// minute and `fill(previous)` for empty ones.
template <class Item, class Reduce, class Fill>
TimeSeries minute_bars(std::span<const Item> items, Reduce&& reduce, Fill&& fill) {
    const std::int64_t first = epoch_minute(items.front().timestamp);
    const std::int64_t last = epoch_minute(items.back().timestamp);
    TimeSeries out;
    out.start = first;
    out.values.reserve(static_cast<std::size_t>(last - first + 1));
    std::size_t i = 0;
    for (std::int64_t m = first; m <= last; ++m) {
        std::size_t j = i;
        while (j < items.size() && epoch_minute(items[j].timestamp) == m) ++j;
        if (j > i) {
            out.values.push_back(reduce(items.subspan(i, j - i)));
            out.gap_mask.push_back(false);
        } else {
            out.values.push_back(fill(out.values.back()));
            out.gap_mask.push_back(true);
        }
        i = j;
    }
    return out;
}

template <class Item>
void require_sorted(std::span<const Item> items, const char* what) {
    if (items.empty()) throw EmptyInputError(std::string(what) + ": no observations");
    for (std::size_t i = 1; i < items.size(); ++i)
        if (items[i].timestamp < items[i - 1].timestamp)
            throw ArgumentError(std::string(what) + ": timestamps not sorted");
}

}  // namespace detail

/// Per-minute volume-weighted average price; empty minutes carry the previous bar.
inline TimeSeries vwap_bars(std::span<const TradeTick> trades) {
    detail::require_sorted(trades, "vwap_bars");
    return detail::minute_bars(
        trades,
        [](std::span<const TradeTick> bucket) {
            double pq = 0.0, q = 0.0;
            for (const auto& t : bucket) {
                pq += t.price * t.quantity;
                q += t.quantity;
            }
            return pq / q;
        },
        [](double prev) { return prev; });
}

/// Per-minute midpoint of the last quote tick in the minute; empty minutes carry the previous bar.
inline TimeSeries midquote_bars(std::span<const QuoteTick> quotes) {
    detail::require_sorted(quotes, "midquote_bars");
    return detail::minute_bars(
        quotes, [](std::span<const QuoteTick> bucket) { return 0.5 * (bucket.back().best_bid + bucket.back().best_ask); },
        [](double prev) { return prev; });
}

/// r_t = ln(p_t / p_{t-1}). A return is flagged when either endpoint price was filled.
inline TimeSeries log_returns(const TimeSeries& prices) {
    if (prices.size() < 2) throw ArgumentError("log_returns: need at least two prices");
    for (std::size_t i = 0; i < prices.size(); ++i)
        if (!(prices.values[i] > 0.0)) throw DomainError("log_returns: non-positive price at index " + std::to_string(i));
    TimeSeries out;
    out.start = prices.start + prices.interval;
    out.interval = prices.interval;
    out.values.reserve(prices.size() - 1);
    for (std::size_t i = 1; i < prices.size(); ++i) {
        out.values.push_back(std::log(prices.values[i] / prices.values[i - 1]));
        out.gap_mask.push_back(prices.gap_mask[i] || prices.gap_mask[i - 1]);
    }
    return out;
}

enum class Aggregation { Sum, Mean };

/// Minute-level aggregation of a sub-minute signal. Empty minutes are 0 under Sum and the
/// previous value under Mean; both are flagged.
inline TimeSeries aggregate_signal(std::span<const SignalPoint> raw, Aggregation method) {
    detail::require_sorted(raw, "aggregate_signal");
    if (method == Aggregation::Sum) {
        return detail::minute_bars(
            raw,
            [](std::span<const SignalPoint> b) {
                double s = 0.0;
                for (const auto& p : b) s += p.value;
                return s;
            },
            [](double) { return 0.0; });
    }
    return detail::minute_bars(
        raw,
        [](std::span<const SignalPoint> b) {
            double s = 0.0;
            for (const auto& p : b) s += p.value;
            return s / static_cast<double>(b.size());
        },
        [](double prev) { return prev; });
}

struct DescriptiveStats {
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
    double min = 0.0;
    double std_dev = 0.0;   // n-1 denominator
    double skewness = 0.0;  // m3 / m2^{3/2}
    double kurtosis = 0.0;  // m4 / m2^2, raw (normal = 3)
};

inline double sample_mean(std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v;
    return s / static_cast<double>(x.size());
}

inline double sample_std_dev(std::span<const double> x) {
    if (x.size() < 2) throw ArgumentError("sample_std_dev: need at least two values");
    const double m = sample_mean(x);
    double ss = 0.0;
    for (double v : x) ss += (v - m) * (v - m);
    return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

inline DescriptiveStats descriptive_stats(const TimeSeries& series) {
    const auto x = series.view();
    if (x.size() < 2) throw ArgumentError("descriptive_stats: need at least two values");
    DescriptiveStats s;
    s.mean = sample_mean(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - s.mean;
        const double d2 = d * d;
        m2 += d2;
        m3 += d2 * d;
        m4 += d2 * d2;
    }
    const auto n = static_cast<double>(x.size());
    s.std_dev = std::sqrt(m2 / (n - 1.0));
    m2 /= n;
    m3 /= n;
    m4 /= n;
    std::vector<double> sorted(x.begin(), x.end());
    std::sort(sorted.begin(), sorted.end());
    s.min = sorted.front();
    s.max = sorted.back();
    const std::size_t h = sorted.size() / 2;
    s.median = sorted.size() % 2 == 1 ? sorted[h] : 0.5 * (sorted[h - 1] + sorted[h]);
    if (!(m2 > 0.0)) throw DegenerateError("descriptive_stats: constant series, skewness and kurtosis undefined (std_dev = 0)");
    s.skewness = m3 / std::pow(m2, 1.5);
    s.kurtosis = m4 / (m2 * m2);
    return s;
}

struct Autocorrelation {
    std::vector<int> lags;
    std::vector<double> acf;
    double band = 0.0;  // 95% white-noise band, +-1.96/sqrt(n)
};

inline Autocorrelation autocorrelation(const TimeSeries& series, int max_lag) {
    const auto x = series.view();
    if (max_lag <= 0) throw ArgumentError("autocorrelation: max_lag must be positive");
    if (static_cast<std::size_t>(max_lag) >= x.size()) throw ArgumentError("autocorrelation: max_lag >= series length");
    const double m = sample_mean(x);
    double denom = 0.0;
    for (double v : x) denom += (v - m) * (v - m);
    if (!(denom > 0.0)) throw DegenerateError("autocorrelation: zero variance");
    Autocorrelation out;
    for (int k = 1; k <= max_lag; ++k) {
        double num = 0.0;
        for (std::size_t t = static_cast<std::size_t>(k); t < x.size(); ++t) num += (x[t] - m) * (x[t - k] - m);
        out.lags.push_back(k);
        out.acf.push_back(num / denom);
    }
    out.band = 1.96 / std::sqrt(static_cast<double>(x.size()));
    return out;
}

}  // namespace infovol::marketdata
