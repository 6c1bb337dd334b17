#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "infotime/errors.hpp"

namespace infotime::data {

/// A multivariate series: L_total rows by C channels, chronological row
/// order, with channel names and pass-through timestamps.
struct SeriesFrame {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values; // rows x cols, row-major
    std::vector<std::string> channel_names;
    std::vector<std::string> timestamps; // empty, or one per row

    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
};

/// Parse a CSV with a header row, timestamp first column and numeric
/// channels. Errors carry the offending line/column.
SeriesFrame load_csv(const std::filesystem::path& path);

/// Write a frame in the same layout ("date" first). Numbers are printed
/// with 17 significant digits so values round-trip exactly.
void write_csv(const SeriesFrame& frame, const std::filesystem::path& path);

/// train:val:test ratio triple, e.g. {6,2,2}.
struct SplitSpec {
    std::array<std::uint64_t, 3> ratios{6, 2, 2};

    std::uint64_t sum() const { return ratios[0] + ratios[1] + ratios[2]; }
};

/// Parse "6:2:2" style strings.
SplitSpec parse_split(const std::string& text);

/// Half-open row range of window start positions. Targets occupy rows
/// [begin + lookback, end); for val/test, begin is extended backward by
/// the lookback so the first target sits exactly on the split boundary.
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - begin; }
    bool empty() const { return begin >= end; }
};

struct SplitRanges {
    RowRange train, val, test;
    std::size_t train_rows_end = 0; // rows [0, train_rows_end) fit the standardizer
};

/// Chronological split at floor(L*r_train/r_sum) and
/// floor(L*(r_train+r_val)/r_sum), with val/test extended backward by
/// `lookback` rows for context. A split with a nonzero ratio that cannot
/// fit one (lookback, horizon) window is a configuration error.
SplitRanges split_chronological(std::size_t total_rows, const SplitSpec& spec,
                                std::size_t lookback, std::size_t horizon);

/// Per-channel z-scoring statistics fit on the train rows.
struct NormStats {
    std::vector<double> mean;
    std::vector<double> std_dev; // floored at eps
    double eps = 1e-8;

    SeriesFrame apply(const SeriesFrame& frame) const;
    SeriesFrame invert(const SeriesFrame& frame) const;
};

NormStats fit_standardizer(const SeriesFrame& frame, std::size_t row_begin, std::size_t row_end);

} // namespace infotime::data
