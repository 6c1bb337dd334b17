#include "infotime/data/series.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace infotime::data {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

bool parse_double(const std::string& text, double& out) {
    if (text.empty()) return false;
    const char* begin = text.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    while (end && *end == ' ') ++end;
    return end == begin + text.size();
}

} // namespace

SeriesFrame load_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ParseError("csv: cannot open " + path.string());

    std::string line;
    std::size_t line_no = 0;
    SeriesFrame frame;

    if (!std::getline(is, line)) throw ParseError("csv: " + path.string() + " is empty");
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_line(line);
    if (header.size() < 2)
        throw ParseError("csv: header must have a timestamp column and at least one channel");
    bool all_numeric = true;
    for (std::size_t c = 1; c < header.size(); ++c) {
        double ignored;
        if (!parse_double(header[c], ignored)) all_numeric = false;
    }
    if (all_numeric) throw ParseError("csv: first line looks numeric; missing header row?");
    frame.cols = header.size() - 1;
    frame.channel_names.assign(header.begin() + 1, header.end());

    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto cells = split_line(line);
        if (cells.size() != frame.cols + 1)
            throw ParseError("csv: line " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(frame.cols + 1));
        frame.timestamps.push_back(cells[0]);
        for (std::size_t c = 1; c < cells.size(); ++c) {
            double v;
            if (!parse_double(cells[c], v))
                throw ParseError("csv: line " + std::to_string(line_no) + ", column " +
                                 std::to_string(c + 1) + " (\"" + cells[c] + "\"): not a number");
            frame.values.push_back(v);
        }
        ++frame.rows;
    }
    return frame;
}

void write_csv(const SeriesFrame& frame, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::trunc);
        if (!os) throw std::runtime_error("csv: cannot open " + tmp.string());
        os << "date";
        for (const auto& name : frame.channel_names) os << ',' << name;
        os << '\n';
        char buf[64];
        for (std::size_t r = 0; r < frame.rows; ++r) {
            os << (r < frame.timestamps.size() ? frame.timestamps[r] : std::to_string(r));
            for (std::size_t c = 0; c < frame.cols; ++c) {
                std::snprintf(buf, sizeof(buf), "%.17g", frame.at(r, c));
                os << ',' << buf;
            }
            os << '\n';
        }
        if (!os) throw std::runtime_error("csv: write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

SplitSpec parse_split(const std::string& text) {
    SplitSpec spec;
    unsigned long long a = 0, b = 0, c = 0;
    if (std::sscanf(text.c_str(), "%llu:%llu:%llu", &a, &b, &c) != 3)
        throw ConfigError("split: expected \"train:val:test\", got \"" + text + "\"");
    spec.ratios = {a, b, c};
    if (spec.sum() == 0) throw ConfigError("split: ratios sum to zero");
    return spec;
}

SplitRanges split_chronological(std::size_t total_rows, const SplitSpec& spec,
                                std::size_t lookback, std::size_t horizon) {
    if (spec.sum() == 0) throw ConfigError("split: ratios sum to zero");
    const std::size_t b1 = total_rows * spec.ratios[0] / spec.sum();
    const std::size_t b2 = total_rows * (spec.ratios[0] + spec.ratios[1]) / spec.sum();

    auto require_window = [&](const char* name, std::size_t target_rows, bool enabled) {
        if (enabled && target_rows < horizon)
            throw ConfigError(std::string("split: ") + name + " segment has " +
                              std::to_string(target_rows) + " target rows, needs " +
                              std::to_string(horizon) + " (T=" + std::to_string(lookback) +
                              ", P=" + std::to_string(horizon) + ")");
    };
    if (spec.ratios[0] > 0 && b1 < lookback + horizon)
        throw ConfigError("split: train segment of " + std::to_string(b1) +
                          " rows is shorter than T+P=" + std::to_string(lookback + horizon));
    require_window("val", b2 - b1, spec.ratios[1] > 0);
    require_window("test", total_rows - b2, spec.ratios[2] > 0);

    SplitRanges out;
    out.train = {0, b1};
    out.val = {spec.ratios[1] > 0 ? b1 - lookback : b1, b2};
    out.test = {spec.ratios[2] > 0 ? b2 - lookback : b2, total_rows};
    out.train_rows_end = b1;
    return out;
}

NormStats fit_standardizer(const SeriesFrame& frame, std::size_t row_begin, std::size_t row_end) {
    if (row_begin >= row_end || row_end > frame.rows)
        throw ContractError("standardizer: empty or out-of-range train rows");
    const std::size_t n = row_end - row_begin;
    NormStats stats;
    stats.mean.assign(frame.cols, 0.0);
    stats.std_dev.assign(frame.cols, 0.0);
    for (std::size_t r = row_begin; r < row_end; ++r)
        for (std::size_t c = 0; c < frame.cols; ++c) stats.mean[c] += frame.at(r, c);
    for (double& m : stats.mean) m /= static_cast<double>(n);
    for (std::size_t r = row_begin; r < row_end; ++r)
        for (std::size_t c = 0; c < frame.cols; ++c) {
            const double d = frame.at(r, c) - stats.mean[c];
            stats.std_dev[c] += d * d;
        }
    for (double& s : stats.std_dev) s = std::max(std::sqrt(s / static_cast<double>(n)), stats.eps);
    return stats;
}

SeriesFrame NormStats::apply(const SeriesFrame& frame) const {
    SeriesFrame out = frame;
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.at(r, c) = (frame.at(r, c) - mean[c]) / std_dev[c];
    return out;
}

SeriesFrame NormStats::invert(const SeriesFrame& frame) const {
    SeriesFrame out = frame;
    for (std::size_t r = 0; r < out.rows; ++r)
        for (std::size_t c = 0; c < out.cols; ++c)
            out.at(r, c) = frame.at(r, c) * std_dev[c] + mean[c];
    return out;
}

} // namespace infotime::data
