#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mktgen/core.hpp"

namespace mktgen {

/// Column-named T x d matrix of observations with an optional date index.
struct SeriesFrame {
    std::vector<std::string> columns;
    Matrix data;                     // rows = observations, cols = series
    std::vector<std::string> index;  // empty or one ISO-8601 date per row

    SeriesFrame() = default;

    SeriesFrame(std::vector<std::string> names, Matrix values, std::vector<std::string> dates = {})
        : columns(std::move(names)), data(std::move(values)), index(std::move(dates))
    {
        validate();
    }

    /// Frame with generated column names c0..c{d-1}.
    static SeriesFrame from_matrix(Matrix values, const std::string& prefix = "c")
    {
        std::vector<std::string> names;
        for (Index j = 0; j < values.cols(); ++j)
            names.push_back(prefix + std::to_string(j));
        return SeriesFrame(std::move(names), std::move(values));
    }

    Index rows() const noexcept { return data.rows(); }
    Index cols() const noexcept { return data.cols(); }
    bool has_index() const noexcept { return !index.empty(); }

    void validate() const
    {
        require(static_cast<Index>(columns.size()) == data.cols(), ErrorCode::ShapeError,
                "column names do not match data width");
        require(data.allFinite(), ErrorCode::InvalidValue, "frame contains non-finite values");
        if (!index.empty()) {
            require(static_cast<Index>(index.size()) == data.rows(), ErrorCode::ShapeError,
                    "date index length differs from row count");
            for (std::size_t i = 1; i < index.size(); ++i)
                require(index[i - 1] < index[i], ErrorCode::InvalidValue,
                        "date index not strictly increasing at row " + std::to_string(i));
        }
    }

    /// Same columns, new values (index dropped unless the row count still matches).
    SeriesFrame with_data(Matrix values) const
    {
        SeriesFrame out;
        out.columns = columns;
        if (values.rows() == data.rows())
            out.index = index;
        out.data = std::move(values);
        out.validate();
        return out;
    }
};

namespace detail {

inline bool is_iso_date(std::string_view s)
{
    if (s.size() != 10 || s[4] != '-' || s[7] != '-')
        return false;
    for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
        if (s[i] < '0' || s[i] > '9')
            return false;
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
        s.remove_suffix(1);
    return s;
}

inline std::vector<std::string_view> split_commas(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

inline double parse_number(std::string_view token, std::size_t line_no)
{
    double value = 0.0;
    const auto* first = token.data();
    const auto* last = token.data() + token.size();
    if (!token.empty() && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc() || ptr != last || token.empty())
        fail(ErrorCode::InvalidValue, "line " + std::to_string(line_no) + ": not a number '" + std::string(token) + "'");
    if (!std::isfinite(value))
        fail(ErrorCode::InvalidValue, "line " + std::to_string(line_no) + ": non-finite value '" + std::string(token) + "'");
    return value;
}

} // namespace detail

/// Shortest decimal representation that round-trips.
inline std::string format_double(double x)
{
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
    return std::string(buf, ptr);
}

/// Parses CSV text: header row, optional leading "date" column, decimal numerics.
inline SeriesFrame read_csv(std::istream& in)
{
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), ErrorCode::InvalidValue, "CSV is empty (missing header)");
    auto header = detail::split_commas(line);
    const bool dated = !header.empty() && (header[0] == "date" || header[0] == "Date");
    std::vector<std::string> names;
    for (std::size_t j = dated ? 1 : 0; j < header.size(); ++j) {
        require(!header[j].empty(), ErrorCode::InvalidValue, "line 1: empty column name");
        names.emplace_back(header[j]);
    }
    require(!names.empty(), ErrorCode::InvalidValue, "line 1: no data columns");

    std::vector<double> values;
    std::vector<std::string> dates;
    std::size_t line_no = 1;
    Index n_rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty())
            continue;
        auto fields = detail::split_commas(line);
        require(fields.size() == header.size(), ErrorCode::InvalidValue,
                "line " + std::to_string(line_no) + ": expected " + std::to_string(header.size()) + " fields, got " +
                    std::to_string(fields.size()));
        std::size_t j0 = 0;
        if (dated) {
            require(detail::is_iso_date(fields[0]), ErrorCode::InvalidValue,
                    "line " + std::to_string(line_no) + ": invalid ISO-8601 date '" + std::string(fields[0]) + "'");
            dates.emplace_back(fields[0]);
            j0 = 1;
        }
        for (std::size_t j = j0; j < fields.size(); ++j)
            values.push_back(detail::parse_number(fields[j], line_no));
        ++n_rows;
    }

    const auto d = static_cast<Index>(names.size());
    Matrix data(n_rows, d);
    for (Index i = 0; i < n_rows; ++i)
        for (Index j = 0; j < d; ++j)
            data(i, j) = values[static_cast<std::size_t>(i * d + j)];
    return SeriesFrame(std::move(names), std::move(data), std::move(dates));
}

inline SeriesFrame read_csv_file(const std::filesystem::path& path)
{
    std::ifstream in(path);
    require(in.good(), ErrorCode::IoError, "cannot open " + path.string());
    return read_csv(in);
}

inline void write_csv(std::ostream& out, const SeriesFrame& frame)
{
    if (frame.has_index())
        out << "date,";
    for (std::size_t j = 0; j < frame.columns.size(); ++j)
        out << (j ? "," : "") << frame.columns[j];
    out << '\n';
    for (Index i = 0; i < frame.rows(); ++i) {
        if (frame.has_index())
            out << frame.index[static_cast<std::size_t>(i)] << ',';
        for (Index j = 0; j < frame.cols(); ++j)
            out << (j ? "," : "") << format_double(frame.data(i, j));
        out << '\n';
    }
}

/// Writes via a temporary sibling and renames, so readers never see a partial file.
template <typename Writer>
void write_atomically(const std::filesystem::path& path, Writer&& writer)
{
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        require(out.good(), ErrorCode::IoError, "cannot write " + tmp.string());
        writer(out);
        out.flush();
        require(out.good(), ErrorCode::IoError, "write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

inline void write_csv_file(const std::filesystem::path& path, const SeriesFrame& frame)
{
    write_atomically(path, [&](std::ostream& out) { write_csv(out, frame); });
}

} // namespace mktgen
