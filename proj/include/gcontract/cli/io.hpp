#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace gcontract::cli {

/// Shortest text that round-trips to the same double; "nan"/"inf" for non-finite values.
inline std::string format_number(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, end);
}

inline std::string format_number(std::size_t x) { return std::to_string(x); }

/// Delimited text table with one header line.
class Table {
public:
    Table(std::vector<std::string> header, char delimiter = ',') : columns_(header.size()), delimiter_(delimiter)
    {
        add_row(header);
    }

    void add_row(const std::vector<std::string>& cells)
    {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) text_ += delimiter_;
            text_ += cells[i];
        }
        text_ += '\n';
    }

    template <class... Cells>
    void row(const Cells&... cells)
    {
        std::vector<std::string> out;
        out.reserve(sizeof...(cells));
        (out.push_back(cell(cells)), ...);
        add_row(out);
    }

    const std::string& text() const { return text_; }
    std::size_t columns() const { return columns_; }

private:
    static std::string cell(double x) { return format_number(x); }
    static std::string cell(std::size_t x) { return std::to_string(x); }
    static std::string cell(int x) { return std::to_string(x); }
    static std::string cell(const std::string& s) { return s; }
    static std::string cell(const char* s) { return s; }

    std::size_t columns_;
    char delimiter_;
    std::string text_;
};

} // namespace gcontract::cli
