#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace mfstop {

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;
using Row = std::vector<Cell>;

struct Table {
    std::vector<std::string> header;
    std::vector<Row> rows;

    std::size_t column(std::string_view name) const;
};

// Doubles at 17 significant digits; NaN prints as "nan".
std::string format_cell(const Cell& cell);
std::string to_csv(const Table& table);
void write_csv(const Table& table, const std::filesystem::path& path);

// RFC 4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
std::vector<std::vector<std::string>> parse_csv(std::string_view text);

}  // namespace mfstop
