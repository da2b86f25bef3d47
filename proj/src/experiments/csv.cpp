#include "mfstop/experiments/csv.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "mfstop/error.hpp"

namespace mfstop {

std::size_t Table::column(std::string_view name) const {
    for (std::size_t k = 0; k < header.size(); ++k)
        if (header[k] == name) return k;
    throw InvalidArgument("table has no column '" + std::string(name) + "'");
}

std::string format_cell(const Cell& cell) {
    if (const auto* d = std::get_if<double>(&cell)) {
        if (std::isnan(*d)) return "nan";
        char buf[40];
        std::snprintf(buf, sizeof buf, "%.17g", *d);
        return buf;
    }
    if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
    if (const auto* u = std::get_if<std::uint64_t>(&cell)) return std::to_string(*u);
    return std::get<std::string>(cell);
}

namespace {

std::string escape(const std::string& field) {
    if (field.find_first_of(",\"\r\n") == std::string::npos) return field;
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void append_line(std::string& out, const std::vector<std::string>& fields) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
        if (k) out += ',';
        out += escape(fields[k]);
    }
    out += "\r\n";
}

}  // namespace

std::string to_csv(const Table& table) {
    std::string out;
    append_line(out, table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) throw InvalidArgument("row width does not match the header");
        std::vector<std::string> fields;
        for (const auto& c : row) fields.push_back(format_cell(c));
        append_line(out, fields);
    }
    return out;
}

void write_csv(const Table& table, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidArgument("cannot write '" + path.string() + "'");
    out << to_csv(table);
}

std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false, any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        any = true;
        if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
        } else if (c == '\r' || c == '\n') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            row.push_back(std::move(field));
            field.clear();
            rows.push_back(std::move(row));
            row.clear();
            any = false;
        } else {
            field += c;
        }
    }
    if (quoted) throw InvalidArgument("unterminated quoted CSV field");
    if (any) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace mfstop
