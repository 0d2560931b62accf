#include "shapefit/csv.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>

namespace shapefit {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char ch = line[i];
        if (quoted) {
            if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (ch == '"') {
                quoted = false;
            } else {
                cur += ch;
            }
        } else if (ch == '"') {
            quoted = true;
        } else if (ch == ',') {
            out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur += ch;
        }
    }
    out.push_back(std::move(cur));
    return out;
}

std::string trim(std::string s) {
    const auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    return s;
}

bool parse_number(const std::string& text, double& value) {
    const char* first = text.data();
    const char* last = first + text.size();
    if (first != last && *first == '+')
        ++first;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    return ec == std::errc() && ptr == last && std::isfinite(value);
}

bool needs_quotes(const std::string& s) {
    return s.find_first_of(",\"\n\r") != std::string::npos;
}

std::string quote(const std::string& s) {
    if (!needs_quotes(s))
        return s;
    std::string out = "\"";
    for (char ch : s) {
        if (ch == '"')
            out += '"';
        out += ch;
    }
    out += '"';
    return out;
}

}  // namespace

std::size_t CsvTable::index_of(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw CsvError("column '" + name + "' not found in header", 0, name);
    return static_cast<std::size_t>(it - header.begin());
}

CsvTable read_csv(std::istream& in) {
    CsvTable table;
    std::string line;
    bool have_header = false;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (trim(line).empty())
            continue;
        auto fields = split_fields(line);
        if (!have_header) {
            for (auto& f : fields) {
                f = trim(f);
                if (f.empty())
                    throw CsvError("empty column name in header", 0, "");
                if (std::find(table.header.begin(), table.header.end(), f) != table.header.end())
                    throw CsvError("duplicate column name '" + f + "' in header", 0, f);
                table.header.push_back(f);
            }
            table.columns.resize(table.header.size());
            have_header = true;
            continue;
        }
        ++row;
        if (fields.size() != table.header.size())
            throw CsvError("row " + std::to_string(row) + " has " + std::to_string(fields.size()) +
                               " fields, header has " + std::to_string(table.header.size()),
                           row, "");
        for (std::size_t j = 0; j < fields.size(); ++j) {
            const std::string cell = trim(fields[j]);
            double v = 0.0;
            if (cell.empty())
                throw CsvError("missing value at row " + std::to_string(row) + ", column '" +
                                   table.header[j] + "'",
                               row, table.header[j]);
            if (!parse_number(cell, v))
                throw CsvError("non-numeric value '" + cell + "' at row " + std::to_string(row) +
                                   ", column '" + table.header[j] + "'",
                               row, table.header[j]);
            table.columns[j].push_back(v);
        }
    }
    if (!have_header)
        throw CsvError("missing header row", 0, "");
    return table;
}

CsvTable read_csv_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw std::runtime_error("cannot open '" + path + "' for reading");
    return read_csv(in);
}

Dataset to_dataset(const CsvTable& table, const std::string& response) {
    std::size_t resp = 0;
    if (!response.empty()) {
        resp = table.index_of(response);
    } else {
        if (table.header.empty())
            throw CsvError("table has no columns", 0, "");
        const auto it = std::find(table.header.begin(), table.header.end(), "y");
        resp = it != table.header.end() ? static_cast<std::size_t>(it - table.header.begin())
                                        : table.header.size() - 1;
    }
    Dataset d;
    const std::size_t n = table.rows();
    d.y = table.columns[resp];
    d.X = Matrix(n, table.header.size() - 1);
    std::size_t k = 0;
    for (std::size_t j = 0; j < table.header.size(); ++j) {
        if (j == resp)
            continue;
        std::copy(table.columns[j].begin(), table.columns[j].end(), d.X.col(k).begin());
        d.names.push_back(table.header[j]);
        ++k;
    }
    return d;
}

CsvTable from_dataset(const Dataset& data, const std::string& response) {
    CsvTable t;
    for (std::size_t j = 0; j < data.p(); ++j) {
        t.header.push_back(j < data.names.size() ? data.names[j] : "x" + std::to_string(j + 1));
        const auto col = data.X.col(j);
        t.columns.emplace_back(col.begin(), col.end());
    }
    t.header.push_back(response);
    t.columns.push_back(data.y);
    return t;
}

std::string format_double(double v) {
    if (v == 0.0)
        v = 0.0;  // drop the sign of negative zero
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const CsvTable& table) {
    for (std::size_t j = 0; j < table.header.size(); ++j)
        out << (j ? "," : "") << quote(table.header[j]);
    out << '\n';
    const std::size_t n = table.rows();
    std::string line;
    for (std::size_t i = 0; i < n; ++i) {
        line.clear();
        for (std::size_t j = 0; j < table.columns.size(); ++j) {
            if (j)
                line += ',';
            // Non-finite cells mean "not evaluated" and stay empty.
            if (std::isfinite(table.columns[j][i]))
                line += format_double(table.columns[j][i]);
        }
        line += '\n';
        out << line;
    }
}

void write_csv_file(const std::string& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw std::runtime_error("cannot open '" + path + "' for writing");
    write_csv(out, table);
    if (!out)
        throw std::runtime_error("write to '" + path + "' failed");
}

}  // namespace shapefit
