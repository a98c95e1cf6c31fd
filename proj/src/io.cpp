#include "ddm/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ddm::io {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
    fail(ErrorKind::ParseError, "line " + std::to_string(line) + ": " + what);
}

template <class T>
bool parse_number(std::string_view text, T& out) {
    const auto* end = text.data() + text.size();
    const auto res = std::from_chars(text.data(), end, out);
    return res.ec == std::errc{} && res.ptr == end;
}

struct Row {
    std::size_t line;
    std::chrono::year_month_day date;
    double value;
};

// Reads `date,<value_name>` rows and returns them sorted by date.
std::vector<Row> read_rows(std::istream& in, std::string_view value_name, bool& reordered) {
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    std::vector<Row> rows;
    while (std::getline(in, line)) {
        ++lineno;
        const auto text = trim(line);
        if (text.empty()) continue;
        if (!header_seen) {
            const std::string expected = "date," + std::string(value_name);
            if (text != expected) parse_error(lineno, "expected header '" + expected + "'");
            header_seen = true;
            continue;
        }
        const auto comma = text.find(',');
        if (comma == std::string_view::npos || text.find(',', comma + 1) != std::string_view::npos) {
            parse_error(lineno, "expected two comma-separated fields");
        }
        Row row{lineno, {}, 0.0};
        try {
            row.date = parse_date(trim(text.substr(0, comma)));
        } catch (const Error&) {
            parse_error(lineno, "bad date '" + std::string(text.substr(0, comma)) + "'");
        }
        const auto number = trim(text.substr(comma + 1));
        if (!parse_number(number, row.value) || !std::isfinite(row.value)) {
            parse_error(lineno, "bad number '" + std::string(number) + "'");
        }
        rows.push_back(row);
    }
    if (!header_seen) parse_error(lineno, "missing header");
    reordered = !std::is_sorted(rows.begin(), rows.end(),
                                [](const Row& a, const Row& b) { return a.date < b.date; });
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < rows.size(); ++i) {
        if (rows[i].date == rows[i - 1].date) {
            fail(ErrorKind::DuplicateDate, "line " + std::to_string(std::max(rows[i].line, rows[i - 1].line)) +
                                               ": " + format_date(rows[i].date));
        }
    }
    return rows;
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::IoError, "cannot open " + path.string());
    return in;
}

}  // namespace

std::chrono::year_month_day parse_date(std::string_view text) {
    int y = 0;
    unsigned m = 0;
    unsigned d = 0;
    if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_number(text.substr(0, 4), y) ||
        !parse_number(text.substr(5, 2), m) || !parse_number(text.substr(8, 2), d)) {
        fail(ErrorKind::ParseError, "expected YYYY-MM-DD, got '" + std::string(text) + "'");
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                          std::chrono::day{d}};
    if (!ymd.ok()) fail(ErrorKind::ParseError, "invalid calendar date '" + std::string(text) + "'");
    return ymd;
}

std::string format_date(std::chrono::year_month_day d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                  static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
    return buf;
}

Ingested parse_dividends(std::istream& in, const std::string& ticker) {
    bool reordered = false;
    const auto rows = read_rows(in, "dividend", reordered);
    std::vector<DividendObservation> obs;
    obs.reserve(rows.size());
    for (const auto& r : rows) {
        if (!(r.value > 0.0)) {
            fail(ErrorKind::NonPositiveDividend, "line " + std::to_string(r.line));
        }
        obs.push_back({r.date, r.value});
    }
    std::vector<std::string> warnings;
    if (reordered) warnings.push_back(ticker + ": rows were out of date order and have been sorted");
    return {DividendSeries(ticker, std::move(obs)), std::move(warnings)};
}

Ingested ingest_dividends(const std::filesystem::path& path) {
    auto in = open(path);
    return parse_dividends(in, path.stem().string());
}

std::vector<ReturnObservation> parse_returns(std::istream& in) {
    bool reordered = false;
    const auto rows = read_rows(in, "return", reordered);
    std::vector<ReturnObservation> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back({r.date, r.value});
    return out;
}

std::vector<ReturnObservation> ingest_returns(const std::filesystem::path& path) {
    auto in = open(path);
    return parse_returns(in);
}

}  // namespace ddm::io
