#pragma once

#include <chrono>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "ddm/core.hpp"

namespace ddm::io {

struct Ingested {
    DividendSeries series;
    std::vector<std::string> warnings;
};

/// Parses `date,dividend` CSV text (ISO-8601 dates). Rows are sorted by date
/// with a warning when they arrive out of order.
/// Throws ParseError, NonPositiveDividend or DuplicateDate with the 1-based line.
Ingested parse_dividends(std::istream& in, const std::string& ticker);

/// Reads a dividend CSV from disk; the ticker is the file stem.
/// Throws IoError when the file cannot be opened.
Ingested ingest_dividends(const std::filesystem::path& path);

struct ReturnObservation {
    std::chrono::year_month_day date;
    double value = 0.0;
};

/// Parses `date,return` CSV text, sorted by date.
std::vector<ReturnObservation> parse_returns(std::istream& in);
std::vector<ReturnObservation> ingest_returns(const std::filesystem::path& path);

/// Strict YYYY-MM-DD.
std::chrono::year_month_day parse_date(std::string_view text);
std::string format_date(std::chrono::year_month_day d);

}  // namespace ddm::io
