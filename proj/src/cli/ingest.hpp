#pragma once

#include "densityshape/sample.hpp"

#include <string>

namespace densityshape::cli {

struct IngestReport
{
  Sample sample;
  std::size_t n = 0;
  double min = 0.0;
  double max = 0.0;
  std::size_t duplicates = 0; // observations equal to their predecessor after sorting
  std::string column;         // resolved column name or index
};

//! Reads one column of reals from a text file. Lines are split on commas;
//! '#' starts a comment; blank lines are skipped; CRLF is accepted. The first
//! data line is a header when the column is selected by name, or when it
//! holds a token that is not a number. The selector is a header name, a
//! 1-based column index, or empty for the first column.
IngestReport ingest(const std::string& path, const std::string& column = {});

//! Same rules applied to in-memory text; `source` names it in messages.
IngestReport ingest_text(const std::string& text, const std::string& column, const std::string& source);

} // namespace densityshape::cli
