#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "txtopo/graph.hpp"

namespace txtopo {

// Column mapping for delimited transaction files. Either a combined
// `timestamp` column or a `date` column (optionally with `time`) must be
// mapped. Defaults follow the SAML-D public release naming; every name is
// configuration, never asserted.
struct ColumnMapping {
  std::string sender = "Sender_account";
  std::string receiver = "Receiver_account";
  std::string date = "Date";
  std::string time = "Time";
  std::string timestamp;  // combined column; takes precedence when set
  char delimiter = ',';
};

struct LoadReport {
  std::int64_t rows_read = 0;
  std::int64_t loaded = 0;
  std::int64_t self_transfers = 0;   // dropped: sender == receiver
  std::int64_t bad_field_count = 0;  // dropped: wrong number of fields
  std::int64_t empty_endpoint = 0;   // dropped: empty sender or receiver
  std::int64_t bad_timestamp = 0;    // dropped: unparseable date/time

  std::int64_t dropped() const {
    return self_transfers + bad_field_count + empty_endpoint + bad_timestamp;
  }
  std::string to_text() const;
};

// Streams a delimited file (header row required) into transactions, in file
// order. Malformed rows and self-transfers are skipped and counted in the
// report. Throws DataError on a missing file, a missing mapped column, or
// zero parseable rows.
std::vector<Transaction> load_transactions(const std::filesystem::path& path,
                                           const ColumnMapping& schema,
                                           LoadReport& report);

void write_load_report(const LoadReport& report, const std::filesystem::path& path);

}  // namespace txtopo
