#include "txtopo/ingest.hpp"

#include <fstream>
#include <sstream>

#include "txtopo/errors.hpp"
#include "txtopo/timeutil.hpp"

namespace txtopo {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) fields.push_back(field);
  if (!line.empty() && line.back() == delim) fields.emplace_back();
  return fields;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

int find_column(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace

std::string LoadReport::to_text() const {
  std::ostringstream out;
  out << "rows_read=" << rows_read << "\n"
      << "loaded=" << loaded << "\n"
      << "dropped=" << dropped() << "\n"
      << "dropped.self_transfers=" << self_transfers << "\n"
      << "dropped.bad_field_count=" << bad_field_count << "\n"
      << "dropped.empty_endpoint=" << empty_endpoint << "\n"
      << "dropped.bad_timestamp=" << bad_timestamp << "\n";
  return out.str();
}

std::vector<Transaction> load_transactions(const std::filesystem::path& path,
                                           const ColumnMapping& schema,
                                           LoadReport& report) {
  std::ifstream file(path);
  if (!file) throw DataError("cannot open transaction file: " + path.string());

  std::string line;
  if (!std::getline(file, line)) {
    throw DataError("transaction file has no header row: " + path.string());
  }
  const auto header = split_line(strip_cr(line), schema.delimiter);

  const int sender_col = find_column(header, schema.sender);
  const int receiver_col = find_column(header, schema.receiver);
  if (sender_col < 0) throw DataError("missing mapped column: " + schema.sender);
  if (receiver_col < 0) throw DataError("missing mapped column: " + schema.receiver);

  const bool combined = !schema.timestamp.empty();
  int ts_col = -1, date_col = -1, time_col = -1;
  if (combined) {
    ts_col = find_column(header, schema.timestamp);
    if (ts_col < 0) throw DataError("missing mapped column: " + schema.timestamp);
  } else {
    date_col = find_column(header, schema.date);
    if (date_col < 0) throw DataError("missing mapped column: " + schema.date);
    if (!schema.time.empty()) time_col = find_column(header, schema.time);
  }

  report = LoadReport{};
  std::vector<Transaction> txs;
  std::size_t row = 0;
  while (std::getline(file, line)) {
    ++row;
    line = strip_cr(line);
    if (line.empty()) continue;
    ++report.rows_read;
    const auto fields = split_line(line, schema.delimiter);
    if (fields.size() != header.size()) {
      ++report.bad_field_count;
      continue;
    }
    const std::string& sender = fields[static_cast<std::size_t>(sender_col)];
    const std::string& receiver = fields[static_cast<std::size_t>(receiver_col)];
    if (sender.empty() || receiver.empty()) {
      ++report.empty_endpoint;
      continue;
    }
    std::optional<std::int64_t> ts;
    if (combined) {
      ts = parse_timestamp(fields[static_cast<std::size_t>(ts_col)]);
    } else {
      ts = parse_date(fields[static_cast<std::size_t>(date_col)]);
      if (ts && time_col >= 0) {
        // date-only rows keep the midnight default
        const auto& tf = fields[static_cast<std::size_t>(time_col)];
        if (!tf.empty()) {
          const auto tod = parse_time_of_day(tf);
          if (!tod) {
            ts.reset();
          } else {
            *ts += *tod;
          }
        }
      }
    }
    if (!ts) {
      ++report.bad_timestamp;
      continue;
    }
    if (sender == receiver) {
      ++report.self_transfers;
      continue;
    }
    txs.push_back(Transaction{sender, receiver, *ts, row});
    ++report.loaded;
  }
  if (txs.empty()) {
    throw DataError("zero parseable rows in " + path.string());
  }
  return txs;
}

void write_load_report(const LoadReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write load report: " + path.string());
  out << report.to_text();
}

}  // namespace txtopo
