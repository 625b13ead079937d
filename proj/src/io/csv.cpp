#include "emcmc/io/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <system_error>
#include <vector>

#include "emcmc/error.hpp"

namespace emcmc {

namespace {

constexpr const char* kAbortMarker = "# aborted: ";

std::string trimmed(const std::string& s) {
  std::size_t begin = 0;
  std::size_t end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return s.substr(begin, end - begin);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string::npos) {
      fields.push_back(trimmed(line.substr(start)));
      break;
    }
    fields.push_back(trimmed(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return fields;
}

double parse_double(const std::string& field, const std::filesystem::path& path) {
  double value = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  // from_chars does not accept leading '+'.
  if (begin != end && *begin == '+') ++begin;
  const auto result = std::from_chars(begin, end, value);
  if (result.ec != std::errc() || result.ptr != end) {
    // Fall back for "inf"/"nan" spellings from_chars already accepts; anything
    // left over is a genuine parse failure.
    throw_config("csv: non-numeric field '" + field + "' in " + path.string());
  }
  return value;
}

int parse_int(const std::string& field, const std::filesystem::path& path,
              const std::string& what) {
  const double value = parse_double(field, path);
  if (!(std::floor(value) == value) || std::abs(value) > 2147483647.0)
    throw_config("csv: " + what + " '" + field + "' in " + path.string() +
                 " is not an integer");
  return static_cast<int>(value);
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  bool aborted = false;
  std::string abort_message;
};

RawCsv read_raw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw_config("csv: cannot open " + path.string());
  RawCsv raw;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    const std::string t = trimmed(line);
    if (t.empty()) continue;
    if (t[0] == '#') {
      if (t.rfind(kAbortMarker, 0) == 0) {
        raw.aborted = true;
        raw.abort_message = t.substr(std::string(kAbortMarker).size());
      }
      continue;
    }
    if (!have_header) {
      raw.header = split_fields(t);
      have_header = true;
      continue;
    }
    std::vector<std::string> fields = split_fields(t);
    if (fields.size() != raw.header.size())
      throw_config("csv: row with " + std::to_string(fields.size()) + " fields under a " +
                   std::to_string(raw.header.size()) + "-column header in " + path.string());
    raw.rows.push_back(std::move(fields));
  }
  if (!have_header) throw_config("csv: " + path.string() + " has no header row");
  return raw;
}

}  // namespace

std::string format_double(double value) {
  char buffer[48];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

int CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& values) {
  if (header.empty()) throw_config("write_csv: empty header");
  if (values.cols() != static_cast<Eigen::Index>(header.size()))
    throw_dimension("write_csv: header names one column per value column");
  std::ofstream out(path);
  if (!out) throw_config("write_csv: cannot open " + path.string() + " for writing");
  for (std::size_t i = 0; i < header.size(); ++i)
    out << (i ? "," : "") << header[i];
  out << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c)
      out << (c ? "," : "") << format_double(values(r, c));
    out << '\n';
  }
  if (!out) throw_config("write_csv: failed while writing " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  const RawCsv raw = read_raw(path);
  CsvTable table;
  table.header = raw.header;
  table.values.resize(static_cast<Eigen::Index>(raw.rows.size()),
                      static_cast<Eigen::Index>(raw.header.size()));
  for (std::size_t r = 0; r < raw.rows.size(); ++r)
    for (std::size_t c = 0; c < raw.header.size(); ++c)
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          parse_double(raw.rows[r][c], path);
  return table;
}

void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset) {
  if (dataset.times.empty()) throw_config("write_dataset_csv: dataset has no observations");
  if (dataset.y.cols() != static_cast<Eigen::Index>(dataset.times.size()))
    throw_dimension("write_dataset_csv: observation count does not match the time list");
  std::ofstream out(path);
  if (!out) throw_config("write_dataset_csv: cannot open " + path.string() + " for writing");
  out << "time";
  for (Eigen::Index d = 0; d < dataset.y.rows(); ++d) out << ",y_" << d;
  out << '\n';
  for (std::size_t j = 0; j < dataset.times.size(); ++j) {
    out << dataset.times[j];
    for (Eigen::Index d = 0; d < dataset.y.rows(); ++d)
      out << ',' << format_double(dataset.y(d, static_cast<Eigen::Index>(j)));
    out << '\n';
  }
  if (!out) throw_config("write_dataset_csv: failed while writing " + path.string());
}

Dataset read_dataset_csv(const std::filesystem::path& path) {
  const RawCsv raw = read_raw(path);
  if (raw.header.empty() || raw.header[0] != "time")
    throw_config("read_dataset_csv: first column of " + path.string() + " must be 'time'");
  if (raw.header.size() < 2)
    throw_config("read_dataset_csv: " + path.string() + " has no observation columns");
  if (raw.rows.empty()) throw_config("read_dataset_csv: " + path.string() + " has no rows");
  Dataset dataset;
  const Eigen::Index obs_dim = static_cast<Eigen::Index>(raw.header.size()) - 1;
  dataset.y.resize(obs_dim, static_cast<Eigen::Index>(raw.rows.size()));
  dataset.times.reserve(raw.rows.size());
  for (std::size_t j = 0; j < raw.rows.size(); ++j) {
    dataset.times.push_back(parse_int(raw.rows[j][0], path, "time"));
    for (Eigen::Index d = 0; d < obs_dim; ++d)
      dataset.y(d, static_cast<Eigen::Index>(j)) =
          parse_double(raw.rows[j][static_cast<std::size_t>(d) + 1], path);
  }
  return dataset;
}

TraceWriter::TraceWriter(const std::filesystem::path& path,
                         const std::vector<std::string>& param_names)
    : out_(path), path_(path) {
  if (!out_) throw_config("trace: cannot open " + path.string() + " for writing");
  out_ << "iteration";
  for (const std::string& name : param_names) out_ << ',' << name;
  out_ << ",log_like,accepted,early_stop_t\n";
  out_.flush();
}

void TraceWriter::append(int iteration, const ChainState& state, bool accepted,
                         int early_stop) {
  out_ << iteration;
  for (Eigen::Index j = 0; j < state.theta.size(); ++j)
    out_ << ',' << format_double(state.theta(j));
  out_ << ',' << format_double(state.log_like.value) << ',' << (accepted ? 1 : 0) << ','
       << early_stop << '\n';
  if (++rows_since_flush_ >= 128) {
    out_.flush();
    rows_since_flush_ = 0;
  }
  if (!out_) throw_config("trace: failed while writing " + path_.string());
}

void TraceWriter::fail(const std::string& message) {
  if (!out_.is_open()) return;
  std::string one_line = message;
  for (char& c : one_line)
    if (c == '\n' || c == '\r') c = ' ';
  out_ << kAbortMarker << one_line << '\n';
  out_.flush();
  out_.close();
}

void TraceWriter::close() {
  if (!out_.is_open()) return;
  out_.flush();
  out_.close();
}

ChainTrace read_trace_csv(const std::filesystem::path& path,
                          std::vector<std::string>* param_names, bool allow_partial) {
  const RawCsv raw = read_raw(path);
  if (raw.aborted && !allow_partial)
    throw_numerical("trace: " + path.string() + " is a partial trace from an aborted run (" +
                    raw.abort_message + ")");
  const std::size_t cols = raw.header.size();
  if (cols < 4 || raw.header.front() != "iteration" || raw.header[cols - 3] != "log_like" ||
      raw.header[cols - 2] != "accepted" || raw.header[cols - 1] != "early_stop_t")
    throw_config("trace: " + path.string() +
                 " does not look like a trace file (expected columns iteration, parameters..., "
                 "log_like, accepted, early_stop_t)");
  const std::size_t p = cols - 4;
  if (p == 0) throw_config("trace: " + path.string() + " has no parameter columns");

  ChainTrace trace;
  const Eigen::Index n = static_cast<Eigen::Index>(raw.rows.size());
  trace.samples.resize(n, static_cast<Eigen::Index>(p));
  trace.log_like.resize(n);
  trace.accepted.resize(raw.rows.size());
  trace.early_stop.resize(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    for (std::size_t j = 0; j < p; ++j)
      trace.samples(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(j)) =
          parse_double(raw.rows[r][j + 1], path);
    trace.log_like(static_cast<Eigen::Index>(r)) = parse_double(raw.rows[r][cols - 3], path);
    const int accepted = parse_int(raw.rows[r][cols - 2], path, "accepted flag");
    if (accepted != 0 && accepted != 1)
      throw_config("trace: accepted flag must be 0 or 1 in " + path.string());
    trace.accepted[r] = static_cast<std::uint8_t>(accepted);
    trace.early_stop[r] = parse_int(raw.rows[r][cols - 1], path, "early_stop_t");
  }
  if (param_names) param_names->assign(raw.header.begin() + 1, raw.header.end() - 3);
  return trace;
}

}  // namespace emcmc
