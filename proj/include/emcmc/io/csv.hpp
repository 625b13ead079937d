#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "emcmc/mcmc.hpp"
#include "emcmc/state_space.hpp"

namespace emcmc {

// Shortest decimal string that round-trips the double exactly (up to 17
// significant digits). All numeric CSV output goes through this.
std::string format_double(double value);

// A parsed numeric CSV: one header row, then a dense numeric table. Lines
// starting with '#' are ignored wherever they appear.
struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;

  // Index of the named column, or -1 when absent.
  int column(const std::string& name) const;
};

void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header,
               const Eigen::Ref<const Eigen::MatrixXd>& values);
CsvTable read_csv(const std::filesystem::path& path);

// Dataset files carry one row per observation: a "time" column of step
// indices followed by one column per observation coordinate.
void write_dataset_csv(const std::filesystem::path& path, const Dataset& dataset);
Dataset read_dataset_csv(const std::filesystem::path& path);

// Streams chain iterations to a trace file (columns: iteration, the
// parameters, log_like, accepted, early_stop_t), flushing as it goes so an
// aborted run leaves a readable partial trace. `fail` appends a failure
// marker comment recording why the run stopped early.
class TraceWriter {
 public:
  TraceWriter(const std::filesystem::path& path, const std::vector<std::string>& param_names);

  void append(int iteration, const ChainState& state, bool accepted, int early_stop);
  void fail(const std::string& message);
  void close();

 private:
  std::ofstream out_;
  std::filesystem::path path_;
  int rows_since_flush_ = 0;
};

// Reads a trace file back. The parameter columns are whatever the header
// carries between "iteration" and "log_like"; their names are returned
// through param_names when requested. A trailing failure marker is surfaced
// as a numerical error unless allow_partial is set.
ChainTrace read_trace_csv(const std::filesystem::path& path,
                          std::vector<std::string>* param_names = nullptr,
                          bool allow_partial = false);

}  // namespace emcmc
