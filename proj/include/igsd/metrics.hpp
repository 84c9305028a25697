#pragma once

#include <fstream>
#include <string>
#include <vector>

#include "igsd/types.hpp"

namespace igsd {

/// One structured record per training epoch. Accuracy fields use -1 when the
/// quantity does not apply to the run.
struct EpochRecord {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_ce = 0.0;
  double loss_unsup = 0.0;
  double loss_supcon = 0.0;
  int pseudo_count = 0;
  double pseudo_accuracy = -1.0;
  double eval_accuracy = -1.0;
  double wall_seconds = 0.0;

  std::string to_json() const;
  static EpochRecord from_json(const std::string& line);
};

/// Equality of every deterministic field (wall_seconds excluded).
bool trace_equal(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b);

/// Line-delimited JSON metrics stream; one record appended (and flushed) per
/// epoch. The file is truncated when the writer opens.
class MetricsWriter {
 public:
  explicit MetricsWriter(const std::string& path);
  void append(const EpochRecord& record);

 private:
  std::ofstream out_;
};

std::vector<EpochRecord> read_metrics(const std::string& path);

}  // namespace igsd
