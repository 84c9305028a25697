#include "igsd/metrics.hpp"

#include <json.hpp>

namespace igsd {

using nlohmann::json;

std::string EpochRecord::to_json() const {
  json j;
  j["epoch"] = epoch;
  j["loss_total"] = loss_total;
  j["loss_ce"] = loss_ce;
  j["loss_unsup"] = loss_unsup;
  j["loss_supcon"] = loss_supcon;
  j["pseudo_count"] = pseudo_count;
  j["pseudo_accuracy"] = pseudo_accuracy;
  j["eval_accuracy"] = eval_accuracy;
  j["wall_seconds"] = wall_seconds;
  return j.dump();
}

EpochRecord EpochRecord::from_json(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(std::string("metrics record is not valid JSON: ") + e.what());
  }
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.loss_total = j.at("loss_total").get<double>();
  r.loss_ce = j.at("loss_ce").get<double>();
  r.loss_unsup = j.at("loss_unsup").get<double>();
  r.loss_supcon = j.at("loss_supcon").get<double>();
  r.pseudo_count = j.at("pseudo_count").get<int>();
  r.pseudo_accuracy = j.at("pseudo_accuracy").get<double>();
  r.eval_accuracy = j.at("eval_accuracy").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  return r;
}

bool trace_equal(const std::vector<EpochRecord>& a, const std::vector<EpochRecord>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const EpochRecord& x = a[i];
    const EpochRecord& y = b[i];
    if (x.epoch != y.epoch || x.loss_total != y.loss_total || x.loss_ce != y.loss_ce ||
        x.loss_unsup != y.loss_unsup || x.loss_supcon != y.loss_supcon ||
        x.pseudo_count != y.pseudo_count || x.pseudo_accuracy != y.pseudo_accuracy ||
        x.eval_accuracy != y.eval_accuracy)
      return false;
  }
  return true;
}

MetricsWriter::MetricsWriter(const std::string& path) : out_(path, std::ios::trunc) {
  if (!out_) throw IOError("cannot open metrics log for writing: " + path);
}

void MetricsWriter::append(const EpochRecord& record) {
  out_ << record.to_json() << "\n";
  out_.flush();
}

std::vector<EpochRecord> read_metrics(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IOError("cannot open metrics log: " + path);
  std::vector<EpochRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    records.push_back(EpochRecord::from_json(line));
  }
  return records;
}

}  // namespace igsd
