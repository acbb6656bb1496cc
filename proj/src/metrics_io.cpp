#include "mczsl/metrics_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace mczsl {
inline namespace MCZSL_PRECISION_NS {

namespace {

[[noreturn]] void corrupt(const std::string& what) {
  throw DataError(DataErrorKind::invariant_violation, "metrics: " + what);
}

std::string full(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string two(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

double parse_double(std::string_view s) {
  std::string tmp(s);
  char* end = nullptr;
  const double v = std::strtod(tmp.c_str(), &end);
  if (tmp.empty() || end != tmp.c_str() + tmp.size()) corrupt("bad number '" + tmp + "'");
  return v;
}

}  // namespace

std::string metrics_to_json(const MetricsRecord& record) {
  nlohmann::ordered_json j;
  j["schema"] = kMetricsSchema;
  j["protocol"] = record.protocol;
  j["dataset"] = record.dataset;
  j["tasks"] = nlohmann::ordered_json::array();
  for (const auto& t : record.tasks) {
    nlohmann::ordered_json row;
    row["task"] = t.task + 1;
    row["seen_acc"] = t.seen_acc;
    row["unseen_acc"] = t.unseen_acc;
    row["harmonic"] = t.harmonic;
    j["tasks"].push_back(std::move(row));
  }
  j["mSA"] = record.mean_seen;
  j["mUA"] = record.mean_unseen;
  j["mH"] = record.mean_harmonic;
  return j.dump(2) + "\n";
}

MetricsRecord metrics_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("unparsable JSON: ") + e.what());
  }
  try {
    if (j.at("schema").get<std::string>() != kMetricsSchema) {
      corrupt("unsupported schema '" + j.at("schema").get<std::string>() + "'");
    }
    MetricsRecord r;
    r.protocol = j.at("protocol").get<std::string>();
    r.dataset = j.at("dataset").get<std::string>();
    for (const auto& row : j.at("tasks")) {
      const auto task = row.at("task").get<std::int64_t>();
      if (task < 1) corrupt("task numbers start at 1");
      r.tasks.push_back({static_cast<Index>(task - 1), row.at("seen_acc").get<double>(),
                         row.at("unseen_acc").get<double>(), row.at("harmonic").get<double>()});
    }
    r.mean_seen = j.at("mSA").get<double>();
    r.mean_unseen = j.at("mUA").get<double>();
    r.mean_harmonic = j.at("mH").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    corrupt(std::string("missing or mistyped field: ") + e.what());
  }
}

void write_metrics_json(const MetricsRecord& record, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError(DataErrorKind::io, "cannot open '" + path.string() + "' for writing");
  out << metrics_to_json(record);
  if (!out) throw DataError(DataErrorKind::io, "write failed for '" + path.string() + "'");
}

MetricsRecord read_metrics_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError(DataErrorKind::io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return metrics_from_json(ss.str());
}

std::string metrics_to_csv(const MetricsRecord& record) {
  std::string out(kMetricsCsvHeader);
  out += "\n";
  for (const auto& t : record.tasks) {
    out += std::to_string(t.task + 1) + "," + full(t.seen_acc) + "," + full(t.unseen_acc) + "," +
           full(t.harmonic) + "\n";
  }
  return out;
}

MetricsRecord metrics_from_csv(std::string_view text) {
  MetricsRecord r;
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != kMetricsCsvHeader) corrupt("missing CSV header");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string_view> cells;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      cells.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (cells.size() != 4) corrupt("expected 4 columns in '" + line + "'");
    std::int64_t task = 0;
    const auto [p, ec] = std::from_chars(cells[0].data(), cells[0].data() + cells[0].size(), task);
    if (ec != std::errc() || p != cells[0].data() + cells[0].size() || task < 1) {
      corrupt("bad task number in '" + line + "'");
    }
    r.tasks.push_back({static_cast<Index>(task - 1), parse_double(cells[1]),
                       parse_double(cells[2]), parse_double(cells[3])});
  }
  summarize(r);
  return r;
}

std::string format_metrics(const MetricsRecord& record) {
  std::ostringstream os;
  os << "protocol " << record.protocol << "  dataset " << record.dataset << "\n";
  os << "task      SA      UA       H\n";
  for (const auto& t : record.tasks) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%4zu %7s %7s %7s\n", static_cast<std::size_t>(t.task + 1),
                  two(t.seen_acc).c_str(), two(t.unseen_acc).c_str(), two(t.harmonic).c_str());
    os << buf;
  }
  os << "mSA " << two(record.mean_seen) << "  mUA " << two(record.mean_unseen) << "  mH "
     << two(record.mean_harmonic) << "\n";
  return os.str();
}

}  // namespace MCZSL_PRECISION_NS
}  // namespace mczsl
