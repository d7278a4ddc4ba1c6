#include <algorithm>
#include <iomanip>
#include <json.hpp>
#include <sstream>

#include "vcas/cli.hpp"
#include "vcas/error.hpp"

namespace vcas::cli {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string number(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

bool is_metrics_file(const fs::path& p) {
  const std::string name = p.filename().string();
  return p.extension() == ".json" && name.rfind("eval_", 0) == 0;
}

void task_rows(const json& j, std::vector<std::vector<std::string>>& rows) {
  const std::string task = j.at("task").get<std::string>();
  const std::string band = j.at("band").get<std::string>();
  const std::string band_hz = band_label(j.at("band_hz").at(0).get<double>(), j.at("band_hz").at(1).get<double>());
  const std::string k = std::to_string(j.at("n_components").get<std::size_t>());
  for (const auto& r : j.at("rows")) {
    const std::string n = std::to_string(r.at("n").get<std::size_t>());
    for (const char* metric : {"accuracy", "rmse"}) {
      if (r.contains(metric)) {
        rows.push_back({"task", task, band, band_hz, k, r.at("condition").get<std::string>(), n, metric,
                        number(r.at(metric).get<double>())});
      }
    }
  }
}

void policy_rows(const json& j, std::vector<std::vector<std::string>>& rows) {
  const std::string name = j.at("policy").get<std::string>();
  for (const auto& r : j.at("rows")) {
    const std::string n = std::to_string(r.at("n_episodes").get<std::size_t>());
    const std::string regime = r.at("regime").get<std::string>();
    for (const char* metric : {"success_rate", "mean_length"}) {
      rows.push_back({"policy", name, "", "", "", regime, n, metric, number(r.at(metric).get<double>())});
    }
  }
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + '"';
}

}  // namespace

ReportTable build_report(const std::vector<fs::path>& inputs) {
  if (inputs.empty()) throw ParameterError("report needs at least one metrics file or directory");
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      for (const auto& e : fs::recursive_directory_iterator(in)) {
        if (e.is_regular_file() && is_metrics_file(e.path())) files.push_back(e.path());
      }
    } else if (fs::is_regular_file(in)) {
      files.push_back(in);
    } else {
      throw DataError("report input " + in.string() + " does not exist");
    }
  }
  std::sort(files.begin(), files.end());
  files.erase(std::unique(files.begin(), files.end()), files.end());
  if (files.empty()) throw DataError("no eval_*.json metrics found in the report inputs");

  ReportTable t;
  t.columns = {"kind", "task", "band", "band_hz", "n_components", "condition", "n", "metric", "value"};
  for (const auto& f : files) {
    try {
      const json j = json::parse(io::read_file(f));
      if (j.contains("policy")) {
        policy_rows(j, t.rows);
      } else {
        task_rows(j, t.rows);
      }
    } catch (const json::exception& e) {
      throw DataError("metrics file " + f.string() + " is malformed: " + e.what());
    }
  }
  std::sort(t.rows.begin(), t.rows.end());
  return t;
}

void write_report(const ReportTable& table, const fs::path& out_dir) {
  std::ostringstream csv;
  std::ostringstream md;
  for (std::size_t c = 0; c < table.columns.size(); ++c) {
    csv << (c ? "," : "") << table.columns[c];
    md << "| " << table.columns[c] << ' ';
  }
  csv << '\n';
  md << "|\n";
  for (std::size_t c = 0; c < table.columns.size(); ++c) md << "|---";
  md << "|\n";
  for (const auto& row : table.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      csv << (c ? "," : "") << csv_cell(row[c]);
      md << "| " << row[c] << ' ';
    }
    csv << '\n';
    md << "|\n";
  }
  io::write_file(out_dir / "summary.csv", csv.str());
  io::write_file(out_dir / "summary.md", "# Summary\n\n" + md.str());
}

}  // namespace vcas::cli
