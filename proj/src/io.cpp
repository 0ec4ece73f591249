#include "kbm/io.hpp"

#include "kbm/roughpath.hpp"

#include <nlohmann/json.hpp>

#include <cinttypes>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace kbm {

using nlohmann::json;

nlohmann::json vec_to_json(const Vec& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

nlohmann::json mat_to_json(const Mat& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json r = json::array();
    for (int j = 0; j < m.cols(); ++j) r.push_back(m(i, j));
    rows.push_back(r);
  }
  return rows;
}

Vec vec_from_json(const nlohmann::json& j) {
  Vec v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

OutputFormat parse_format(const std::string& name) {
  if (name == "ndjson") return OutputFormat::kNdjson;
  if (name == "csv") return OutputFormat::kCsv;
  throw ConfigError("unknown output format '" + name + "' (ndjson or csv)");
}

namespace {

// Shortest round-trip decimal for CSV cells.
std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  double back = 0.0;
  std::sscanf(buf, "%lg", &back);
  if (back == x) {
    for (int prec = 1; prec < 17; ++prec) {
      char probe[32];
      std::snprintf(probe, sizeof(probe), "%.*g", prec, x);
      std::sscanf(probe, "%lg", &back);
      if (back == x) return probe;
    }
  }
  return buf;
}

}  // namespace

RecordWriter::RecordWriter(std::ostream& out, OutputFormat format, const json& resolved_config)
    : out_(out), format_(format) {
  json header{{"kind", "header"},
              {"schema", kSchemaVersion},
              {"version", kArtifactVersion},
              {"config", resolved_config}};
  if (format_ == OutputFormat::kCsv) {
    out_ << "# " << header.dump() << "\n";
  } else {
    out_ << header.dump() << "\n";
  }
}

void RecordWriter::emit(const json& record) {
  if (format_ == OutputFormat::kCsv)
    throw ConfigError("csv output supports flat path dumps only; use ndjson");
  out_ << record.dump() << "\n";
}

void RecordWriter::path_point(long traj, double t, const Vec& x, const Vec* v) {
  if (format_ == OutputFormat::kCsv) {
    if (!csv_columns_written_) {
      out_ << "traj,t";
      for (int i = 0; i < x.size(); ++i) out_ << ",x" << i + 1;
      if (v)
        for (int i = 0; i < v->size(); ++i) out_ << ",v" << i + 1;
      out_ << "\n";
      csv_columns_written_ = true;
    }
    out_ << traj << "," << format_double(t);
    for (int i = 0; i < x.size(); ++i) out_ << "," << format_double(x[i]);
    if (v)
      for (int i = 0; i < v->size(); ++i) out_ << "," << format_double((*v)[i]);
    out_ << "\n";
    return;
  }
  json rec{{"kind", "path-point"}, {"traj", traj}, {"t", t}, {"x", vec_to_json(x)}};
  if (v) rec["v"] = vec_to_json(*v);
  emit(rec);
}

void RecordWriter::frame_point(long traj, double t, const Frame& z) {
  emit(json{{"kind", "frame-point"},
            {"traj", traj},
            {"t", t},
            {"q", vec_to_json(z.q)},
            {"e", mat_to_json(z.e)}});
}

void RecordWriter::lift_record(long traj, double sigma, const RoughIncrement& total,
                               const Mat& levy) {
  emit(json{{"kind", "lift"},
            {"traj", traj},
            {"sigma", sigma},
            {"delta", vec_to_json(total.delta)},
            {"second", mat_to_json(total.second)},
            {"levy", mat_to_json(levy)}});
}

void RecordWriter::report(const std::string& name, const json& body) {
  emit(json{{"kind", "report"}, {"name", name}, {"payload", body}});
}

ParsedOutput parse_output(std::istream& in, OutputFormat format) {
  ParsedOutput out;
  std::string line;
  if (format == OutputFormat::kNdjson) {
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      json rec = json::parse(line);
      if (rec.value("kind", "") == "header")
        out.header = rec;
      else
        out.records.push_back(std::move(rec));
    }
    return out;
  }
  std::vector<std::string> columns;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      out.header = json::parse(line.substr(1));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (columns.empty()) {
      columns = cells;
      continue;
    }
    json rec{{"kind", "path-point"}};
    json x = json::array(), v = json::array();
    for (std::size_t c = 0; c < columns.size() && c < cells.size(); ++c) {
      if (columns[c] == "traj")
        rec["traj"] = std::stol(cells[c]);
      else if (columns[c] == "t")
        rec["t"] = std::stod(cells[c]);
      else if (columns[c][0] == 'x')
        x.push_back(std::stod(cells[c]));
      else if (columns[c][0] == 'v')
        v.push_back(std::stod(cells[c]));
    }
    rec["x"] = x;
    if (!v.empty()) rec["v"] = v;
    out.records.push_back(std::move(rec));
  }
  return out;
}

}  // namespace kbm
