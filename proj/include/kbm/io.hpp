#pragma once

#include "kbm/core.hpp"
#include "kbm/geometry.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

// Record-oriented output: NDJSON (one object per line, streamable) as the
// primary format, CSV for flat path dumps. The first record is a header
// carrying the schema version and the fully resolved run configuration, so
// any output file can be reproduced from itself.

namespace kbm {

inline constexpr const char* kSchemaVersion = "kbm-ndjson/1";
inline constexpr const char* kArtifactVersion = "0.1.0";

nlohmann::json vec_to_json(const Vec& v);
nlohmann::json mat_to_json(const Mat& m);
Vec vec_from_json(const nlohmann::json& j);

enum class OutputFormat { kNdjson, kCsv };
OutputFormat parse_format(const std::string& name);

// Serialized single-writer record sink; records within a file are ordered by
// (trajectory id, time) by construction of the callers.
class RecordWriter {
 public:
  RecordWriter(std::ostream& out, OutputFormat format, const nlohmann::json& resolved_config);

  void path_point(long traj, double t, const Vec& x, const Vec* v = nullptr);
  void frame_point(long traj, double t, const Frame& z);
  void lift_record(long traj, double sigma, const RoughIncrement& total, const Mat& levy);
  void report(const std::string& name, const nlohmann::json& body);

 private:
  void emit(const nlohmann::json& record);
  std::ostream& out_;
  OutputFormat format_;
  bool csv_columns_written_ = false;
};

struct ParsedOutput {
  nlohmann::json header;
  std::vector<nlohmann::json> records;  // excluding the header
};

// Reparses an emitted file (either format) into the records that produced it.
ParsedOutput parse_output(std::istream& in, OutputFormat format);

}  // namespace kbm
