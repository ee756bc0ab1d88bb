#include "ftbrain/manifest.hpp"

#include <cstdio>
#include <fstream>

#include "ftbrain/error.hpp"

namespace ftbrain {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(std::move(cur));
  return out;
}

namespace {

constexpr const char* kManifestHeader = "subject_id,label,slice_index,entropy_bits,path";
constexpr const char* kSubjectHeader = "subject_id,label,path";

std::ifstream open_csv(const std::filesystem::path& path, const char* header) {
  std::ifstream in(path);
  if (!in) throw Error("dataio", "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header) {
    throw FormatError("dataio", path.string() + ": expected header '" + header + "'");
  }
  return in;
}

}  // namespace

void write_manifest(const std::vector<ManifestRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("dataio", "cannot open " + path.string() + " for writing");
  out << kManifestHeader << '\n';
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.entropy_bits);
    out << r.subject_id << ',' << label_name(r.label) << ',' << r.slice_index << ',' << buf << ','
        << r.path << '\n';
  }
}

std::vector<ManifestRow> read_manifest(const std::filesystem::path& path) {
  std::ifstream in = open_csv(path, kManifestHeader);
  std::vector<ManifestRow> rows;
  std::string line;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 5) {
      throw FormatError("dataio", path.string() + ":" + std::to_string(lineno) + ": expected 5 fields");
    }
    try {
      rows.push_back(ManifestRow{f[0], parse_label(f[1]), std::stoul(f[2]), std::stod(f[3]), f[4]});
    } catch (const std::logic_error&) {
      throw FormatError("dataio", path.string() + ":" + std::to_string(lineno) + ": bad numeric field");
    }
  }
  return rows;
}

void write_subject_index(const std::vector<SubjectRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("dataio", "cannot open " + path.string() + " for writing");
  out << kSubjectHeader << '\n';
  for (const auto& r : rows) out << r.subject_id << ',' << label_name(r.label) << ',' << r.path << '\n';
}

std::vector<SubjectRow> read_subject_index(const std::filesystem::path& path) {
  std::ifstream in = open_csv(path, kSubjectHeader);
  std::vector<SubjectRow> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto f = split_csv_line(line);
    if (f.size() != 3) throw FormatError("dataio", path.string() + ": expected 3 fields per row");
    rows.push_back(SubjectRow{f[0], parse_label(f[1]), f[2]});
  }
  return rows;
}

}  // namespace ftbrain
