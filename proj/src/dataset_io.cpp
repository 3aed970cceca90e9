#include "magcal/dataset_io.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>

namespace magcal {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size() || !std::isfinite(value)) {
    throw InputError("line " + std::to_string(line_no) + ": '" + std::string(field) + "' is not a finite number");
  }
  return value;
}

}  // namespace

void write_dataset_csv(std::ostream& out, const std::vector<Vec3>& samples) {
  out << "yx,yy,yz\n";
  std::array<char, 96> buf{};
  for (const auto& y : samples) {
    std::snprintf(buf.data(), buf.size(), "%.17g,%.17g,%.17g\n", y.x(), y.y(), y.z());
    out << buf.data();
  }
}

void write_dataset_csv(const std::filesystem::path& path, const std::vector<Vec3>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot open '" + path.string() + "' for writing");
  write_dataset_csv(out, samples);
}

CsvReadResult read_dataset_csv(std::istream& in) {
  CsvReadResult result;
  std::string line;
  std::size_t line_no = 0;

  std::optional<std::array<std::size_t, 3>> cols;
  std::size_t width = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (!cols) {
      static constexpr std::array<std::string_view, 3> kNames = {"yx", "yy", "yz"};
      std::array<std::size_t, 3> found{};
      for (std::size_t c = 0; c < 3; ++c) {
        std::size_t i = 0;
        while (i < fields.size() && fields[i] != kNames[c]) ++i;
        if (i == fields.size()) {
          throw InputError("CSV header lacks column '" + std::string(kNames[c]) + "'");
        }
        found[c] = i;
      }
      cols = found;
      width = fields.size();
      if (width > 3) {
        result.warnings.push_back("ignoring " + std::to_string(width - 3) + " extra CSV column(s)");
      }
      continue;
    }
    if (fields.size() < width) {
      throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(width) + " fields");
    }
    result.data.samples.emplace_back(parse_double(fields[(*cols)[0]], line_no),
                                     parse_double(fields[(*cols)[1]], line_no),
                                     parse_double(fields[(*cols)[2]], line_no));
  }
  if (!cols) {
    throw InputError("CSV input is empty");
  }
  return result;
}

CsvReadResult read_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  return read_dataset_csv(in);
}

std::string file_digest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char c;
  while (in.get(c)) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::array<char, 32> buf{};
  std::snprintf(buf.data(), buf.size(), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf.data();
}

}  // namespace magcal
