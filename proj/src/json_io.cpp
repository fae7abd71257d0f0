#include "json_io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace maan::io {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open '" + path + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) fail(ErrorCode::Io, "read failed on '" + path + "'");
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot open '" + path + "' for writing");
  out << content;
  out.flush();
  if (!out) fail(ErrorCode::Io, "write failed on '" + path + "'");
}

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(
                 std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

}  // namespace

nlohmann::json parse_document(const std::string& text, const std::string& path) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    fail(ErrorCode::Parse, path + ":" + std::to_string(line_of(text, e.byte ? e.byte - 1 : 0)) +
                               ": " + e.what());
  }
}

std::vector<nlohmann::json> parse_lines(const std::string& text, const std::string& path) {
  std::vector<nlohmann::json> out;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      fail(ErrorCode::Parse, path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

nlohmann::json load_document(const std::string& path, const std::string& format) {
  auto doc = parse_document(read_file(path), path);
  if (!doc.is_object() || !doc.contains("format") || doc["format"] != format)
    fail(ErrorCode::Parse, path + ": expected a '" + format + "' document");
  return doc;
}

}  // namespace maan::io
