#pragma once

// Shared file helpers for the JSON documents the library reads and writes.

#include <string>
#include <vector>

#include <json.hpp>

#include "maan/error.hpp"

namespace maan::io {

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Syntax errors become Parse errors carrying the file name and line number.
nlohmann::json parse_document(const std::string& text, const std::string& path);

// One JSON value per non-empty line.
std::vector<nlohmann::json> parse_lines(const std::string& text, const std::string& path);

// Reads a file and checks its "format" tag.
nlohmann::json load_document(const std::string& path, const std::string& format);

// Runs fn, turning nlohmann type/key errors into Parse errors that name the
// file and the record being decoded.
template <typename Fn>
auto decode(const std::string& path, const std::string& where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, path + ": " + where + ": " + e.what());
  }
}

}  // namespace maan::io
