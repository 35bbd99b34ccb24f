#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "vigil/errors.hpp"

namespace vigil {

// RFC-4180-ish CSV: comma-delimited, double-quote escaping, UTF-8, LF endings.

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

inline std::string csv_row(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(fields[i]);
  }
  out += '\n';
  return out;
}

// Parses one logical CSV record starting at *pos; advances *pos past it.
inline std::vector<std::string> csv_parse_record(const std::string& text, std::size_t* pos) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  std::size_t i = *pos;
  const std::size_t n = text.size();
  while (i < n) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < n && text[i + 1] == '"') {
          cur += '"';
          i += 2;
        } else {
          quoted = false;
          ++i;
        }
      } else {
        cur += c;
        ++i;
      }
    } else if (c == '"') {
      quoted = true;
      ++i;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
      ++i;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      break;
    } else {
      cur += c;
      ++i;
    }
  }
  fields.push_back(cur);
  *pos = i;
  return fields;
}

// Whole-document parse; skips completely empty lines.
inline std::vector<std::vector<std::string>> csv_parse(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto rec = csv_parse_record(text, &pos);
    if (rec.size() == 1 && rec[0].empty()) continue;
    rows.push_back(std::move(rec));
  }
  return rows;
}

}  // namespace vigil
