#pragma once

#include <cctype>
#include <map>
#include <string>

namespace vigil {

// Replace every "{key}" occurrence with its mapped value. Unknown braces are
// left untouched so prompt text may legitimately contain literal braces.
inline std::string render_template(const std::string& tpl,
                                   const std::map<std::string, std::string>& vars) {
  std::string out;
  out.reserve(tpl.size());
  std::size_t i = 0;
  while (i < tpl.size()) {
    if (tpl[i] == '{') {
      std::size_t close = tpl.find('}', i + 1);
      if (close != std::string::npos) {
        const std::string key = tpl.substr(i + 1, close - i - 1);
        auto it = vars.find(key);
        if (it != vars.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out += tpl[i++];
  }
  return out;
}

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  if (from.empty()) return s;
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
  return s;
}

inline std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

}  // namespace vigil
