#include "reqgen/text.hpp"

#include <cctype>

namespace reqgen {

namespace {
constexpr const char* kPunct = ".,;:()?!";

bool is_punct_char(char c) {
  for (const char* p = kPunct; *p; ++p)
    if (*p == c) return true;
  return false;
}
}  // namespace

std::string to_lower(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (unsigned char c : s) out.push_back(static_cast<char>(std::tolower(c)));
  return out;
}

bool is_punct_token(const std::string& tok) {
  return tok.size() == 1 && is_punct_char(tok[0]);
}

Tokens tokenize(const std::string& text) {
  Tokens out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) {
      out.push_back(cur);
      cur.clear();
    }
  };
  for (unsigned char uc : text) {
    char c = static_cast<char>(std::tolower(uc));
    if (std::isspace(uc)) {
      flush();
    } else if (is_punct_char(c)) {
      flush();
      out.emplace_back(1, c);
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

std::string detokenize(const Tokens& tokens) {
  std::string out;
  for (const auto& tok : tokens) {
    if (tok == "[SEP]") continue;
    if (!out.empty() && !is_punct_token(tok)) out.push_back(' ');
    out += tok;
  }
  if (!out.empty()) out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  return out;
}

std::string normalize_name(const std::string& s) {
  std::string out;
  bool pending_space = false;
  for (unsigned char c : s) {
    if (std::isspace(c)) {
      if (!out.empty()) pending_space = true;
    } else {
      if (pending_space) {
        out.push_back(' ');
        pending_space = false;
      }
      out.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  return out;
}

std::string phrase_text(const Phrase& phrase) {
  std::string out;
  for (const auto& tok : phrase) {
    if (!out.empty()) out.push_back(' ');
    out += tok;
  }
  return out;
}

}  // namespace reqgen
