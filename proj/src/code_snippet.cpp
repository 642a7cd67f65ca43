#include "hpcplp/code_snippet.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>

#include "hpcplp/errors.hpp"

namespace hpcplp {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace

std::string_view to_string(Language lang) {
  switch (lang) {
    case Language::C: return "c";
    case Language::Cpp: return "cpp";
    case Language::Python: return "python";
    case Language::Unknown: return "unknown";
  }
  return "unknown";
}

Language parse_language(std::string_view name) {
  const std::string n = lower(name);
  if (n == "c") return Language::C;
  if (n == "cpp" || n == "c++" || n == "cxx") return Language::Cpp;
  if (n == "python" || n == "py") return Language::Python;
  return Language::Unknown;
}

Language language_from_path(std::string_view path) {
  const auto dot = path.rfind('.');
  if (dot == std::string_view::npos) return Language::Unknown;
  const std::string ext = lower(path.substr(dot + 1));
  if (ext == "c" || ext == "h") return Language::C;
  if (ext == "cc" || ext == "cpp" || ext == "cxx" || ext == "hpp" || ext == "hh" ||
      ext == "hxx" || ext == "c++")
    return Language::Cpp;
  if (ext == "py") return Language::Python;
  return Language::Unknown;
}

bool is_valid_utf8(std::string_view bytes) noexcept {
  std::size_t i = 0;
  const std::size_t n = bytes.size();
  while (i < n) {
    const auto c = static_cast<unsigned char>(bytes[i]);
    std::size_t len = 0;
    std::uint32_t cp = 0;
    if (c < 0x80) {
      ++i;
      continue;
    } else if ((c & 0xE0) == 0xC0) {
      len = 2;
      cp = c & 0x1F;
    } else if ((c & 0xF0) == 0xE0) {
      len = 3;
      cp = c & 0x0F;
    } else if ((c & 0xF8) == 0xF0) {
      len = 4;
      cp = c & 0x07;
    } else {
      return false;
    }
    if (i + len > n) return false;
    for (std::size_t k = 1; k < len; ++k) {
      const auto cc = static_cast<unsigned char>(bytes[i + k]);
      if ((cc & 0xC0) != 0x80) return false;
      cp = (cp << 6) | (cc & 0x3F);
    }
    // overlong forms, surrogates, out of range
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) || (len == 4 && cp < 0x10000) ||
        cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF))
      return false;
    i += len;
  }
  return true;
}

CodeSnippet::CodeSnippet(std::string source, Language language,
                         std::optional<std::string> id)
    : source_(std::move(source)), language_(language), id_(std::move(id)) {
  if (!is_valid_utf8(source_)) {
    throw Error(ErrorCode::InvalidUtf8, "snippet source is not valid UTF-8");
  }
}

}  // namespace hpcplp
