#pragma once

#include <optional>
#include <string>
#include <string_view>

namespace hpcplp {

enum class Language { C, Cpp, Python, Unknown };

std::string_view to_string(Language lang);

/// Accepts "c", "cpp"/"c++"/"cxx", "python"/"py", "unknown" (case-insensitive).
/// Anything else yields Unknown.
Language parse_language(std::string_view name);

/// Guess from a file extension (".c", ".h" -> C; ".cc", ".cpp", ".hpp", ...
/// -> Cpp; ".py" -> Python).
Language language_from_path(std::string_view path);

bool is_valid_utf8(std::string_view bytes) noexcept;

/// Source text plus its language. The unit every pipeline consumes.
class CodeSnippet {
 public:
  /// Throws Error(InvalidUtf8) when `source` is not valid UTF-8.
  CodeSnippet(std::string source, Language language,
              std::optional<std::string> id = std::nullopt);

  const std::string& source() const noexcept { return source_; }
  Language language() const noexcept { return language_; }
  const std::optional<std::string>& id() const noexcept { return id_; }

 private:
  std::string source_;
  Language language_;
  std::optional<std::string> id_;
};

}  // namespace hpcplp
