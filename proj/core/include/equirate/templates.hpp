#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace equirate {

// Plain-text prompt templates with `{{name}}` placeholders.
class TemplateSet {
 public:
  // Built-in templates.
  static TemplateSet defaults();
  // Defaults, with any `<name>.txt` file found in `dir` replacing the
  // template of that name. Unknown file names are rejected.
  static TemplateSet with_overrides(const std::filesystem::path& dir);

  const std::string& get(std::string_view name) const;
  std::string render(std::string_view name, const std::map<std::string, std::string, std::less<>>& vars) const;

  // Writes every template to `dir` as `<name>.txt` (starting point for overrides).
  void write_all(const std::filesystem::path& dir) const;

  const std::map<std::string, std::string, std::less<>>& all() const { return templates_; }

 private:
  std::map<std::string, std::string, std::less<>> templates_;
};

// Substitutes `{{name}}`; a placeholder without a value is Error(kTemplate).
std::string render_template(std::string_view text, const std::map<std::string, std::string, std::less<>>& vars);

}  // namespace equirate
