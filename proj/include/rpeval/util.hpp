#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

namespace rpeval {

std::string trim(std::string_view s);
std::string to_upper(std::string_view s);
std::string to_lower(std::string_view s);

// Lowercase + runs of whitespace collapsed to single spaces. The dedup key
// for scenarios and preferences.
std::string normalize_text(std::string_view s);

// First balanced {...} (or [...]) in free-form model text that parses as
// JSON. Models wrap their JSON in prose, so plain json::parse won't do.
std::optional<std::string> extract_json_object(std::string_view text);
std::optional<std::string> extract_json_array(std::string_view text);

// Replace each "{name}" slot with its value. Only the given slots are
// touched; literal braces elsewhere in the template survive.
std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& slots);

}  // namespace rpeval
