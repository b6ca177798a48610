#include "rpeval/util.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"
#include "rpeval/hash.hpp"

namespace rpeval {

std::string to_hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[v & 0xF];
    v >>= 4;
  }
  return out;
}

std::vector<std::size_t> sample_indices(Rng& rng, std::size_t pool_size,
                                        std::size_t count) {
  if (count > pool_size) count = pool_size;
  std::vector<std::size_t> pool(pool_size);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t j = i + rng.below(pool_size - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());
  return pool;
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string to_upper(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string normalize_text(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  bool in_space = true;  // drops leading whitespace
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!in_space) out.push_back(' ');
      in_space = true;
    } else {
      out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

namespace {

// Balanced scan that respects string literals and escapes. Returns the
// first candidate that nlohmann accepts, so `{` inside prose can't trip it.
std::optional<std::string> extract_balanced(std::string_view text, char open,
                                            char close) {
  for (std::size_t start = 0; start < text.size(); ++start) {
    if (text[start] != open) continue;
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < text.size(); ++i) {
      char c = text[i];
      if (in_string) {
        if (escaped) {
          escaped = false;
        } else if (c == '\\') {
          escaped = true;
        } else if (c == '"') {
          in_string = false;
        }
        continue;
      }
      if (c == '"') {
        in_string = true;
      } else if (c == open) {
        ++depth;
      } else if (c == close) {
        --depth;
        if (depth == 0) {
          std::string candidate(text.substr(start, i - start + 1));
          if (nlohmann::json::accept(candidate)) return candidate;
          break;  // balanced but not JSON; try the next opener
        }
      }
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<std::string> extract_json_object(std::string_view text) {
  return extract_balanced(text, '{', '}');
}

std::optional<std::string> extract_json_array(std::string_view text) {
  return extract_balanced(text, '[', ']');
}

std::string render_template(std::string_view tmpl,
                            const std::map<std::string, std::string>& slots) {
  std::string out(tmpl);
  for (const auto& [name, value] : slots) {
    const std::string needle = "{" + name + "}";
    std::size_t pos = 0;
    while ((pos = out.find(needle, pos)) != std::string::npos) {
      out.replace(pos, needle.size(), value);
      pos += value.size();
    }
  }
  return out;
}

}  // namespace rpeval
