#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>

namespace forecrew::text {

inline bool is_word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

inline std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return std::string(s.substr(a, b - a));
}

inline bool word_start(std::string_view s, std::size_t i) { return i == 0 || !is_word_char(s[i - 1]); }
inline bool word_end(std::string_view s, std::size_t i) { return i >= s.size() || !is_word_char(s[i]); }

inline bool contains(std::string_view hay, std::string_view needle) { return hay.find(needle) != std::string_view::npos; }

} // namespace forecrew::text
