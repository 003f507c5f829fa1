#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace adr::text {

// Decodes UTF-8 into code points. Invalid sequences decode to U+FFFD, one per
// offending byte.
std::u32string utf8_decode(std::string_view bytes);
std::string utf8_encode(std::u32string_view cps);
std::string utf8_encode(char32_t cp);

// TSV field escaping: backslash, tab, newline and carriage return become the
// two-character sequences \\ \t \n \r. Unknown escapes are kept verbatim.
std::string escape_field(std::string_view raw);
std::string unescape_field(std::string_view field);

std::vector<std::string> split(std::string_view line, char sep);

// Reads all lines of a file, stripping the trailing '\n' (and a '\r' before it).
// Throws DataError if the file cannot be opened.
std::vector<std::string> read_lines(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

std::string trim(std::string_view s);
std::string to_lower_ascii(std::string_view s);

}  // namespace adr::text
