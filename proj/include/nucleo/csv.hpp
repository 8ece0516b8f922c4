#pragma once

#include <string>
#include <vector>

namespace nucleo {

std::string trim(const std::string& s);

// Plain comma splitting; fields are trimmed. No quoting, none of the
// artifact formats need it.
std::vector<std::string> split_csv_line(const std::string& line);

// Splits file content into lines, tolerating \r\n and a missing final newline.
std::vector<std::string> split_lines(const std::string& text);

std::string read_text_file(const std::string& path);

// Writes to <path>.tmp then renames, so readers never observe partial files.
void write_file_atomic(const std::string& path, const std::string& content);

// Fixed-point decimal with 6 digits; all CSV artifacts use this so reruns
// are byte-identical.
std::string fmt_double(double v);

std::string fmt_double(double v, int digits);

}  // namespace nucleo
