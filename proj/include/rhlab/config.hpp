#pragma once

#include <istream>
#include <string>
#include <vector>

namespace rhlab::config {

// One `key = value [unit]` line. Comments start with '#'.
struct Entry {
    std::string key;
    std::string value;
    std::string unit;  // empty when no bracketed unit is given
    int line = 0;
};

class KeyValueFile {
public:
    static KeyValueFile parse(std::istream& in);
    static KeyValueFile parse_string(const std::string& text);
    static KeyValueFile load(const std::string& path);  // ConfigError if unreadable

    const std::vector<Entry>& entries() const { return entries_; }
    const std::string& text() const { return text_; }
    std::vector<const Entry*> all(const std::string& key) const;
    const Entry* find(const std::string& key) const;  // ConfigError if repeated

private:
    std::vector<Entry> entries_;
    std::string text_;
};

// Typed field access with line/field diagnostics.
double to_double(const Entry& e);
long long to_integer(const Entry& e);
std::vector<double> to_double_list(const Entry& e);  // comma or space separated
std::vector<long long> to_integer_list(const Entry& e);

}  // namespace rhlab::config
