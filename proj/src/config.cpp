#include "rhlab/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "rhlab/common.hpp"

namespace rhlab::config {
namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

[[noreturn]] void fail(const Entry& e, const std::string& what) {
    throw ConfigError("line " + std::to_string(e.line) + ", field '" + e.key + "': " + what, e.line, e.key);
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

double parse_double(const Entry& e, const std::string& s) {
    double v = 0;
    const char* end = s.data() + s.size();
    auto r = std::from_chars(s.data(), end, v);
    if (r.ec != std::errc() || r.ptr != end) fail(e, "expected a number, got '" + s + "'");
    return v;
}

long long parse_integer(const Entry& e, const std::string& s) {
    long long v = 0;
    const char* end = s.data() + s.size();
    auto r = std::from_chars(s.data(), end, v);
    if (r.ec == std::errc() && r.ptr == end) return v;
    // allow 1e5 style integers
    const double d = parse_double(e, s);
    if (d != static_cast<double>(static_cast<long long>(d))) fail(e, "expected an integer, got '" + s + "'");
    return static_cast<long long>(d);
}

}  // namespace

KeyValueFile KeyValueFile::parse(std::istream& in) {
    KeyValueFile f;
    std::ostringstream raw;
    std::string line;
    int no = 0;
    while (std::getline(in, line)) {
        ++no;
        raw << line << '\n';
        const auto hash = line.find('#');
        const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        const auto eq = body.find('=');
        if (eq == std::string::npos) throw ConfigError("line " + std::to_string(no) + ": expected 'key = value'", no);
        Entry e;
        e.line = no;
        e.key = trim(body.substr(0, eq));
        std::string value = trim(body.substr(eq + 1));
        if (e.key.empty()) throw ConfigError("line " + std::to_string(no) + ": empty key", no);
        if (!value.empty() && value.back() == ']') {
            const auto lb = value.rfind('[');
            if (lb == std::string::npos) fail(e, "unbalanced unit bracket");
            e.unit = trim(value.substr(lb + 1, value.size() - lb - 2));
            value = trim(value.substr(0, lb));
        }
        if (value.empty()) fail(e, "missing value");
        e.value = value;
        f.entries_.push_back(std::move(e));
    }
    f.text_ = raw.str();
    return f;
}

KeyValueFile KeyValueFile::parse_string(const std::string& text) {
    std::istringstream in(text);
    return parse(in);
}

KeyValueFile KeyValueFile::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read '" + path + "'", 0);
    return parse(in);
}

std::vector<const Entry*> KeyValueFile::all(const std::string& key) const {
    std::vector<const Entry*> out;
    for (const auto& e : entries_)
        if (e.key == key) out.push_back(&e);
    return out;
}

const Entry* KeyValueFile::find(const std::string& key) const {
    const auto v = all(key);
    if (v.size() > 1) fail(*v[1], "repeated key");
    return v.empty() ? nullptr : v[0];
}

double to_double(const Entry& e) { return parse_double(e, e.value); }

long long to_integer(const Entry& e) { return parse_integer(e, e.value); }

std::vector<double> to_double_list(const Entry& e) {
    std::vector<double> out;
    for (const auto& s : split_list(e.value)) out.push_back(parse_double(e, s));
    return out;
}

std::vector<long long> to_integer_list(const Entry& e) {
    std::vector<long long> out;
    for (const auto& s : split_list(e.value)) out.push_back(parse_integer(e, s));
    return out;
}

}  // namespace rhlab::config
