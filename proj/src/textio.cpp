#include "sli/textio.hpp"

#include "sli/errors.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>

namespace sli {

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

namespace {

template <typename T>
T parse_number(std::string_view s, const char* kind) {
    T value{};
    const char* first = s.data();
    const char* last = s.data() + s.size();
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError(std::string("not a valid ") + kind + ": '" + std::string(s) + "'");
    return value;
}

} // namespace

double parse_double(std::string_view s) { return parse_number<double>(s, "number"); }
float parse_float(std::string_view s) { return parse_number<float>(s, "number"); }
std::int64_t parse_int(std::string_view s) { return parse_number<std::int64_t>(s, "integer"); }

std::vector<std::string_view> split(std::string_view line, char sep) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (true) {
        const std::size_t pos = line.find(sep, begin);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(begin));
            break;
        }
        out.push_back(line.substr(begin, pos - begin));
        begin = pos + 1;
    }
    return out;
}

std::vector<std::pair<std::string_view, std::string_view>> split_fields(std::string_view line) {
    std::vector<std::pair<std::string_view, std::string_view>> out;
    for (const auto field : split(line, '\t')) {
        if (field.empty())
            continue;
        const std::size_t eq = field.find('=');
        if (eq == std::string_view::npos)
            out.emplace_back(field, std::string_view{});
        else
            out.emplace_back(field.substr(0, eq), field.substr(eq + 1));
    }
    return out;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingFile("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad())
        throw IoFailure("read failed for " + path.string());
    return std::move(ss).str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoFailure("cannot open " + path.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out)
        throw IoFailure("write failed for " + path.string());
}

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t begin = 0;
    while (begin < text.size()) {
        std::size_t pos = text.find('\n', begin);
        if (pos == std::string_view::npos)
            pos = text.size();
        std::string_view line = text.substr(begin, pos - begin);
        if (!line.empty() && line.back() == '\r')
            line.remove_suffix(1);
        out.push_back(line);
        begin = pos + 1;
    }
    return out;
}

} // namespace sli
