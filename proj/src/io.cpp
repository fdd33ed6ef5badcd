#include "dnpg/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dnpg/errors.hpp"

namespace dnpg {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t state) {
    for (unsigned char ch : bytes) {
        state ^= ch;
        state *= 0x100000001b3ULL;
    }
    return state;
}

std::string hex64(std::uint64_t value) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string format_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IoError("read failed: " + path.string());
    return ss.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

std::string format_samples_csv(const SampleTable& t) {
    if (t.run_ids.size() != t.samples.size() || t.seeds.size() != t.samples.size())
        throw std::invalid_argument("sample table columns have different lengths");
    const Eigen::Index d = t.samples.empty() ? 1 : t.samples.front().size();
    std::string out = "run_id,seed";
    for (Eigen::Index i = 0; i < d; ++i) out += ",x" + std::to_string(i);
    out += '\n';
    for (std::size_t r = 0; r < t.samples.size(); ++r) {
        out += t.run_ids[r];
        out += ',';
        out += std::to_string(t.seeds[r]);
        for (Eigen::Index i = 0; i < t.samples[r].size(); ++i) {
            out += ',';
            out += format_real(t.samples[r][i]);
        }
        out += '\n';
    }
    return out;
}

namespace {

std::vector<std::string> split(std::string_view line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        cells.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return cells;
}

} // namespace

SampleTable parse_samples_csv(std::string_view text) {
    SampleTable t;
    std::size_t line_no = 0;
    std::size_t cols = 0;
    std::size_t start = 0;
    while (start < text.size()) {
        auto end = text.find('\n', start);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(start, end - start);
        start = end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (line.empty()) continue;
        const auto cells = split(line);
        if (line_no == 1) {
            if (cells.size() < 3 || cells[0] != "run_id" || cells[1] != "seed")
                throw ConfigError("samples csv: header must be run_id,seed,x0,...");
            cols = cells.size();
            continue;
        }
        if (cells.size() != cols) throw ConfigError("samples csv line " + std::to_string(line_no) + ": wrong column count");
        try {
            Eigen::VectorXd z(static_cast<Eigen::Index>(cols - 2));
            for (std::size_t i = 2; i < cols; ++i) z[static_cast<Eigen::Index>(i - 2)] = std::stod(cells[i]);
            t.run_ids.push_back(cells[0]);
            t.seeds.push_back(std::stoull(cells[1]));
            t.samples.push_back(std::move(z));
        } catch (const std::logic_error&) {
            throw ConfigError("samples csv line " + std::to_string(line_no) + ": malformed number");
        }
    }
    if (cols == 0) throw ConfigError("samples csv: missing header");
    return t;
}

} // namespace dnpg
