#include "dnpg/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "dnpg/errors.hpp"
#include "dnpg/io.hpp"

namespace dnpg {

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint writer assumes a little-endian host");

class Writer {
public:
    void u32(std::uint32_t v) { raw(&v, 4); }
    void u64(std::uint64_t v) { raw(&v, 8); }
    void f32(float v) { raw(&v, 4); }
    std::string& bytes() { return out_; }

private:
    void raw(const void* p, std::size_t n) { out_.append(static_cast<const char*>(p), n); }
    std::string out_;
};

class Reader {
public:
    explicit Reader(const std::string& bytes, std::size_t limit) : bytes_(bytes), limit_(limit) {}

    std::uint32_t u32() {
        std::uint32_t v;
        raw(&v, 4);
        return v;
    }
    float f32() {
        float v;
        raw(&v, 4);
        return v;
    }
    std::size_t position() const { return pos_; }

private:
    void raw(void* p, std::size_t n) {
        if (pos_ + n > limit_) throw IoError("checkpoint truncated");
        std::memcpy(p, bytes_.data() + pos_, n);
        pos_ += n;
    }
    const std::string& bytes_;
    std::size_t limit_;
    std::size_t pos_ = 0;
};

template <class M>
void write_array(Writer& w, const M& m) {
    w.u32(static_cast<std::uint32_t>(m.rows()));
    w.u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) w.f32(m(r, c));
}

template <class M>
void read_array(Reader& rd, M& m) {
    const std::uint32_t rows = rd.u32();
    const std::uint32_t cols = rd.u32();
    if (rows != static_cast<std::uint32_t>(m.rows()) || cols != static_cast<std::uint32_t>(m.cols()))
        throw IoError("checkpoint array shape disagrees with architecture descriptor");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = rd.f32();
}

} // namespace

std::string encode_checkpoint(const DenoiserParams& params) {
    const auto& a = params.arch;
    const auto& t = params.tensors;
    Writer w;
    w.bytes() = "DNPG";
    w.u32(kCheckpointVersion);
    w.u32(static_cast<std::uint32_t>(a.dim));
    w.u32(static_cast<std::uint32_t>(a.conditions));
    w.u32(static_cast<std::uint32_t>(a.time_steps));
    w.u32(static_cast<std::uint32_t>(a.time_frequencies));
    w.u32(static_cast<std::uint32_t>(a.embedding_width));
    w.u32(static_cast<std::uint32_t>(a.activation));
    w.u32(static_cast<std::uint32_t>(a.hidden.size()));
    for (int h : a.hidden) w.u32(static_cast<std::uint32_t>(h));
    w.u32(static_cast<std::uint32_t>(1 + 2 * t.weights.size()));
    write_array(w, t.embedding);
    for (std::size_t l = 0; l < t.weights.size(); ++l) {
        write_array(w, t.weights[l]);
        write_array(w, t.biases[l]);
    }
    w.u64(fnv1a64(w.bytes()));
    return std::move(w.bytes());
}

DenoiserParams decode_checkpoint(const std::string& bytes) {
    if (bytes.size() < 8 + 8) throw IoError("checkpoint truncated");
    if (bytes.compare(0, 4, "DNPG") != 0) throw IoError("not a checkpoint (bad magic)");
    std::uint32_t version;
    std::memcpy(&version, bytes.data() + 4, 4);
    if (version != kCheckpointVersion)
        throw IoError("unsupported checkpoint version " + std::to_string(version) + " (this build reads version " +
                      std::to_string(kCheckpointVersion) + ")");
    const std::size_t body = bytes.size() - 8;
    std::uint64_t stored;
    std::memcpy(&stored, bytes.data() + body, 8);
    if (fnv1a64(std::string_view(bytes).substr(0, body)) != stored) throw IoError("checkpoint checksum mismatch");

    Reader rd(bytes, body);
    rd.u32(); // magic
    rd.u32(); // version
    DenoiserArch a;
    a.dim = static_cast<int>(rd.u32());
    a.conditions = static_cast<int>(rd.u32());
    a.time_steps = static_cast<int>(rd.u32());
    a.time_frequencies = static_cast<int>(rd.u32());
    a.embedding_width = static_cast<int>(rd.u32());
    a.activation = static_cast<Activation>(rd.u32());
    const std::uint32_t layers = rd.u32();
    if (layers > 64) throw IoError("checkpoint architecture descriptor is implausible");
    a.hidden.clear();
    for (std::uint32_t i = 0; i < layers; ++i) a.hidden.push_back(static_cast<int>(rd.u32()));
    try {
        a.validate();
    } catch (const ConfigError& e) {
        throw IoError(std::string("checkpoint architecture invalid: ") + e.what());
    }
    DenoiserParams p = DenoiserParams::zeros(a);
    if (rd.u32() != 1 + 2 * p.tensors.weights.size()) throw IoError("checkpoint array count mismatch");
    read_array(rd, p.tensors.embedding);
    for (std::size_t l = 0; l < p.tensors.weights.size(); ++l) {
        read_array(rd, p.tensors.weights[l]);
        read_array(rd, p.tensors.biases[l]);
    }
    if (rd.position() != body) throw IoError("checkpoint has trailing bytes");
    if (!p.all_finite()) throw IoError("checkpoint holds non-finite parameters");
    return p;
}

void save_checkpoint(const DenoiserParams& params, const std::filesystem::path& path) {
    write_file_atomic(path, encode_checkpoint(params));
}

DenoiserParams load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_file(path)); }

} // namespace dnpg
