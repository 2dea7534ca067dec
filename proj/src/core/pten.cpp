#include "percept/core/pten.hpp"

#include "percept/core/binary_io.hpp"

namespace percept {

namespace {
constexpr char kMagic[4] = {'P', 'T', 'E', 'N'};
}

std::vector<std::uint8_t> encode_pten(const nn::TensorF& t) {
    if (t.rank() > 255) throw std::invalid_argument("pten: rank too large");
    ByteWriter w;
    w.raw(std::string_view(kMagic, 4));
    w.u16(kPtenVersion);
    w.u8(0);
    w.u8(static_cast<std::uint8_t>(t.rank()));
    for (std::size_t d : t.dims()) {
        if (d > 0xFFFFFFFFu) throw std::invalid_argument("pten: dimension too large");
        w.u32(static_cast<std::uint32_t>(d));
    }
    for (float v : t.data()) w.f32(v);
    return w.take();
}

nn::TensorF decode_pten(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.raw(4) != std::string_view(kMagic, 4)) throw FormatError("pten: bad magic");
    const auto version = r.u16();
    if (version != kPtenVersion) throw FormatError("pten: unsupported version " + std::to_string(version));
    if (r.u8() != 0) throw FormatError("pten: unsupported dtype");
    const std::size_t rank = r.u8();
    if (rank < 1 || rank > nn::TensorF::kMaxRank) throw FormatError("pten: unsupported rank");
    std::vector<std::size_t> dims(rank);
    std::size_t count = 1;
    for (auto& d : dims) {
        d = r.u32();
        if (d != 0 && count > r.remaining() / d) throw FormatError("pten: dims exceed payload");
        count *= d;
    }
    if (r.remaining() != count * 4) throw FormatError("pten: payload size does not match dims");
    nn::TensorF t(dims, nn::uninitialized);
    for (float& v : t.data()) v = r.f32();
    return t;
}

void save_pten(const std::filesystem::path& path, const nn::TensorF& t) {
    write_file(path, encode_pten(t));
}

nn::TensorF load_pten(const std::filesystem::path& path) {
    try {
        return decode_pten(read_file(path));
    } catch (const FormatError& e) {
        throw FormatError(path.string() + ": " + e.what());
    }
}

}  // namespace percept
