#include "percept/nn/weights_io.hpp"

#include "percept/core/binary_io.hpp"

namespace percept::nn {

namespace {

constexpr char kMagic[4] = {'P', 'N', 'E', 'T'};

void write_reals(ByteWriter& w, std::span<const float> values) {
    for (float v : values) w.f32(v);
}

void read_reals(ByteReader& r, std::span<float> values) {
    for (float& v : values) v = r.f32();
}

}  // namespace

std::vector<std::uint8_t> save_network(const Network<float>& net, std::string_view metadata) {
    std::size_t layers = 0;
    for (const auto& b : net.blocks) layers += b.bn ? 2 : 1;
    if (layers > 0xFFFF) throw std::invalid_argument("save_network: too many layers");

    ByteWriter w;
    w.raw(std::string_view(kMagic, 4));
    w.u16(kWeightsVersion);
    w.u16(static_cast<std::uint16_t>(layers));
    w.u32(static_cast<std::uint32_t>(metadata.size()));
    w.raw(metadata);
    for (const auto& b : net.blocks) {
        const auto& c = b.conv;
        c.validate();
        if (c.in_channels >= (1u << 12) || c.out_channels >= (1u << 12) || c.groups >= (1u << 8))
            throw std::invalid_argument("save_network: conv shape does not fit the shape header");
        w.u8(static_cast<std::uint8_t>(LayerKind::conv));
        w.u32(static_cast<std::uint32_t>(c.in_channels | c.out_channels << 12 | c.groups << 24));
        write_reals(w, c.weights.data());
        write_reals(w, c.bias);
        if (b.bn) {
            const auto& bn = *b.bn;
            bn.validate();
            w.u8(static_cast<std::uint8_t>(LayerKind::batchnorm));
            w.u32(static_cast<std::uint32_t>(bn.channels()));
            write_reals(w, bn.gamma);
            write_reals(w, bn.beta);
            write_reals(w, bn.running_mean);
            write_reals(w, bn.running_var);
        }
    }
    w.u32(crc32_of(w.bytes()));
    return w.take();
}

LoadedNetwork load_network(std::span<const std::uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.raw(4) != std::string_view(kMagic, 4)) throw FormatError("weights: bad magic");
    const std::uint16_t version = r.u16();
    if (version != kWeightsVersion)
        throw FormatError("weights: unsupported version " + std::to_string(version));
    const std::uint16_t layers = r.u16();
    LoadedNetwork out;
    out.metadata = r.raw(r.u32());

    for (std::uint16_t i = 0; i < layers; ++i) {
        const auto kind = static_cast<LayerKind>(r.u8());
        const std::uint32_t shape = r.u32();
        if (kind == LayerKind::conv) {
            const std::size_t in = shape & 0xFFF, outc = (shape >> 12) & 0xFFF, groups = shape >> 24;
            Block<float> block;
            try {
                block.conv = ConvLayer<float>::make(in, outc, groups);
            } catch (const std::invalid_argument& e) {
                throw FormatError(std::string("weights: ") + e.what());
            }
            read_reals(r, block.conv.weights.data());
            read_reals(r, block.conv.bias);
            out.network.blocks.push_back(std::move(block));
        } else if (kind == LayerKind::batchnorm) {
            if (out.network.blocks.empty() || out.network.blocks.back().bn)
                throw FormatError("weights: batch-norm layer without a preceding conv layer");
            auto& block = out.network.blocks.back();
            if (shape != block.conv.out_channels)
                throw FormatError("weights: batch-norm width does not match its conv layer");
            auto bn = BatchNormLayer<float>::make(shape);
            read_reals(r, bn.gamma);
            read_reals(r, bn.beta);
            read_reals(r, bn.running_mean);
            read_reals(r, bn.running_var);
            block.bn = std::move(bn);
        } else {
            throw FormatError("weights: unknown layer kind " + std::to_string(int(kind)));
        }
    }

    const std::size_t payload_end = r.position();
    const std::uint32_t stored_crc = r.u32();
    if (stored_crc != crc32_of(bytes.first(payload_end))) throw FormatError("weights: CRC mismatch");
    if (r.remaining() != 0) throw FormatError("weights: trailing bytes after CRC");
    return out;
}

}  // namespace percept::nn
