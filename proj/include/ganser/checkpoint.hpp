// Little-endian binary checkpoint container.
//
// Network file layout: magic "GANSER1\0", version u32, layer count u32,
// layer dims u32[], hidden/output activation u8s, then row-major f64 weight
// and bias blocks in layer order. AAE and GAN checkpoints reuse the same
// header followed by a kind byte and their payload (see aae.hpp / gan.hpp).
#pragma once

#include <array>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <stdexcept>
#include <string>

#include "ganser/mlp.hpp"

namespace ganser {

constexpr std::array<unsigned char, 8> kCheckpointMagic = {'G', 'A', 'N', 'S', 'E', 'R', '1', '\0'};
constexpr std::uint32_t kCheckpointVersion = 1;

constexpr std::uint8_t kKindAae = 'A';
constexpr std::uint8_t kKindGan = 'G';
constexpr std::uint8_t kKindSvm = 'S';

namespace io {

inline void write_u8(std::ostream& os, std::uint8_t v) { os.put(static_cast<char>(v)); }

inline void write_u32(std::ostream& os, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_u64(std::ostream& os, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void write_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    write_u64(os, bits);
}

inline std::uint8_t read_u8(std::istream& is) {
    int c = is.get();
    if (c == EOF) throw std::runtime_error("checkpoint: unexpected end of file");
    return static_cast<std::uint8_t>(c);
}

inline std::uint32_t read_u32(std::istream& is) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(read_u8(is)) << (8 * i);
    return v;
}

inline std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(read_u8(is)) << (8 * i);
    return v;
}

inline double read_f64(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double v;
    std::memcpy(&v, &bits, sizeof v);
    return v;
}

inline void write_string(std::ostream& os, const std::string& s) {
    write_u32(os, static_cast<std::uint32_t>(s.size()));
    os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    if (n > (1u << 28)) throw std::runtime_error("checkpoint: unreasonable string length");
    std::string s(n, '\0');
    is.read(s.data(), static_cast<std::streamsize>(n));
    if (!is) throw std::runtime_error("checkpoint: unexpected end of file");
    return s;
}

inline void write_f64_vector(std::ostream& os, const std::vector<double>& v) {
    write_u32(os, static_cast<std::uint32_t>(v.size()));
    for (double x : v) write_f64(os, x);
}

inline std::vector<double> read_f64_vector(std::istream& is) {
    const std::uint32_t n = read_u32(is);
    std::vector<double> v(n);
    for (std::uint32_t i = 0; i < n; ++i) v[i] = read_f64(is);
    return v;
}

}  // namespace io

inline void write_checkpoint_header(std::ostream& os) {
    os.write(reinterpret_cast<const char*>(kCheckpointMagic.data()), kCheckpointMagic.size());
    io::write_u32(os, kCheckpointVersion);
}

inline void read_checkpoint_header(std::istream& is) {
    std::array<unsigned char, 8> magic{};
    is.read(reinterpret_cast<char*>(magic.data()), magic.size());
    if (!is || magic != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic bytes");
    const std::uint32_t version = io::read_u32(is);
    if (version != kCheckpointVersion)
        throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
}

inline void write_network_block(std::ostream& os, const MlpNetwork& net) {
    validate_network(net);
    io::write_u32(os, static_cast<std::uint32_t>(net.layer_dims.size()));
    for (int d : net.layer_dims) io::write_u32(os, static_cast<std::uint32_t>(d));
    io::write_u8(os, static_cast<std::uint8_t>(net.hidden_act));
    io::write_u8(os, static_cast<std::uint8_t>(net.output_act));
    for (int l = 0; l < net.layer_count(); ++l) {
        for (double v : net.weights[l].data) io::write_f64(os, v);
        for (double v : net.biases[l]) io::write_f64(os, v);
    }
}

inline MlpNetwork read_network_block(std::istream& is) {
    MlpNetwork net;
    const std::uint32_t ndims = io::read_u32(is);
    if (ndims < 2 || ndims > 64) throw std::runtime_error("checkpoint: bad layer count");
    for (std::uint32_t i = 0; i < ndims; ++i) {
        const std::uint32_t d = io::read_u32(is);
        if (d == 0 || d > (1u << 20)) throw std::runtime_error("checkpoint: bad layer dim");
        net.layer_dims.push_back(static_cast<int>(d));
    }
    const std::uint8_t h = io::read_u8(is);
    const std::uint8_t o = io::read_u8(is);
    if (h > 1 || o > 1) throw std::runtime_error("checkpoint: bad activation enum");
    net.hidden_act = static_cast<HiddenAct>(h);
    net.output_act = static_cast<OutputAct>(o);
    for (std::size_t l = 0; l + 1 < net.layer_dims.size(); ++l) {
        Matrix w(net.layer_dims[l + 1], net.layer_dims[l]);
        for (double& v : w.data) v = io::read_f64(is);
        std::vector<double> b(net.layer_dims[l + 1]);
        for (double& v : b) v = io::read_f64(is);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    validate_network(net);
    return net;
}

inline void save_network(const std::string& path, const MlpNetwork& net) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_network: cannot open " + path);
    write_checkpoint_header(os);
    write_network_block(os, net);
    if (!os) throw std::runtime_error("save_network: write failed for " + path);
}

inline MlpNetwork load_network(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_network: cannot open " + path);
    read_checkpoint_header(is);
    return read_network_block(is);
}

}  // namespace ganser
