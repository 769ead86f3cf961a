// Weights file: "NRRT" magic, little-endian u32 format version and image
// size, the normalization bounds as four little-endian f64, a tensor table
// (kind tag u8, ndim u8, dims u32...), then raw f32 payloads in table order.
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "riskplan/neural.hpp"

namespace riskplan {

namespace {

constexpr std::uint32_t kSupportedVersion = 1;

enum TensorKind : std::uint8_t {
    kConvW = 1,
    kConvB = 2,
    kBnGamma = 3,
    kBnBeta = 4,
    kBnMean = 5,
    kBnVar = 6,
    kFcW = 7,
    kFcB = 8,
};

struct TensorDesc {
    std::uint8_t kind = 0;
    std::vector<std::uint32_t> dims;
    const std::vector<double>* data = nullptr;  // save side
    std::vector<double> loaded;                 // load side

    size_t count() const {
        size_t n = 1;
        for (auto d : dims) n *= d;
        return n;
    }
};

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                          static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("truncated file");
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(bits >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}

double get_f64(std::istream& is) {
    unsigned char b[8];
    if (!is.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("truncated file");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

void put_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(os, bits);
}

float get_f32(std::istream& is) {
    const std::uint32_t bits = get_u32(is);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

std::vector<TensorDesc> tensor_table(const ModelBundle& m) {
    std::vector<TensorDesc> t;
    auto conv_block = [&](const ConvLayer& c, const BatchNorm& bn) {
        t.push_back({kConvW,
                     {static_cast<std::uint32_t>(c.out_ch), static_cast<std::uint32_t>(c.in_ch), 3, 3},
                     &c.w});
        t.push_back({kConvB, {static_cast<std::uint32_t>(c.out_ch)}, &c.b});
        const auto ch = static_cast<std::uint32_t>(bn.ch);
        t.push_back({kBnGamma, {ch}, &bn.gamma});
        t.push_back({kBnBeta, {ch}, &bn.beta});
        t.push_back({kBnMean, {ch}, &bn.run_mean});
        t.push_back({kBnVar, {ch}, &bn.run_var});
    };
    auto fc = [&](const Dense& d) {
        t.push_back({kFcW, {static_cast<std::uint32_t>(d.out), static_cast<std::uint32_t>(d.in)}, &d.w});
        t.push_back({kFcB, {static_cast<std::uint32_t>(d.out)}, &d.b});
    };
    conv_block(m.encoder.conv1, m.encoder.bn1);
    conv_block(m.encoder.conv2, m.encoder.bn2);
    fc(m.encoder.fc1);
    fc(m.encoder.fc2);
    for (const auto& l : m.inference.layers) fc(l);
    return t;
}

}  // namespace

void save_model(const ModelBundle& model, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open for writing: " + path);
    os.write("NRRT", 4);
    put_u32(os, static_cast<std::uint32_t>(model.format_version));
    put_u32(os, static_cast<std::uint32_t>(model.image_size));
    put_f64(os, model.normalization.xmin);
    put_f64(os, model.normalization.xmax);
    put_f64(os, model.normalization.ymin);
    put_f64(os, model.normalization.ymax);

    const auto table = tensor_table(model);
    put_u32(os, static_cast<std::uint32_t>(table.size()));
    for (const auto& t : table) {
        os.put(static_cast<char>(t.kind));
        os.put(static_cast<char>(t.dims.size()));
        for (auto d : t.dims) put_u32(os, d);
    }
    for (const auto& t : table) {
        if (t.data->size() != t.count()) throw std::logic_error("tensor size mismatch on save");
        for (double v : *t.data) put_f32(os, static_cast<float>(v));
    }
    if (!os) throw std::runtime_error("write failed: " + path);
}

ModelBundle load_model(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open: " + path);
    char magic[4];
    if (!is.read(magic, 4)) throw std::runtime_error("truncated file");
    if (std::memcmp(magic, "NRRT", 4) != 0) throw std::runtime_error("bad magic");
    const std::uint32_t version = get_u32(is);
    if (version > kSupportedVersion) throw std::runtime_error("unsupported version");
    ModelBundle m;
    m.format_version = static_cast<int>(version);
    m.image_size = static_cast<int>(get_u32(is));
    m.normalization.xmin = get_f64(is);
    m.normalization.xmax = get_f64(is);
    m.normalization.ymin = get_f64(is);
    m.normalization.ymax = get_f64(is);

    const std::uint32_t count = get_u32(is);
    std::vector<TensorDesc> table(count);
    for (auto& t : table) {
        int kind = is.get();
        int ndim = is.get();
        if (kind == EOF || ndim == EOF) throw std::runtime_error("truncated file");
        t.kind = static_cast<std::uint8_t>(kind);
        t.dims.resize(ndim);
        for (auto& d : t.dims) d = get_u32(is);
    }
    for (auto& t : table) {
        t.loaded.resize(t.count());
        for (auto& v : t.loaded) v = static_cast<double>(get_f32(is));
    }

    // Reassemble: two conv+bn blocks, two encoder fc layers, six inference fc
    // layers, with the dimension chain validated along the way.
    size_t pos = 0;
    auto expect = [&](std::uint8_t kind, size_t ndim) -> TensorDesc& {
        if (pos >= table.size()) throw std::runtime_error("truncated tensor table");
        TensorDesc& t = table[pos++];
        if (t.kind != kind || t.dims.size() != ndim)
            throw std::runtime_error("unexpected tensor layout");
        return t;
    };
    auto read_conv_block = [&](ConvLayer& c, BatchNorm& bn) {
        TensorDesc& w = expect(kConvW, 4);
        if (w.dims[2] != 3 || w.dims[3] != 3) throw std::runtime_error("unsupported kernel size");
        c.out_ch = static_cast<int>(w.dims[0]);
        c.in_ch = static_cast<int>(w.dims[1]);
        c.w = std::move(w.loaded);
        TensorDesc& b = expect(kConvB, 1);
        if (static_cast<int>(b.dims[0]) != c.out_ch) throw std::runtime_error("conv bias mismatch");
        c.b = std::move(b.loaded);
        bn.ch = c.out_ch;
        TensorDesc& g = expect(kBnGamma, 1);
        TensorDesc& be = expect(kBnBeta, 1);
        TensorDesc& mean = expect(kBnMean, 1);
        TensorDesc& var = expect(kBnVar, 1);
        for (const TensorDesc* d : {&g, &be, &mean, &var})
            if (static_cast<int>(d->dims[0]) != bn.ch)
                throw std::runtime_error("batch norm width mismatch");
        bn.gamma = std::move(g.loaded);
        bn.beta = std::move(be.loaded);
        bn.run_mean = std::move(mean.loaded);
        bn.run_var = std::move(var.loaded);
    };
    auto read_fc = [&](Dense& d) {
        TensorDesc& w = expect(kFcW, 2);
        d.out = static_cast<int>(w.dims[0]);
        d.in = static_cast<int>(w.dims[1]);
        d.w = std::move(w.loaded);
        TensorDesc& b = expect(kFcB, 1);
        if (static_cast<int>(b.dims[0]) != d.out) throw std::runtime_error("fc bias mismatch");
        d.b = std::move(b.loaded);
    };

    m.encoder.image_size = m.image_size;
    read_conv_block(m.encoder.conv1, m.encoder.bn1);
    read_conv_block(m.encoder.conv2, m.encoder.bn2);
    read_fc(m.encoder.fc1);
    read_fc(m.encoder.fc2);
    while (pos < table.size()) {
        Dense d;
        read_fc(d);
        m.inference.layers.push_back(std::move(d));
    }

    if (m.encoder.conv1.in_ch != 3) throw std::runtime_error("encoder must take RGB input");
    if (m.encoder.conv2.in_ch != m.encoder.conv1.out_ch)
        throw std::runtime_error("conv chain mismatch");
    if (m.image_size % 4 != 0 || m.encoder.fc1.in != m.encoder.flat_dim())
        throw std::runtime_error("flattened width mismatch");
    if (m.encoder.fc2.in != m.encoder.fc1.out) throw std::runtime_error("encoder fc chain mismatch");
    if (m.inference.layers.empty()) throw std::runtime_error("missing inference layers");
    if (m.inference.layers.front().in != m.encoder.fc2.out + 5)
        throw std::runtime_error("inference input width mismatch");
    for (size_t k = 0; k + 1 < m.inference.layers.size(); ++k)
        if (m.inference.layers[k + 1].in != m.inference.layers[k].out)
            throw std::runtime_error("inference chain mismatch");
    if (m.inference.layers.back().out != 2)
        throw std::runtime_error("inference output width mismatch");
    return m;
}

}  // namespace riskplan
