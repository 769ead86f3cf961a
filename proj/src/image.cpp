#include "riskplan/image.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace riskplan {

std::vector<std::uint8_t> encode_ppm(const MapImage& img) {
    std::string header = "P6\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

void write_ppm(const MapImage& img, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    const auto bytes = encode_ppm(img);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path);
}

namespace {

int next_token(std::istream& in) {
    // Skips whitespace and '#' comments per the PPM grammar.
    for (;;) {
        int c = in.get();
        if (c == '#') {
            while (c != '\n' && c != EOF) c = in.get();
        } else if (!isspace(c)) {
            int val = 0;
            while (isdigit(c)) {
                val = val * 10 + (c - '0');
                c = in.get();
            }
            return val;
        } else if (c == EOF) {
            throw std::runtime_error("truncated PPM header");
        }
    }
}

}  // namespace

MapImage read_ppm(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path);
    char m0 = 0, m1 = 0;
    f.get(m0);
    f.get(m1);
    if (m0 != 'P' || m1 != '6') throw std::runtime_error("not a P6 PPM: " + path);
    MapImage img;
    img.width = next_token(f);
    img.height = next_token(f);
    const int maxval = next_token(f);
    if (maxval != 255) throw std::runtime_error("unsupported PPM maxval in " + path);
    img.pixels.resize(static_cast<size_t>(img.width) * img.height * 3);
    f.read(reinterpret_cast<char*>(img.pixels.data()), static_cast<std::streamsize>(img.pixels.size()));
    if (f.gcount() != static_cast<std::streamsize>(img.pixels.size()))
        throw std::runtime_error("truncated PPM payload in " + path);
    return img;
}

}  // namespace riskplan
