#include "bseg/netpbm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>

#include "bseg/error.hpp"

namespace bseg {

namespace {

std::uint8_t quantize(float v) {
    const float c = std::min(std::max(v, 0.0f), 1.0f);
    return static_cast<std::uint8_t>(std::lround(c * 255.0f));
}

void write_file(const std::filesystem::path& path, const std::string& header,
                const std::vector<std::uint8_t>& payload) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("netpbm: cannot open '" + path.string() + "' for writing");
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(payload.data()),
              static_cast<std::streamsize>(payload.size()));
    if (!out) throw IoError("netpbm: write failed for '" + path.string() + "'");
}

// Reads the next header token, skipping whitespace and '#' comments.
std::string next_token(std::istream& in, const std::filesystem::path& path, const char* field) {
    std::string tok;
    int ch = in.get();
    while (ch != EOF) {
        if (ch == '#') {
            while (ch != EOF && ch != '\n') ch = in.get();
        } else if (std::isspace(ch)) {
            ch = in.get();
        } else {
            break;
        }
    }
    while (ch != EOF && !std::isspace(ch) && ch != '#') {
        tok.push_back(static_cast<char>(ch));
        ch = in.get();
    }
    if (ch == '#') in.unget();
    if (tok.empty()) {
        throw ParseError("netpbm: '" + path.string() + "': missing " + field + " field");
    }
    return tok;
}

int parse_positive(const std::string& tok, const std::filesystem::path& path, const char* field) {
    try {
        const int v = std::stoi(tok);
        if (v <= 0) throw std::invalid_argument("non-positive");
        return v;
    } catch (const std::exception&) {
        throw ParseError("netpbm: '" + path.string() + "': invalid " + field + " field '" + tok +
                         "'");
    }
}

struct PnmHeader {
    int width = 0;
    int height = 0;
};

PnmHeader read_header(std::istream& in, const std::filesystem::path& path, const char* magic) {
    const std::string got = next_token(in, path, "magic");
    if (got != magic) {
        throw ParseError("netpbm: '" + path.string() + "': magic field must be " +
                         std::string(magic) + ", got '" + got + "'");
    }
    PnmHeader h;
    h.width = parse_positive(next_token(in, path, "width"), path, "width");
    h.height = parse_positive(next_token(in, path, "height"), path, "height");
    const int maxval = parse_positive(next_token(in, path, "maxval"), path, "maxval");
    if (maxval != 255) {
        throw ParseError("netpbm: '" + path.string() + "': maxval field must be 255, got " +
                         std::to_string(maxval));
    }
    // Exactly one whitespace byte separates the header from the payload.
    const int sep = in.get();
    if (sep == EOF || !std::isspace(sep)) {
        throw ParseError("netpbm: '" + path.string() + "': missing header/payload separator");
    }
    return h;
}

std::vector<std::uint8_t> read_payload(std::istream& in, const std::filesystem::path& path,
                                       std::size_t expected) {
    std::vector<std::uint8_t> bytes(expected);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(expected));
    if (static_cast<std::size_t>(in.gcount()) != expected) {
        throw ParseError("netpbm: '" + path.string() + "': truncated payload, expected " +
                         std::to_string(expected) + " bytes, got " + std::to_string(in.gcount()));
    }
    return bytes;
}

std::ifstream open_input(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("netpbm: cannot open '" + path.string() + "' for reading");
    return in;
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Tensor& image) {
    require_rank(image, 3, "write_ppm image");
    if (image.dim(0) != 3) {
        throw ShapeError("write_ppm: expected 3 channels, got " + std::to_string(image.dim(0)));
    }
    const int h = image.dim(1), w = image.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<std::uint8_t> payload(static_cast<std::size_t>(3 * plane));
    const float* r = image.data();
    const float* g = r + plane;
    const float* b = g + plane;
    for (std::int64_t i = 0; i < plane; ++i) {
        payload[static_cast<std::size_t>(3 * i)] = quantize(r[i]);
        payload[static_cast<std::size_t>(3 * i + 1)] = quantize(g[i]);
        payload[static_cast<std::size_t>(3 * i + 2)] = quantize(b[i]);
    }
    write_file(path, "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", payload);
}

void write_pgm(const std::filesystem::path& path, const Tensor& gray_bytes) {
    require_rank(gray_bytes, 2, "write_pgm image");
    const int h = gray_bytes.dim(0), w = gray_bytes.dim(1);
    std::vector<std::uint8_t> payload(static_cast<std::size_t>(gray_bytes.size()));
    for (std::int64_t i = 0; i < gray_bytes.size(); ++i) {
        const float v = std::min(std::max(gray_bytes[i], 0.0f), 255.0f);
        payload[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(std::lround(v));
    }
    write_file(path, "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n", payload);
}

Tensor read_ppm(const std::filesystem::path& path) {
    auto in = open_input(path);
    const PnmHeader h = read_header(in, path, "P6");
    const std::int64_t plane = static_cast<std::int64_t>(h.height) * h.width;
    const auto bytes = read_payload(in, path, static_cast<std::size_t>(3 * plane));
    Tensor image({3, h.height, h.width});
    float* r = image.data();
    float* g = r + plane;
    float* b = g + plane;
    for (std::int64_t i = 0; i < plane; ++i) {
        r[i] = static_cast<float>(bytes[static_cast<std::size_t>(3 * i)]) / 255.0f;
        g[i] = static_cast<float>(bytes[static_cast<std::size_t>(3 * i + 1)]) / 255.0f;
        b[i] = static_cast<float>(bytes[static_cast<std::size_t>(3 * i + 2)]) / 255.0f;
    }
    return image;
}

Tensor read_pgm(const std::filesystem::path& path) {
    auto in = open_input(path);
    const PnmHeader h = read_header(in, path, "P5");
    const auto bytes = read_payload(in, path, static_cast<std::size_t>(h.height) *
                                                  static_cast<std::size_t>(h.width));
    Tensor gray({h.height, h.width});
    for (std::int64_t i = 0; i < gray.size(); ++i) {
        gray[i] = static_cast<float>(bytes[static_cast<std::size_t>(i)]);
    }
    return gray;
}

std::pair<Tensor, Tensor> load_pair(const std::filesystem::path& image_path,
                                    const std::filesystem::path& mask_path) {
    Tensor image = read_ppm(image_path);
    Tensor raw = read_pgm(mask_path);
    if (raw.dim(0) != image.dim(1) || raw.dim(1) != image.dim(2)) {
        throw ParseError("load_pair: mask dims " + dims_str(raw.dims()) +
                         " do not match image dims " + dims_str(image.dims()) + " for '" +
                         mask_path.string() + "'");
    }
    Tensor mask(raw.dims());
    for (std::int64_t i = 0; i < raw.size(); ++i) mask[i] = raw[i] >= 128.0f ? 1.0f : 0.0f;
    return {std::move(image), std::move(mask)};
}

}  // namespace bseg
