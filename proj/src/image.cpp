#include "chartagent/image.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>

namespace chartagent {

ChartImage::ChartImage(int w, int h, Rgb fill) : width(w), height(h) {
    if (w <= 0 || h <= 0) fail("CanvasTooSmall", "non-positive image dimensions");
    pixels.resize(size_t(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) set(x, y, fill);
}

void ChartImage::fill_rect(const RectI& r, Rgb c) {
    const int x0 = std::max(0, r.x), x1 = std::min(width, r.right());
    const int y0 = std::max(0, r.y), y1 = std::min(height, r.bottom());
    for (int y = y0; y < y1; ++y)
        for (int x = x0; x < x1; ++x) set(x, y, c);
}

std::vector<uint8_t> encode_ppm(const ChartImage& img) {
    std::string header = "P6\n" + std::to_string(img.width) + " " +
                         std::to_string(img.height) + "\n255\n";
    std::vector<uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), img.pixels.begin(), img.pixels.end());
    return out;
}

namespace {

// Parses one whitespace-delimited ASCII integer, skipping '#' comments.
int parse_ppm_int(const std::vector<uint8_t>& b, size_t& i) {
    while (i < b.size()) {
        if (std::isspace(b[i])) {
            ++i;
        } else if (b[i] == '#') {
            while (i < b.size() && b[i] != '\n') ++i;
        } else {
            break;
        }
    }
    int v = 0;
    bool any = false;
    while (i < b.size() && std::isdigit(b[i])) {
        v = v * 10 + (b[i] - '0');
        any = true;
        ++i;
    }
    if (!any) fail("IoFailure", "malformed PPM header");
    return v;
}

}  // namespace

ChartImage decode_ppm(const std::vector<uint8_t>& bytes) {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6')
        fail("IoFailure", "not a P6 PPM");
    size_t i = 2;
    const int w = parse_ppm_int(bytes, i);
    const int h = parse_ppm_int(bytes, i);
    const int maxval = parse_ppm_int(bytes, i);
    if (maxval != 255) fail("IoFailure", "unsupported PPM maxval");
    ++i;  // single whitespace after maxval
    const size_t need = size_t(w) * h * 3;
    if (bytes.size() - i < need) fail("IoFailure", "truncated PPM payload");
    ChartImage img;
    img.width = w;
    img.height = h;
    img.pixels.assign(bytes.begin() + i, bytes.begin() + i + need);
    return img;
}

void write_ppm(const ChartImage& img, const std::string& path) {
    write_file_bytes(path, encode_ppm(img));
}

ChartImage read_ppm(const std::string& path) {
    return decode_ppm(read_file_bytes(path));
}

namespace {

void push_u32be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(uint8_t(v >> 24));
    out.push_back(uint8_t(v >> 16));
    out.push_back(uint8_t(v >> 8));
    out.push_back(uint8_t(v));
}

void push_chunk(std::vector<uint8_t>& out, const char type[4],
                const std::vector<uint8_t>& data) {
    push_u32be(out, uint32_t(data.size()));
    const size_t start = out.size();
    out.insert(out.end(), type, type + 4);
    out.insert(out.end(), data.begin(), data.end());
    const uint32_t crc =
        uint32_t(crc32(0, out.data() + start, uInt(out.size() - start)));
    push_u32be(out, crc);
}

}  // namespace

std::vector<uint8_t> encode_png(const ChartImage& img) {
    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

    std::vector<uint8_t> ihdr;
    push_u32be(ihdr, uint32_t(img.width));
    push_u32be(ihdr, uint32_t(img.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor
    ihdr.push_back(0);
    ihdr.push_back(0);
    ihdr.push_back(0);
    push_chunk(out, "IHDR", ihdr);

    // filter byte 0 per scanline
    std::vector<uint8_t> raw;
    raw.reserve(size_t(img.height) * (1 + size_t(img.width) * 3));
    for (int y = 0; y < img.height; ++y) {
        raw.push_back(0);
        const uint8_t* row = img.pixels.data() + size_t(y) * img.width * 3;
        raw.insert(raw.end(), row, row + size_t(img.width) * 3);
    }
    uLongf zlen = compressBound(uLong(raw.size()));
    std::vector<uint8_t> zdata(zlen);
    if (compress2(zdata.data(), &zlen, raw.data(), uLong(raw.size()), 6) != Z_OK)
        fail("IoFailure", "deflate failed");
    zdata.resize(zlen);
    push_chunk(out, "IDAT", zdata);
    push_chunk(out, "IEND", {});
    return out;
}

void write_png(const ChartImage& img, const std::string& path) {
    write_file_bytes(path, encode_png(img));
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail("IoFailure", "cannot open for read: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return bytes;
}

void write_file_bytes(const std::string& path, const std::vector<uint8_t>& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail("IoFailure", "cannot open for write: " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              std::streamsize(bytes.size()));
    if (!out) fail("IoFailure", "short write: " + path);
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
    write_file_bytes(path,
                     std::vector<uint8_t>(bytes.begin(), bytes.end()));
}

}  // namespace chartagent
