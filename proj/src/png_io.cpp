#include "nanosr/png_io.hpp"

#include <zlib.h>

#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nanosr {

namespace {

const uint8_t kSignature[8] = {137, 80, 78, 71, 13, 10, 26, 10};

uint32_t be32(const uint8_t* p) {
    return (static_cast<uint32_t>(p[0]) << 24) | (static_cast<uint32_t>(p[1]) << 16) |
           (static_cast<uint32_t>(p[2]) << 8) | p[3];
}

void put_be32(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

std::vector<uint8_t> read_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path);
    return std::vector<uint8_t>((std::istreambuf_iterator<char>(f)),
                                std::istreambuf_iterator<char>());
}

int paeth(int a, int b, int c) {
    const int p = a + b - c;
    const int pa = std::abs(p - a), pb = std::abs(p - b), pc = std::abs(p - c);
    if (pa <= pb && pa <= pc) return a;
    if (pb <= pc) return b;
    return c;
}

struct Header {
    int w = 0, h = 0;
    int bit_depth = 0, color_type = 0, interlace = 0;
};

Header parse_header(const std::vector<uint8_t>& buf, const std::string& path) {
    if (buf.size() < 8 + 25 || std::memcmp(buf.data(), kSignature, 8) != 0)
        throw std::runtime_error(path + ": not a PNG file");
    const uint8_t* p = buf.data() + 8;
    if (be32(p) != 13 || std::memcmp(p + 4, "IHDR", 4) != 0)
        throw std::runtime_error(path + ": missing IHDR");
    Header h;
    h.w = static_cast<int>(be32(p + 8));
    h.h = static_cast<int>(be32(p + 12));
    h.bit_depth = p[16];
    h.color_type = p[17];
    h.interlace = p[20];
    return h;
}

}  // namespace

std::pair<int, int> png_dims(const std::string& path) {
    Header h = parse_header(read_file(path), path);
    return {h.h, h.w};
}

ImageU8 png_read(const std::string& path) {
    const std::vector<uint8_t> buf = read_file(path);
    const Header hdr = parse_header(buf, path);
    if (hdr.bit_depth != 8)
        throw std::runtime_error(path + ": only 8-bit PNGs are supported");
    if (hdr.color_type != 2)
        throw std::runtime_error(path + ": non-RGB PNG (color type " +
                                 std::to_string(hdr.color_type) + ")");
    if (hdr.interlace != 0) throw std::runtime_error(path + ": interlaced PNGs unsupported");
    if (hdr.w <= 0 || hdr.h <= 0) throw std::runtime_error(path + ": empty image");

    std::vector<uint8_t> idat;
    size_t pos = 8;
    bool done = false;
    while (pos + 12 <= buf.size() && !done) {
        const uint32_t len = be32(buf.data() + pos);
        if (pos + 12 + len > buf.size()) throw std::runtime_error(path + ": truncated chunk");
        const char* type = reinterpret_cast<const char*>(buf.data() + pos + 4);
        const uint8_t* data = buf.data() + pos + 8;
        const uint32_t stored_crc = be32(data + len);
        uint32_t crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, buf.data() + pos + 4, len + 4);
        if (crc != stored_crc) throw std::runtime_error(path + ": chunk CRC mismatch");
        if (std::memcmp(type, "IDAT", 4) == 0)
            idat.insert(idat.end(), data, data + len);
        else if (std::memcmp(type, "IEND", 4) == 0)
            done = true;
        pos += 12 + len;
    }
    if (idat.empty()) throw std::runtime_error(path + ": no image data");

    const int bpp = 3;
    const size_t stride = static_cast<size_t>(hdr.w) * bpp;
    const size_t raw_size = (stride + 1) * hdr.h;
    std::vector<uint8_t> raw(raw_size);
    z_stream zs{};
    if (inflateInit(&zs) != Z_OK) throw std::runtime_error("inflateInit failed");
    zs.next_in = idat.data();
    zs.avail_in = static_cast<uInt>(idat.size());
    zs.next_out = raw.data();
    zs.avail_out = static_cast<uInt>(raw.size());
    const int zret = inflate(&zs, Z_FINISH);
    const size_t produced = zs.total_out;
    inflateEnd(&zs);
    if (zret != Z_STREAM_END || produced != raw_size)
        throw std::runtime_error(path + ": corrupt image data");

    ImageU8 img;
    img.h = hdr.h;
    img.w = hdr.w;
    img.channels = 3;
    img.pix.resize(stride * hdr.h);
    std::vector<uint8_t> prev(stride, 0);
    for (int y = 0; y < hdr.h; ++y) {
        const uint8_t* src = raw.data() + static_cast<size_t>(y) * (stride + 1);
        const uint8_t filter = src[0];
        uint8_t* dst = img.pix.data() + static_cast<size_t>(y) * stride;
        for (size_t i = 0; i < stride; ++i) {
            const int x = src[1 + i];
            const int left = i >= static_cast<size_t>(bpp) ? dst[i - bpp] : 0;
            const int up = prev[i];
            const int upleft = i >= static_cast<size_t>(bpp) ? prev[i - bpp] : 0;
            int value;
            switch (filter) {
                case 0: value = x; break;
                case 1: value = x + left; break;
                case 2: value = x + up; break;
                case 3: value = x + (left + up) / 2; break;
                case 4: value = x + paeth(left, up, upleft); break;
                default: throw std::runtime_error(path + ": unknown PNG filter");
            }
            dst[i] = static_cast<uint8_t>(value & 0xff);
        }
        std::memcpy(prev.data(), dst, stride);
    }
    return img;
}

void png_write(const std::string& path, const ImageU8& img) {
    if (img.channels != 1 && img.channels != 3)
        throw std::invalid_argument("png_write: channels must be 1 or 3");
    if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("png_write: empty image");
    if (img.pix.size() != static_cast<size_t>(img.h) * img.w * img.channels)
        throw std::invalid_argument("png_write: pixel buffer size mismatch");

    const size_t stride = static_cast<size_t>(img.w) * img.channels;
    std::vector<uint8_t> raw((stride + 1) * img.h);
    for (int y = 0; y < img.h; ++y) {
        uint8_t* dst = raw.data() + static_cast<size_t>(y) * (stride + 1);
        dst[0] = 0;  // filter: none
        std::memcpy(dst + 1, img.pix.data() + static_cast<size_t>(y) * stride, stride);
    }
    uLongf comp_bound = compressBound(static_cast<uLong>(raw.size()));
    std::vector<uint8_t> comp(comp_bound);
    if (compress2(comp.data(), &comp_bound, raw.data(), static_cast<uLong>(raw.size()),
                  Z_DEFAULT_COMPRESSION) != Z_OK)
        throw std::runtime_error("png_write: compression failed");
    comp.resize(comp_bound);

    std::vector<uint8_t> out(kSignature, kSignature + 8);
    auto chunk = [&out](const char* type, const std::vector<uint8_t>& data) {
        put_be32(out, static_cast<uint32_t>(data.size()));
        const size_t type_pos = out.size();
        out.insert(out.end(), type, type + 4);
        out.insert(out.end(), data.begin(), data.end());
        uint32_t crc = crc32(0L, Z_NULL, 0);
        crc = crc32(crc, out.data() + type_pos, static_cast<uInt>(4 + data.size()));
        put_be32(out, crc);
    };

    std::vector<uint8_t> ihdr;
    put_be32(ihdr, static_cast<uint32_t>(img.w));
    put_be32(ihdr, static_cast<uint32_t>(img.h));
    ihdr.push_back(8);                                   // bit depth
    ihdr.push_back(img.channels == 3 ? 2 : 0);           // color type
    ihdr.push_back(0);                                   // compression
    ihdr.push_back(0);                                   // filter
    ihdr.push_back(0);                                   // interlace
    chunk("IHDR", ihdr);
    chunk("IDAT", comp);
    chunk("IEND", {});

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot write " + path);
    f.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
    if (!f) throw std::runtime_error("write failed for " + path);
}

}  // namespace nanosr
