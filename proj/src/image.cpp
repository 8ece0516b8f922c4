#include "nucleo/image.hpp"

#include <png.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <memory>

namespace nucleo {

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    double y = 0.299 * r + 0.587 * g + 0.114 * b;
    long v = std::lround(y);
    if (v < 0) v = 0;
    if (v > 255) v = 255;
    return static_cast<std::uint8_t>(v);
}

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw UnreadableFile(path);
    return f;
}

// ---------------------------------------------------------------- PNG read

struct PngReader {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngReader() {
        if (png) png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    }
};

// Reads any PNG into 8-bit rows, either grayscale (channels==1) or RGB.
void read_png_rows(const std::string& path, int& w, int& h, int& channels,
                   int& bit_depth, std::vector<std::uint8_t>& out) {
    FilePtr f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw UnsupportedFormat(path + " (bad PNG signature)");

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw ImageError("libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw ImageError("libpng init failed");
    if (setjmp(png_jmpbuf(r.png))) throw UnreadableFile(path + " (corrupt PNG)");

    png_init_io(r.png, f.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    w = static_cast<int>(png_get_image_width(r.png, r.info));
    h = static_cast<int>(png_get_image_height(r.png, r.info));
    bit_depth = png_get_bit_depth(r.png, r.info);
    int color = png_get_color_type(r.png, r.info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(r.png);
    if (color == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
        png_set_expand_gray_1_2_4_to_8(r.png);
    if (png_get_valid(r.png, r.info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(r.png);
    png_set_strip_alpha(r.png);
    if (bit_depth == 16) {
        // keep 16-bit only for load_png16; 8-bit consumers get the high byte
        png_set_strip_16(r.png);
    }
    png_read_update_info(r.png, r.info);

    channels = png_get_channels(r.png, r.info);
    std::size_t rowbytes = png_get_rowbytes(r.png, r.info);
    out.assign(rowbytes * h, 0);
    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y) rows[y] = out.data() + rowbytes * y;
    png_read_image(r.png, rows.data());
    png_read_end(r.png, nullptr);
}

GrayImage decode_png(const std::string& path) {
    int w, h, channels, depth;
    std::vector<std::uint8_t> rows;
    read_png_rows(path, w, h, channels, depth, rows);
    GrayImage img(w, h);
    if (channels == 1) {
        std::memcpy(img.pixels().data(), rows.data(),
                    static_cast<std::size_t>(w) * h);
    } else if (channels == 3) {
        const std::uint8_t* p = rows.data();
        for (std::size_t i = 0; i < static_cast<std::size_t>(w) * h; ++i, p += 3)
            img.pixels()[i] = luminance(p[0], p[1], p[2]);
    } else {
        throw UnsupportedFormat(path + " (unexpected channel count)");
    }
    return img;
}

// ---------------------------------------------------------------- PNG write

struct PngWriter {
    png_structp png = nullptr;
    png_infop info = nullptr;
    ~PngWriter() {
        if (png) png_destroy_write_struct(&png, info ? &info : nullptr);
    }
};

void write_png_impl(const std::string& path, int w, int h, int color_type,
                    int bit_depth, const std::uint8_t* data, std::size_t rowbytes) {
    const std::string tmp = path + ".tmp";
    {
    FilePtr f = open_file(tmp, "wb");
    PngWriter wr;
    wr.png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!wr.png) throw ImageError("libpng init failed");
    wr.info = png_create_info_struct(wr.png);
    if (!wr.info) throw ImageError("libpng init failed");
    if (setjmp(png_jmpbuf(wr.png))) throw ImageError("PNG write failed: " + path);

    png_init_io(wr.png, f.get());
    png_set_IHDR(wr.png, wr.info, w, h, bit_depth, color_type,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    // no time chunk: artifact bytes must be stable across reruns
    png_write_info(wr.png, wr.info);
    if (bit_depth == 16) png_set_swap(wr.png);  // memory is little-endian

    std::vector<png_bytep> rows(h);
    for (int y = 0; y < h; ++y)
        rows[y] = const_cast<png_bytep>(data + rowbytes * y);
    png_write_image(wr.png, rows.data());
    png_write_end(wr.png, nullptr);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ImageError("rename failed: " + path + " (" + ec.message() + ")");
}

// ---------------------------------------------------------------- BMP read

std::uint32_t le32(const std::uint8_t* p) {
    return p[0] | (p[1] << 8) | (p[2] << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t le16(const std::uint8_t* p) { return p[0] | (p[1] << 8); }

GrayImage decode_bmp(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 54) throw UnsupportedFormat(path + " (truncated BMP)");
    std::uint32_t data_offset = le32(&bytes[10]);
    std::uint32_t header_size = le32(&bytes[14]);
    if (header_size < 40) throw UnsupportedFormat(path + " (BMP core header)");
    std::int32_t w = static_cast<std::int32_t>(le32(&bytes[18]));
    std::int32_t h = static_cast<std::int32_t>(le32(&bytes[22]));
    std::uint16_t bpp = le16(&bytes[28]);
    std::uint32_t compression = le32(&bytes[30]);
    if (compression != 0)
        throw UnsupportedFormat(path + " (compressed BMP)");
    bool top_down = h < 0;
    std::int32_t height = top_down ? -h : h;
    if (w < 1 || height < 1) throw UnsupportedFormat(path + " (BMP dimensions)");

    GrayImage img(w, height);
    std::size_t row_stride = ((static_cast<std::size_t>(w) * bpp + 31) / 32) * 4;

    const std::uint8_t* palette = nullptr;
    if (bpp == 8) palette = bytes.data() + 14 + header_size;

    for (int y = 0; y < height; ++y) {
        int src_y = top_down ? y : height - 1 - y;
        std::size_t row_off = data_offset + row_stride * src_y;
        if (row_off + row_stride > bytes.size())
            throw UnreadableFile(path + " (truncated BMP data)");
        const std::uint8_t* row = bytes.data() + row_off;
        for (int x = 0; x < w; ++x) {
            std::uint8_t v;
            if (bpp == 24 || bpp == 32) {
                const std::uint8_t* px = row + x * (bpp / 8);
                v = luminance(px[2], px[1], px[0]);  // BGR order
            } else if (bpp == 8) {
                const std::uint8_t* entry = palette + 4 * row[x];
                v = luminance(entry[2], entry[1], entry[0]);
            } else {
                throw UnsupportedFormat(path + " (BMP bpp)");
            }
            img.at(x, y) = v;
        }
    }
    return img;
}

// ---------------------------------------------------------------- PNM read

struct PnmParser {
    const std::vector<std::uint8_t>& b;
    std::size_t pos = 0;

    void skip_space() {
        while (pos < b.size()) {
            if (b[pos] == '#') {
                while (pos < b.size() && b[pos] != '\n') ++pos;
            } else if (std::isspace(b[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    }
    long next_int() {
        skip_space();
        long v = 0;
        bool any = false;
        while (pos < b.size() && std::isdigit(b[pos])) {
            v = v * 10 + (b[pos] - '0');
            ++pos;
            any = true;
        }
        if (!any) throw UnsupportedFormat("malformed PNM header");
        return v;
    }
};

GrayImage decode_pnm(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < 2) throw UnsupportedFormat(path);
    char kind = static_cast<char>(bytes[1]);
    PnmParser p{bytes, 2};
    long w = p.next_int();
    long h = p.next_int();
    long maxval = p.next_int();
    if (w < 1 || h < 1) throw UnsupportedFormat(path + " (PNM dimensions)");
    if (maxval < 1 || maxval > 255)
        throw UnsupportedFormat(path + " (only 8-bit PNM supported)");

    GrayImage img(static_cast<int>(w), static_cast<int>(h));
    std::size_t n = static_cast<std::size_t>(w) * h;

    if (kind == '5' || kind == '6') {
        ++p.pos;  // single whitespace after maxval
        std::size_t ch = (kind == '6') ? 3 : 1;
        if (p.pos + n * ch > bytes.size()) throw UnreadableFile(path + " (truncated PNM)");
        const std::uint8_t* d = bytes.data() + p.pos;
        for (std::size_t i = 0; i < n; ++i) {
            img.pixels()[i] = (kind == '6') ? luminance(d[3 * i], d[3 * i + 1], d[3 * i + 2])
                                            : d[i];
        }
    } else if (kind == '2' || kind == '3') {
        std::size_t ch = (kind == '3') ? 3 : 1;
        for (std::size_t i = 0; i < n; ++i) {
            if (ch == 1) {
                img.pixels()[i] = static_cast<std::uint8_t>(p.next_int());
            } else {
                long r = p.next_int(), g = p.next_int(), b2 = p.next_int();
                img.pixels()[i] = luminance(static_cast<std::uint8_t>(r),
                                            static_cast<std::uint8_t>(g),
                                            static_cast<std::uint8_t>(b2));
            }
        }
    } else {
        throw UnsupportedFormat(path + " (PNM kind P" + std::string(1, kind) + ")");
    }
    return img;
}

std::vector<std::uint8_t> read_all(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw UnreadableFile(path);
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(f),
                                     std::istreambuf_iterator<char>());
}

}  // namespace

GrayImage load_frame(const std::string& path) {
    std::vector<std::uint8_t> bytes = read_all(path);
    if (bytes.size() >= 8 && bytes[0] == 0x89 && bytes[1] == 'P' && bytes[2] == 'N' &&
        bytes[3] == 'G')
        return decode_png(path);
    if (bytes.size() >= 2 && bytes[0] == 'B' && bytes[1] == 'M')
        return decode_bmp(path, bytes);
    if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] >= '2' && bytes[1] <= '6')
        return decode_pnm(path, bytes);
    throw UnsupportedFormat(path);
}

void save_png(const std::string& path, const GrayImage& img) {
    write_png_impl(path, img.width(), img.height(), PNG_COLOR_TYPE_GRAY, 8,
                   img.pixels().data(), img.width());
}

void save_png(const std::string& path, const Gray16Image& img) {
    write_png_impl(path, img.width, img.height, PNG_COLOR_TYPE_GRAY, 16,
                   reinterpret_cast<const std::uint8_t*>(img.pixels.data()),
                   static_cast<std::size_t>(img.width) * 2);
}

void save_png(const std::string& path, const RgbImage& img) {
    write_png_impl(path, img.width(), img.height(), PNG_COLOR_TYPE_RGB, 8,
                   img.data().data(), static_cast<std::size_t>(img.width()) * 3);
}

Gray16Image load_png16(const std::string& path) {
    FilePtr f = open_file(path, "rb");
    unsigned char sig[8];
    if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8))
        throw UnsupportedFormat(path + " (bad PNG signature)");

    PngReader r;
    r.png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    if (!r.png) throw ImageError("libpng init failed");
    r.info = png_create_info_struct(r.png);
    if (!r.info) throw ImageError("libpng init failed");
    if (setjmp(png_jmpbuf(r.png))) throw UnreadableFile(path + " (corrupt PNG)");

    png_init_io(r.png, f.get());
    png_set_sig_bytes(r.png, 8);
    png_read_info(r.png, r.info);

    int w = static_cast<int>(png_get_image_width(r.png, r.info));
    int h = static_cast<int>(png_get_image_height(r.png, r.info));
    int depth = png_get_bit_depth(r.png, r.info);
    int color = png_get_color_type(r.png, r.info);
    if (color != PNG_COLOR_TYPE_GRAY)
        throw UnsupportedFormat(path + " (expected grayscale PNG)");
    if (depth < 16) png_set_expand_gray_1_2_4_to_8(r.png);
    png_set_swap(r.png);
    png_read_update_info(r.png, r.info);

    Gray16Image img;
    img.width = w;
    img.height = h;
    img.pixels.assign(static_cast<std::size_t>(w) * h, 0);

    if (depth == 16) {
        std::vector<png_bytep> rows(h);
        for (int y = 0; y < h; ++y)
            rows[y] = reinterpret_cast<png_bytep>(img.pixels.data() +
                                                  static_cast<std::size_t>(y) * w);
        png_read_image(r.png, rows.data());
    } else {
        std::vector<std::uint8_t> row8(w);
        std::vector<png_bytep> rows(h);
        std::vector<std::uint8_t> all(static_cast<std::size_t>(w) * h);
        for (int y = 0; y < h; ++y) rows[y] = all.data() + static_cast<std::size_t>(y) * w;
        png_read_image(r.png, rows.data());
        for (std::size_t i = 0; i < all.size(); ++i) img.pixels[i] = all[i];
    }
    png_read_end(r.png, nullptr);
    return img;
}

void save_pgm(const std::string& path, const GrayImage& img) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw UnreadableFile(tmp);
        f << "P5\n" << img.width() << " " << img.height() << "\n255\n";
        f.write(reinterpret_cast<const char*>(img.pixels().data()),
                static_cast<std::streamsize>(img.pixels().size()));
        if (!f) throw ImageError("PGM write failed: " + tmp);
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw ImageError("rename failed: " + path + " (" + ec.message() + ")");
}

void save_mask_png(const std::string& path, const BinaryMask& mask) {
    GrayImage img(mask.width(), mask.height());
    for (std::size_t i = 0; i < mask.bits().size(); ++i)
        img.pixels()[i] = mask.bits()[i] ? 255 : 0;
    save_png(path, img);
}

BinaryMask load_mask(const std::string& path) {
    GrayImage img = load_frame(path);
    BinaryMask mask(img.width(), img.height());
    for (std::size_t i = 0; i < img.pixels().size(); ++i)
        mask.bits()[i] = img.pixels()[i] ? 1 : 0;
    return mask;
}

}  // namespace nucleo
