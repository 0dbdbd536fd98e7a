#include "forge/codec.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>
#include <thread>

#include <openssl/evp.h>
#include <png.h>

namespace forge {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoFailure, "cannot open " + path.string());
    Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) fail(ErrorCode::IoFailure, "read failed: " + path.string());
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    // Unique per thread so concurrent writers of the same content-addressed
    // file never share a temporary.
    std::ostringstream tmp_name;
    tmp_name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id());
    const fs::path tmp = path.parent_path() / tmp_name.str();
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorCode::IoFailure, "cannot create " + tmp.string());
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!out) fail(ErrorCode::IoFailure, "write failed: " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) fail(ErrorCode::IoFailure, "cannot rename into " + path.string() + ": " + ec.message());
}

void write_text(const fs::path& path, const std::string& text) {
    write_file(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

// ---- PFM --------------------------------------------------------------------

namespace {

class HeaderReader {
public:
    explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::string token() {
        while (pos_ < bytes_.size() && std::isspace(bytes_[pos_])) ++pos_;
        std::string out;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) out.push_back(static_cast<char>(bytes_[pos_++]));
        if (out.empty()) fail(ErrorCode::MalformedHeader, "truncated PFM header");
        return out;
    }

    // Exactly one whitespace byte separates the header from the samples.
    std::size_t data_offset() {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            fail(ErrorCode::MalformedHeader, "missing separator after PFM scale");
        }
        return pos_ + 1;
    }

private:
    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

template <typename T>
T parse_number(const std::string& text, const char* what) {
    T value{};
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        fail(ErrorCode::MalformedHeader, std::string("bad PFM ") + what + ": '" + text + "'");
    }
    return value;
}

}  // namespace

FloatMap decode_pfm(std::span<const std::uint8_t> bytes) {
    HeaderReader header(bytes);
    const std::string magic = header.token();
    if (magic != "Pf") fail(ErrorCode::MalformedHeader, "expected single-channel 'Pf' magic, got '" + magic + "'");
    const auto width = parse_number<std::uint64_t>(header.token(), "width");
    const auto height = parse_number<std::uint64_t>(header.token(), "height");
    const auto scale = parse_number<double>(header.token(), "scale");
    if (width == 0 || height == 0) fail(ErrorCode::MalformedHeader, "PFM dimensions must be positive");
    if (scale == 0.0 || !std::isfinite(scale)) fail(ErrorCode::MalformedHeader, "PFM scale must be non-zero");
    if (width > kMaxRasterSide || height > kMaxRasterSide || width * height > kMaxRasterSamples) {
        fail(ErrorCode::DimensionOverflow, "PFM dimensions too large");
    }
    const std::size_t offset = header.data_offset();
    const std::size_t count = width * height;
    if (bytes.size() - offset < count * 4) fail(ErrorCode::DimensionOverflow, "PFM payload shorter than header claims");

    const bool little = scale < 0.0;
    const bool swap = little != (std::endian::native == std::endian::little);
    std::vector<float> data(count);
    for (std::uint64_t row = 0; row < height; ++row) {
        const std::uint64_t y = height - 1 - row;
        for (std::uint64_t x = 0; x < width; ++x) {
            std::uint32_t word;
            std::memcpy(&word, bytes.data() + offset + (row * width + x) * 4, 4);
            if (swap) word = __builtin_bswap32(word);
            const float v = std::bit_cast<float>(word);
            if (!std::isfinite(v)) fail(ErrorCode::NonFiniteSample, "PFM contains NaN or Inf");
            data[y * width + x] = v;
        }
    }
    return FloatMap(static_cast<std::uint32_t>(width), static_cast<std::uint32_t>(height), 1, std::move(data));
}

Bytes encode_pfm(const FloatMap& map) {
    if (map.empty()) fail(ErrorCode::InvalidArgument, "cannot encode an empty map");
    if (map.channels() != 1) fail(ErrorCode::InvalidArgument, "PFM writer handles single-channel maps only");
    map.check_finite();
    const std::string header = "Pf\n" + std::to_string(map.width()) + " " + std::to_string(map.height()) + "\n-1.0\n";
    Bytes out(header.begin(), header.end());
    out.reserve(header.size() + map.sample_count() * 4);
    for (std::uint32_t row = 0; row < map.height(); ++row) {
        const std::uint32_t y = map.height() - 1 - row;
        for (std::uint32_t x = 0; x < map.width(); ++x) {
            std::uint32_t word = std::bit_cast<std::uint32_t>(map.at(x, y));
            if constexpr (std::endian::native == std::endian::big) word = __builtin_bswap32(word);
            for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(word >> (8 * b)));
        }
    }
    return out;
}

PfmDepth read_pfm(const fs::path& path) {
    PfmDepth result;
    result.map = DepthMap::clamped(decode_pfm(read_file(path)), &result.clamped);
    return result;
}

void write_pfm(const DepthMap& map, const fs::path& path) { write_file(path, encode_pfm(map.raster())); }

FloatMap read_pfm_map(const fs::path& path) { return decode_pfm(read_file(path)); }

void write_pfm_map(const FloatMap& map, const fs::path& path) { write_file(path, encode_pfm(map)); }

// ---- PNG --------------------------------------------------------------------

namespace {

struct PngReadCursor {
    std::span<const std::uint8_t> bytes;
    std::size_t pos = 0;
};

void png_error_fn(png_structp png, png_const_charp message) {
    auto* msg = static_cast<std::string*>(png_get_error_ptr(png));
    if (msg != nullptr) *msg = message;
    png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

void png_read_fn(png_structp png, png_bytep out, png_size_t length) {
    auto* cursor = static_cast<PngReadCursor*>(png_get_io_ptr(png));
    if (cursor->bytes.size() - cursor->pos < length) png_error(png, "truncated PNG stream");
    std::memcpy(out, cursor->bytes.data() + cursor->pos, length);
    cursor->pos += length;
}

void png_write_fn(png_structp png, png_bytep data, png_size_t length) {
    auto* out = static_cast<Bytes*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

void png_flush_fn(png_structp) {}

struct DecodedPng {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::uint32_t channels = 0;
    int bit_depth = 0;
    Bytes samples;  // 16-bit samples stay big-endian
};

DecodedPng decode_png_raw(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 8 || png_sig_cmp(bytes.data(), 0, 8) != 0) fail(ErrorCode::MalformedHeader, "not a PNG stream");
    std::string message;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
    if (png == nullptr) fail(ErrorCode::IoFailure, "png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    PngReadCursor cursor{bytes, 0};
    DecodedPng out;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::MalformedHeader, "PNG decode failed: " + message);
    }
    png_set_read_fn(png, &cursor, png_read_fn);
    png_read_info(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (color == PNG_COLOR_TYPE_GRAY_ALPHA) png_set_gray_to_rgb(png);
    png_read_update_info(png, info);
    out.width = png_get_image_width(png, info);
    out.height = png_get_image_height(png, info);
    out.channels = png_get_channels(png, info);
    out.bit_depth = png_get_bit_depth(png, info);
    if (out.width > kMaxRasterSide || out.height > kMaxRasterSide) {
        png_destroy_read_struct(&png, &info, nullptr);
        fail(ErrorCode::DimensionOverflow, "PNG dimensions too large");
    }
    const std::size_t stride = png_get_rowbytes(png, info);
    out.samples.resize(stride * out.height);
    rows.resize(out.height);
    for (std::uint32_t y = 0; y < out.height; ++y) rows[y] = out.samples.data() + y * stride;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return out;
}

}  // namespace

Bytes encode_png_samples(std::uint32_t width, std::uint32_t height, std::uint32_t channels, int bit_depth,
                         std::span<const std::uint8_t> samples) {
    if (bit_depth != 8 && bit_depth != 16) {
        fail(ErrorCode::UnsupportedBitDepth, "PNG bit depth " + std::to_string(bit_depth) + " not supported");
    }
    int color;
    switch (channels) {
        case 1: color = PNG_COLOR_TYPE_GRAY; break;
        case 3: color = PNG_COLOR_TYPE_RGB; break;
        case 4: color = PNG_COLOR_TYPE_RGBA; break;
        default: fail(ErrorCode::InvalidArgument, "PNG channels must be 1, 3 or 4");
    }
    const std::size_t stride = std::size_t{width} * channels * (bit_depth / 8);
    if (samples.size() != stride * height) fail(ErrorCode::DimensionMismatch, "PNG sample buffer size mismatch");

    std::string message;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &message, png_error_fn, png_warning_fn);
    if (png == nullptr) fail(ErrorCode::IoFailure, "png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    Bytes out;
    std::vector<png_bytep> rows(height);
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        fail(ErrorCode::IoFailure, "PNG encode failed: " + message);
    }
    png_set_write_fn(png, &out, png_write_fn, png_flush_fn);
    png_set_IHDR(png, info, width, height, bit_depth, color, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (std::uint32_t y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(samples.data() + y * stride);
    png_write_image(png, rows.data());
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    return out;
}

Bytes encode_png(const Image& image) {
    if (image.empty()) fail(ErrorCode::InvalidArgument, "cannot encode an empty image");
    return encode_png_samples(image.width(), image.height(), image.channels(), 8, image.samples());
}

Image decode_png(std::span<const std::uint8_t> bytes) {
    DecodedPng raw = decode_png_raw(bytes);
    if (raw.bit_depth != 8) {
        fail(ErrorCode::UnsupportedBitDepth, "expected an 8-bit PNG, got " + std::to_string(raw.bit_depth) + "-bit");
    }
    return Image(raw.width, raw.height, raw.channels, std::move(raw.samples));
}

Image read_png(const fs::path& path) { return decode_png(read_file(path)); }

void write_png(const Image& image, const fs::path& path) { write_file(path, encode_png(image)); }

Bytes encode_depth_png16(const DepthMap& map) {
    const FloatMap& r = map.raster();
    Bytes samples(r.sample_count() * 2);
    for (std::size_t i = 0; i < r.sample_count(); ++i) {
        const auto q = static_cast<std::uint16_t>(std::floor(static_cast<double>(r.samples()[i]) * 65535.0 + 0.5));
        samples[2 * i] = static_cast<std::uint8_t>(q >> 8);
        samples[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
    }
    return encode_png_samples(r.width(), r.height(), 1, 16, samples);
}

DepthMap decode_depth_png16(std::span<const std::uint8_t> bytes) {
    DecodedPng raw = decode_png_raw(bytes);
    if (raw.bit_depth != 16 || raw.channels != 1) {
        fail(ErrorCode::UnsupportedBitDepth, "depth PNG must be 16-bit single-channel");
    }
    std::vector<float> data(std::size_t{raw.width} * raw.height);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const unsigned q = (unsigned{raw.samples[2 * i]} << 8) | raw.samples[2 * i + 1];
        data[i] = static_cast<float>(q / 65535.0);
    }
    return DepthMap(FloatMap(raw.width, raw.height, 1, std::move(data)));
}

Bytes encode_mask_png(const Mask& mask) {
    Image img(mask.width(), mask.height(), 1);
    for (std::uint32_t y = 0; y < mask.height(); ++y) {
        for (std::uint32_t x = 0; x < mask.width(); ++x) img.at(x, y) = mask.on(x, y) ? 255 : 0;
    }
    return encode_png(img);
}

Mask decode_mask_png(std::span<const std::uint8_t> bytes, MaskKind kind) {
    const Image img = decode_png(bytes);
    Mask mask(img.width(), img.height(), kind);
    // Multi-channel masks are read from their first channel.
    for (std::uint32_t y = 0; y < img.height(); ++y) {
        for (std::uint32_t x = 0; x < img.width(); ++x) mask.set(x, y, img.at(x, y, 0) >= 128);
    }
    return mask;
}

Mask read_mask_png(const fs::path& path, MaskKind kind) { return decode_mask_png(read_file(path), kind); }

void write_mask_png(const Mask& mask, const fs::path& path) { write_file(path, encode_mask_png(mask)); }

// ---- hashing / transport ------------------------------------------------------

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        fail(ErrorCode::IoFailure, "sha256 failed");
    }
    static constexpr char kHex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned i = 0; i < len; ++i) {
        out.push_back(kHex[digest[i] >> 4]);
        out.push_back(kHex[digest[i] & 0xf]);
    }
    return out;
}

std::string sha256_hex(const std::string& text) {
    return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
    std::string out(4 * ((bytes.size() + 2) / 3), '\0');
    const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                  static_cast<int>(bytes.size()));
    out.resize(static_cast<std::size_t>(n));
    return out;
}

Bytes base64_decode(const std::string& text) {
    if (text.size() % 4 != 0) fail(ErrorCode::MalformedResponse, "base64 length not a multiple of 4");
    Bytes out(3 * text.size() / 4);
    const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                  static_cast<int>(text.size()));
    if (n < 0) fail(ErrorCode::MalformedResponse, "invalid base64 payload");
    std::size_t padding = 0;
    if (!text.empty() && text.back() == '=') ++padding;
    if (text.size() > 1 && text[text.size() - 2] == '=') ++padding;
    out.resize(static_cast<std::size_t>(n) - padding);
    return out;
}

// ---- JSON -------------------------------------------------------------------

void to_json(nlohmann::json& j, const BBox& box) { j = nlohmann::json::array({box.x1, box.y1, box.x2, box.y2}); }

void from_json(const nlohmann::json& j, BBox& box) {
    if (!j.is_array() || j.size() != 4) fail(ErrorCode::SchemaViolation, "bbox must be an array of 4 numbers");
    for (const auto& v : j) {
        if (!v.is_number()) fail(ErrorCode::SchemaViolation, "bbox entries must be numbers");
    }
    box = BBox::make(j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>());
}

void to_json(nlohmann::json& j, const Location25D& loc) { j = nlohmann::json{{"bbox", loc.bbox}, {"depth", loc.depth}}; }

void from_json(const nlohmann::json& j, Location25D& loc) {
    if (!j.is_object() || !j.contains("bbox") || !j.contains("depth") || !j["depth"].is_number()) {
        fail(ErrorCode::SchemaViolation, "location must be {\"bbox\":[...], \"depth\":d}");
    }
    loc = Location25D::make(j["bbox"].get<BBox>(), j["depth"].get<double>());
}

BBox parse_bbox(const std::string& text) {
    double v[4];
    std::size_t start = 0;
    for (int i = 0; i < 4; ++i) {
        const std::size_t end = i < 3 ? text.find(',', start) : text.size();
        if (end == std::string::npos) fail(ErrorCode::InvalidArgument, "bbox must be x1,y1,x2,y2: '" + text + "'");
        const std::string part = text.substr(start, end - start);
        const auto [ptr, ec] = std::from_chars(part.data(), part.data() + part.size(), v[i]);
        if (ec != std::errc{} || ptr != part.data() + part.size()) {
            fail(ErrorCode::InvalidArgument, "bad bbox number '" + part + "'");
        }
        start = end + 1;
    }
    return BBox::make(v[0], v[1], v[2], v[3]);
}

}  // namespace forge
