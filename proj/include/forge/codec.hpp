#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "forge/raster.hpp"

namespace forge {

using Bytes = std::vector<std::uint8_t>;

Bytes read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames it into place.
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text(const std::filesystem::path& path, const std::string& text);

// ---- PFM --------------------------------------------------------------------
//
// Single-channel "Pf" files only. The writer always emits
// "Pf\n{w} {h}\n-1.0\n" followed by little-endian float32 rows, bottom row
// first; the reader accepts either byte order.

struct PfmDepth {
    DepthMap map;
    bool clamped = false;  // some sample was outside [0,1] and was clamped
};

FloatMap decode_pfm(std::span<const std::uint8_t> bytes);
Bytes encode_pfm(const FloatMap& map);

PfmDepth read_pfm(const std::filesystem::path& path);
void write_pfm(const DepthMap& map, const std::filesystem::path& path);
/// Unconstrained float maps (detail maps, combined control maps).
FloatMap read_pfm_map(const std::filesystem::path& path);
void write_pfm_map(const FloatMap& map, const std::filesystem::path& path);

// ---- PNG --------------------------------------------------------------------

/// Low-level encoder; `bit_depth` must be 8 or 16 and `channels` 1, 3 or 4.
/// 16-bit samples are taken big-endian from `samples` as PNG stores them.
Bytes encode_png_samples(std::uint32_t width, std::uint32_t height, std::uint32_t channels, int bit_depth,
                         std::span<const std::uint8_t> samples);

Bytes encode_png(const Image& image);
Image decode_png(std::span<const std::uint8_t> bytes);
Image read_png(const std::filesystem::path& path);
void write_png(const Image& image, const std::filesystem::path& path);

/// Depth quantized to 16-bit gray: sample = floor(v * 65535 + 0.5).
Bytes encode_depth_png16(const DepthMap& map);
DepthMap decode_depth_png16(std::span<const std::uint8_t> bytes);

/// Masks travel as 8-bit gray PNG (0 / 255); decoding thresholds at 128.
Bytes encode_mask_png(const Mask& mask);
Mask decode_mask_png(std::span<const std::uint8_t> bytes, MaskKind kind = MaskKind::segmentation);
Mask read_mask_png(const std::filesystem::path& path, MaskKind kind = MaskKind::segmentation);
void write_mask_png(const Mask& mask, const std::filesystem::path& path);

// ---- hashing / transport ------------------------------------------------------

std::string sha256_hex(std::span<const std::uint8_t> bytes);
std::string sha256_hex(const std::string& text);
std::string base64_encode(std::span<const std::uint8_t> bytes);
Bytes base64_decode(const std::string& text);

// ---- JSON -------------------------------------------------------------------

void to_json(nlohmann::json& j, const BBox& box);
void from_json(const nlohmann::json& j, BBox& box);
void to_json(nlohmann::json& j, const Location25D& loc);
void from_json(const nlohmann::json& j, Location25D& loc);

/// "x1,y1,x2,y2" as used on the command line.
BBox parse_bbox(const std::string& text);

}  // namespace forge
