#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "shadowup/error.hpp"
#include "shadowup/image.hpp"

namespace shadowup {

// 8-bit code for a normalized sample: round(v * 255) clamped to [0,255].
inline std::uint8_t quantize(double v) {
  return static_cast<std::uint8_t>(std::lround(clamp01(v) * 255.0));
}

namespace detail {

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path, std::strerror(errno));
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError(path, "read failed");
  return bytes;
}

inline void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path, std::strerror(errno));
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError(path, "write failed");
}

inline std::string lower_extension(const std::string& path) {
  auto ext = std::filesystem::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext;
}

// Reads one whitespace-delimited header token of a netpbm file, skipping comments.
inline std::string pnm_token(const std::string& bytes, std::size_t& pos, const std::string& path) {
  while (pos < bytes.size()) {
    const auto c = static_cast<unsigned char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  if (start == pos) throw IoError(path, "truncated PPM header");
  return bytes.substr(start, pos - start);
}

inline std::size_t pnm_number(const std::string& bytes, std::size_t& pos, const std::string& path) {
  const auto tok = pnm_token(bytes, pos, path);
  if (!std::all_of(tok.begin(), tok.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw IoError(path, "malformed PPM header field '" + tok + "'");
  return std::stoul(tok);
}

inline PlanarImage decode_ppm(const std::string& bytes, const std::string& path) {
  std::size_t pos = 2;
  const auto width = pnm_number(bytes, pos, path);
  const auto height = pnm_number(bytes, pos, path);
  const auto maxval = pnm_number(bytes, pos, path);
  if (maxval != 255) throw IoError(path, "unsupported PPM maxval " + std::to_string(maxval) + " (need 255)");
  if (width == 0 || height == 0) throw IoError(path, "empty PPM image");
  ++pos;  // single whitespace byte before the raster
  const std::size_t need = width * height * 3;
  if (pos > bytes.size() || bytes.size() - pos < need) throw IoError(path, "truncated PPM raster");

  PlanarImage img(width, height, ColorSpace::RGB);
  const auto* raster = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (std::size_t i = 0; i < width * height; ++i)
    for (std::size_t c = 0; c < 3; ++c) img.plane(c)[i] = raster[3 * i + c] / 255.0;
  return img;
}

inline PlanarImage decode_png(const std::string& bytes, const std::string& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw IoError(path, std::string("PNG: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string msg = image.message;
    png_image_free(&image);
    throw IoError(path, "PNG: " + msg);
  }

  PlanarImage img(image.width, image.height, ColorSpace::RGB);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (std::size_t c = 0; c < 3; ++c) img.plane(c)[i] = buffer[3 * i + c] / 255.0;
  return img;
}

inline std::vector<png_byte> interleave_rgb(const PlanarImage& img) {
  std::vector<png_byte> buffer(img.pixel_count() * 3);
  for (std::size_t i = 0; i < img.pixel_count(); ++i)
    for (std::size_t c = 0; c < 3; ++c) buffer[3 * i + c] = quantize(img.plane(c)[i]);
  return buffer;
}

}  // namespace detail

// Binary P6 bytes for an RGB image.
inline std::string encode_ppm(const PlanarImage& img) {
  require_space(img, ColorSpace::RGB, "encode_ppm");
  std::string out = "P6\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  const auto raster = detail::interleave_rgb(img);
  out.append(raster.begin(), raster.end());
  return out;
}

// Binary P5 bytes for a GRAY image.
inline std::string encode_pgm(const PlanarImage& img) {
  require_space(img, ColorSpace::GRAY, "encode_pgm");
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) + "\n255\n";
  for (double v : img.plane(0)) out.push_back(static_cast<char>(quantize(v)));
  return out;
}

inline std::string encode_png(const PlanarImage& img) {
  require_space(img, ColorSpace::RGB, "encode_png");
  auto raster = detail::interleave_rgb(img);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, raster.data(), 0, nullptr))
    throw InvalidInput(std::string("PNG encode: ") + image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, raster.data(), 0, nullptr))
    throw InvalidInput(std::string("PNG encode: ") + image.message);
  out.resize(size);
  return out;
}

// Loads an 8-bit PNG or binary PPM (P6) file as RGB in [0,1]; the format is
// detected from the file's magic bytes.
inline PlanarImage load_image(const std::string& path) {
  const auto bytes = detail::read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '6') return detail::decode_ppm(bytes, path);
  if (bytes.size() >= 8 && png_sig_cmp(reinterpret_cast<png_const_bytep>(bytes.data()), 0, 8) == 0)
    return detail::decode_png(bytes, path);
  if (bytes.empty()) throw IoError(path, "empty file");
  throw IoError(path, "unsupported format (expected PNG or binary PPM)");
}

// Saves by extension: .png writes PNG, .ppm/.pnm writes P6, .pgm writes P5 (GRAY only).
inline void save_image(const PlanarImage& img, const std::string& path) {
  const auto ext = detail::lower_extension(path);
  std::string bytes;
  if (ext == ".png") {
    bytes = encode_png(img);
  } else if (ext == ".ppm" || ext == ".pnm") {
    bytes = encode_ppm(img);
  } else if (ext == ".pgm") {
    bytes = encode_pgm(img);
  } else {
    throw IoError(path, "unsupported output extension '" + ext + "' (use .png, .ppm or .pgm)");
  }
  detail::write_file(path, bytes);
}

}  // namespace shadowup
