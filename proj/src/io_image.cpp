#include <png.h>

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "vsglight/io.h"

namespace vsg {

namespace {

constexpr double kGamma = 2.2;

bool host_is_little_endian() {
  const uint16_t probe = 1;
  return *reinterpret_cast<const uint8_t*>(&probe) == 1;
}

void swap_f32(std::vector<float>& v) {
  for (float& f : v) {
    uint32_t u;
    std::memcpy(&u, &f, 4);
    u = (u >> 24) | ((u >> 8) & 0xff00u) | ((u << 8) & 0xff0000u) | (u << 24);
    std::memcpy(&f, &u, 4);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// PFM
// ---------------------------------------------------------------------------

Image read_pfm(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot open " + path);

  std::string magic;
  int w = 0, h = 0;
  double scale = 0.0;
  f >> magic >> w >> h >> scale;
  if (!f || (magic != "PF" && magic != "Pf"))
    throw ValidationError(path + ": not a PFM file (expected PF or Pf header)");
  if (w < 1 || h < 1)
    throw ValidationError(path + ": bad PFM dimensions " + std::to_string(w) + "x" +
                          std::to_string(h));
  if (scale == 0.0) throw ValidationError(path + ": PFM scale must be nonzero");
  f.get();  // single whitespace terminating the header

  const int channels = magic == "PF" ? 3 : 1;
  Image img = Image::zeros(w, h, channels);
  std::vector<float> row(size_t(w) * channels);
  const bool file_le = scale < 0.0;
  for (int y = h - 1; y >= 0; --y) {  // PFM rows are bottom-up
    f.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * 4));
    if (!f)
      throw ValidationError(path + ": truncated PFM pixel data at row " + std::to_string(y));
    if (file_le != host_is_little_endian()) swap_f32(row);
    for (size_t i = 0; i < row.size(); ++i)
      img.data[img.offset(0, y) + int64_t(i)] = double(row[i]);
  }
  return img;
}

void write_pfm(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ValidationError("PFM supports 1 or 3 channels, got " + std::to_string(img.channels));
  if (img.width < 1 || img.height < 1) throw ValidationError("cannot write an empty PFM");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot write " + path);

  f << (img.channels == 3 ? "PF" : "Pf") << "\n" << img.width << " " << img.height << "\n"
    << "-1.0" << "\n";
  std::vector<float> row(size_t(img.width) * img.channels);
  for (int y = img.height - 1; y >= 0; --y) {
    for (size_t i = 0; i < row.size(); ++i)
      row[i] = float(img.data[img.offset(0, y) + int64_t(i)]);
    if (!host_is_little_endian()) swap_f32(row);
    f.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size() * 4));
  }
  if (!f) throw ValidationError("failed writing " + path);
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

Image read_png(const std::string& path) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) throw ValidationError("cannot open " + path);

  unsigned char sig[8];
  if (std::fread(sig, 1, 8, fp) != 8 || png_sig_cmp(sig, 0, 8)) {
    std::fclose(fp);
    throw ValidationError(path + ": not a PNG file");
  }

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ValidationError("libpng initialization failed");
  }
  std::vector<std::vector<png_byte>> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ValidationError(path + ": PNG decode failed");
  }
  png_init_io(png, fp);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte color_type = png_get_color_type(png, info);
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const int w = int(png_get_image_width(png, info));
  const int h = int(png_get_image_height(png, info));
  const int channels = int(png_get_channels(png, info));
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw ValidationError(path + ": unsupported PNG channel count " + std::to_string(channels));
  }

  rows.assign(size_t(h), std::vector<png_byte>(size_t(w) * channels));
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(h));
  for (int y = 0; y < h; ++y) row_ptrs[y] = rows[y].data();
  png_read_image(png, row_ptrs.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);

  Image img = Image::zeros(w, h, channels);
  for (int y = 0; y < h; ++y)
    for (int64_t i = 0; i < int64_t(w) * channels; ++i)
      img.data[img.offset(0, y) + i] = std::pow(rows[y][i] / 255.0, kGamma);
  return img;
}

void write_png(const std::string& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw ValidationError("PNG supports 1 or 3 channels, got " + std::to_string(img.channels));
  if (img.width < 1 || img.height < 1) throw ValidationError("cannot write an empty PNG");

  std::vector<std::vector<png_byte>> rows(size_t(img.height),
                                          std::vector<png_byte>(size_t(img.width) * img.channels));
  for (int y = 0; y < img.height; ++y)
    for (int64_t i = 0; i < int64_t(img.width) * img.channels; ++i) {
      double v = clamp(img.data[img.offset(0, y) + i], 0.0, 1.0);
      rows[y][i] = png_byte(std::lround(std::pow(v, 1.0 / kGamma) * 255.0));
    }

  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw ValidationError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw ValidationError("libpng initialization failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw ValidationError(path + ": PNG encode failed");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<png_bytep> row_ptrs(static_cast<size_t>(img.height));
  for (int y = 0; y < img.height; ++y) row_ptrs[y] = rows[y].data();
  png_write_image(png, row_ptrs.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---------------------------------------------------------------------------
// Extension dispatch
// ---------------------------------------------------------------------------

namespace {

std::string lower_ext(const std::string& path) {
  size_t dot = path.rfind('.');
  if (dot == std::string::npos) return "";
  std::string ext = path.substr(dot);
  for (char& c : ext) c = char(std::tolower(static_cast<unsigned char>(c)));
  return ext;
}

}  // namespace

Image read_image(const std::string& path) {
  std::string ext = lower_ext(path);
  if (ext == ".pfm") return read_pfm(path);
  if (ext == ".png") return read_png(path);
  throw ValidationError(path + ": unsupported image extension (use .pfm or .png)");
}

void write_image(const std::string& path, const Image& img) {
  std::string ext = lower_ext(path);
  if (ext == ".pfm") return write_pfm(path, img);
  if (ext == ".png") return write_png(path, img);
  throw ValidationError(path + ": unsupported image extension (use .pfm or .png)");
}

}  // namespace vsg
