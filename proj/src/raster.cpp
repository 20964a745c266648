#include "tmr/raster.hpp"

#include "tmr/errors.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <iterator>

namespace tmr {

RasterImage::RasterImage(int w, int h, Rgb fill) : width(w), height(h) {
  pixels.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixels.size(); i += 3) {
    pixels[i] = fill[0];
    pixels[i + 1] = fill[1];
    pixels[i + 2] = fill[2];
  }
}

GrayImage::GrayImage(int w, int h, std::uint8_t fill)
    : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

namespace {

bool is_png(std::span<const std::uint8_t> b) {
  static constexpr std::uint8_t sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
  return b.size() >= 8 && std::equal(sig, sig + 8, b.begin());
}

bool is_jpeg(std::span<const std::uint8_t> b) {
  return b.size() >= 3 && b[0] == 0xFF && b[1] == 0xD8 && b[2] == 0xFF;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw Error(ErrorKind::Decode, std::string("png: ") + image.message);
  }
  image.format = PNG_FORMAT_RGB;
  RasterImage out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw Error(ErrorKind::Decode, "png: " + msg);
  }
  if (out.width < 1 || out.height < 1) throw Error(ErrorKind::Decode, "png: empty image");
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

void jpeg_count_warning(j_common_ptr cinfo, int level) {
  if (level < 0) ++cinfo->err->num_warnings;
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err;
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_count_warning;
  RasterImage out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(ErrorKind::Decode, std::string("jpeg: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.width = static_cast<int>(cinfo.output_width);
  out.height = static_cast<int>(cinfo.output_height);
  out.pixels.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  // libjpeg pads a truncated stream with a fake EOI and only warns.
  const long warnings = err.base.num_warnings;
  jpeg_destroy_decompress(&cinfo);
  if (warnings > 0) throw Error(ErrorKind::Decode, "jpeg: corrupt or truncated stream");
  return out;
}

}  // namespace

RasterImage decode_image(std::span<const std::uint8_t> bytes) {
  if (is_png(bytes)) return decode_png(bytes);
  if (is_jpeg(bytes)) return decode_jpeg(bytes);
  throw Error(ErrorKind::UnsupportedFormat, "unrecognised image signature");
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

RasterImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return decode_image(bytes);
  } catch (const Error& e) {
    throw Error(e.kind(), path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_png(const RasterImage& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("png encode: ") + image.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr)) {
    throw Error(ErrorKind::Io, std::string("png encode: ") + image.message);
  }
  out.resize(size);
  return out;
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality) {
  jpeg_compress_struct cinfo;
  jpeg_error_mgr jerr;
  cinfo.err = jpeg_std_error(&jerr);
  jpeg_create_compress(&cinfo);
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(img.width);
  cinfo.image_height = static_cast<JDIMENSION>(img.height);
  cinfo.input_components = 3;
  cinfo.in_color_space = JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    auto* row = const_cast<JSAMPROW>(img.pixels.data() +
                                     static_cast<std::size_t>(cinfo.next_scanline) * img.width * 3);
    jpeg_write_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  jpeg_destroy_compress(&cinfo);
  std::free(buffer);
  return out;
}

void save_png(const RasterImage& img, const std::filesystem::path& path) {
  const auto bytes = encode_png(img);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

namespace {

std::uint8_t luma(Rgb p) {
  const double y = 0.299 * p[0] + 0.587 * p[1] + 0.114 * p[2];
  return static_cast<std::uint8_t>(std::clamp(std::lround(y), 0L, 255L));
}

}  // namespace

GrayImage to_gray(const RasterImage& img) {
  GrayImage out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(x, y) = luma(img.at(x, y));
  return out;
}

RasterImage gray_to_rgb(const GrayImage& gray) {
  RasterImage out(gray.width, gray.height);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) {
      const auto g = gray.at(x, y);
      out.set(x, y, {g, g, g});
    }
  return out;
}

Hsv rgb_to_hsv(Rgb pixel) {
  const double r = pixel[0] / 255.0, g = pixel[1] / 255.0, b = pixel[2] / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double delta = mx - mn;
  Hsv out;
  out.v = mx;
  out.s = mx > 0.0 ? delta / mx : 0.0;
  if (out.s == 0.0) return out;
  double h;
  if (mx == r) {
    h = 60.0 * std::fmod((g - b) / delta, 6.0);
  } else if (mx == g) {
    h = 60.0 * ((b - r) / delta + 2.0);
  } else {
    h = 60.0 * ((r - g) / delta + 4.0);
  }
  if (h < 0.0) h += 360.0;
  if (h >= 360.0) h -= 360.0;
  out.h = h;
  return out;
}

Rgb hsv_to_rgb(const Hsv& hsv) {
  const double c = hsv.v * hsv.s;
  const double hp = std::fmod(hsv.h, 360.0) / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  switch (static_cast<int>(hp)) {
    case 0: r = c; g = x; break;
    case 1: r = x; g = c; break;
    case 2: g = c; b = x; break;
    case 3: g = x; b = c; break;
    case 4: r = x; b = c; break;
    default: r = c; b = x; break;
  }
  const double m = hsv.v - c;
  auto to8 = [m](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::lround((v + m) * 255.0), 0L, 255L));
  };
  return {to8(r), to8(g), to8(b)};
}

namespace {

// Per-axis sample positions and weights for pixel-centre aligned resampling.
struct AxisMap {
  std::vector<int> lo, hi;
  std::vector<double> frac;
};

AxisMap axis_map(int src, int dst) {
  AxisMap m;
  m.lo.resize(dst);
  m.hi.resize(dst);
  m.frac.resize(dst);
  const double ratio = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    double s = (i + 0.5) * ratio - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(src - 1));
    const int l = static_cast<int>(std::floor(s));
    m.lo[i] = l;
    m.hi[i] = std::min(l + 1, src - 1);
    m.frac[i] = s - l;
  }
  return m;
}

template <int Channels>
std::vector<std::uint8_t> resize_plane(const std::vector<std::uint8_t>& src, int w, int h,
                                       int nw, int nh) {
  if (nw == w && nh == h) return src;
  std::vector<std::uint8_t> out(static_cast<std::size_t>(nw) * nh * Channels);
  const AxisMap mx = axis_map(w, nw), my = axis_map(h, nh);
  for (int y = 0; y < nh; ++y) {
    const double fy = my.frac[y];
    const auto* r0 = &src[static_cast<std::size_t>(my.lo[y]) * w * Channels];
    const auto* r1 = &src[static_cast<std::size_t>(my.hi[y]) * w * Channels];
    for (int x = 0; x < nw; ++x) {
      const double fx = mx.frac[x];
      const int x0 = mx.lo[x] * Channels, x1 = mx.hi[x] * Channels;
      for (int c = 0; c < Channels; ++c) {
        const double top = r0[x0 + c] + fx * (r0[x1 + c] - r0[x0 + c]);
        const double bot = r1[x0 + c] + fx * (r1[x1 + c] - r1[x0 + c]);
        const double v = top + fy * (bot - top);
        out[(static_cast<std::size_t>(y) * nw + x) * Channels + c] =
            static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

}  // namespace

RasterImage resize_bilinear(const RasterImage& img, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw Error(ErrorKind::InvalidParam, "resize: target must be >= 1x1");
  RasterImage out;
  out.width = new_w;
  out.height = new_h;
  out.pixels = resize_plane<3>(img.pixels, img.width, img.height, new_w, new_h);
  return out;
}

GrayImage resize_bilinear(const GrayImage& img, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw Error(ErrorKind::InvalidParam, "resize: target must be >= 1x1");
  GrayImage out;
  out.width = new_w;
  out.height = new_h;
  out.pixels = resize_plane<1>(img.pixels, img.width, img.height, new_w, new_h);
  return out;
}

ImageF resize_bilinear(const ImageF& img, int new_w, int new_h) {
  if (new_w < 1 || new_h < 1) throw Error(ErrorKind::InvalidParam, "resize: target must be >= 1x1");
  const int w = static_cast<int>(img.cols()), h = static_cast<int>(img.rows());
  if (w == new_w && h == new_h) return img;
  const AxisMap mx = axis_map(w, new_w), my = axis_map(h, new_h);
  ImageF out(new_h, new_w);
  for (int y = 0; y < new_h; ++y) {
    const float fy = static_cast<float>(my.frac[y]);
    for (int x = 0; x < new_w; ++x) {
      const float fx = static_cast<float>(mx.frac[x]);
      const float top = img(my.lo[y], mx.lo[x]) + fx * (img(my.lo[y], mx.hi[x]) - img(my.lo[y], mx.lo[x]));
      const float bot = img(my.hi[y], mx.lo[x]) + fx * (img(my.hi[y], mx.hi[x]) - img(my.hi[y], mx.lo[x]));
      out(y, x) = top + fy * (bot - top);
    }
  }
  return out;
}

GrayImage invert_contrast(const GrayImage& gray) {
  GrayImage out = gray;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
  return out;
}

RasterImage invert_contrast(const RasterImage& img) {
  RasterImage out = img;
  for (auto& p : out.pixels) p = static_cast<std::uint8_t>(255 - p);
  return out;
}

namespace {

bool near_color(Rgb a, Rgb b, int tol) {
  for (int c = 0; c < 3; ++c)
    if (std::abs(int(a[c]) - int(b[c])) > tol) return false;
  return true;
}

// One cropping pass; returns false when nothing changed.
bool crop_once(const RasterImage& img, int tol, RasterImage& out) {
  const Rgb bg = img.at(0, 0);
  const int w = img.width, h = img.height;
  if (!near_color(img.at(w - 1, 0), bg, tol) || !near_color(img.at(0, h - 1), bg, tol) ||
      !near_color(img.at(w - 1, h - 1), bg, tol)) {
    return false;
  }
  int x0 = w, y0 = h, x1 = -1, y1 = -1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!near_color(img.at(x, y), bg, tol)) {
        x0 = std::min(x0, x);
        x1 = std::max(x1, x);
        y0 = std::min(y0, y);
        y1 = std::max(y1, y);
      }
  if (x1 < 0) return false;  // all background
  if (x0 == 0 && y0 == 0 && x1 == w - 1 && y1 == h - 1) return false;
  RasterImage c(x1 - x0 + 1, y1 - y0 + 1);
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) c.set(x - x0, y - y0, img.at(x, y));
  out = std::move(c);
  return true;
}

}  // namespace

RasterImage autocrop(const RasterImage& img, int background_tolerance) {
  RasterImage cur = img;
  RasterImage next;
  while (crop_once(cur, background_tolerance, next)) cur = std::move(next);
  return cur;
}

ImageF to_float(const GrayImage& gray) {
  ImageF out(gray.height, gray.width);
  for (int y = 0; y < gray.height; ++y)
    for (int x = 0; x < gray.width; ++x) out(y, x) = gray.at(x, y) / 255.0f;
  return out;
}

GrayImage rotate90(const GrayImage& gray, int quarter_turns) {
  const int q = ((quarter_turns % 4) + 4) % 4;
  GrayImage cur = gray;
  for (int t = 0; t < q; ++t) {
    GrayImage r(cur.height, cur.width);
    // clockwise: (x, y) -> (H - 1 - y, x)
    for (int y = 0; y < cur.height; ++y)
      for (int x = 0; x < cur.width; ++x) r.at(cur.height - 1 - y, x) = cur.at(x, y);
    cur = std::move(r);
  }
  return cur;
}

std::vector<CorpusEntry> list_corpus(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::vector<CorpusEntry> out;
  if (!fs::is_directory(root)) throw Error(ErrorKind::Io, "not a directory: " + root.string());
  for (const auto& e : fs::recursive_directory_iterator(root)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext != ".png" && ext != ".jpg" && ext != ".jpeg") continue;
    out.push_back({fs::relative(e.path(), root).generic_string(), e.path()});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return out;
}

}  // namespace tmr
