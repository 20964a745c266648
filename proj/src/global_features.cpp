#include "tmr/global_features.hpp"

#include "tmr/errors.hpp"

#include <unsupported/Eigen/FFT>

#include <array>
#include <bit>
#include <cmath>
#include <complex>
#include <map>
#include <numbers>
#include <vector>

namespace tmr {

namespace {

// Upper hue edges (degrees) of bins 0..7. Bin 0 also covers [316, 360).
constexpr std::array<double, 8> kHueUpper = {20.0, 40.0, 75.0, 155.0, 190.0, 270.0, 295.0, 316.0};
constexpr std::array<double, 8> kHueLower = {316.0, 20.0, 40.0, 75.0, 155.0, 190.0, 270.0, 295.0};

int uniform_bin(double x, int bins) {
  const int b = static_cast<int>(x * bins);
  return std::clamp(b, 0, bins - 1);
}

}  // namespace

int hsv72_hue_bin(double hue_deg) {
  if (hue_deg >= kHueLower[0] || hue_deg < kHueUpper[0]) return 0;
  for (int b = 1; b < kHsvHueBins; ++b)
    if (hue_deg < kHueUpper[b]) return b;
  return 0;
}

int hsv72_bin(const Hsv& hsv) {
  return hsv72_hue_bin(hsv.h) * (kHsvSatBins * kHsvValBins) + uniform_bin(hsv.s, kHsvSatBins) * kHsvValBins +
         uniform_bin(hsv.v, kHsvValBins);
}

Hsv hsv72_bin_center(int bin) {
  const int hb = bin / (kHsvSatBins * kHsvValBins);
  const int sb = (bin / kHsvValBins) % kHsvSatBins;
  const int vb = bin % kHsvValBins;
  double lo = kHueLower[hb], hi = kHueUpper[hb];
  if (hi < lo) hi += 360.0;
  double h = 0.5 * (lo + hi);
  if (h >= 360.0) h -= 360.0;
  return {h, (sb + 0.5) / kHsvSatBins, (vb + 0.5) / kHsvValBins};
}

DenseDescriptor color_histogram_hsv72(const RasterImage& img) {
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(kHsv72Dim);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) hist[hsv72_bin(rgb_to_hsv(img.at(x, y)))] += 1.0;
  return {"hsv72", normalize(hist, Normalization::L1)};
}

DenseDescriptor color_histogram_rgb(const RasterImage& img, int bins_per_channel) {
  if (bins_per_channel != 4 && bins_per_channel != 8)
    throw Error(ErrorKind::InvalidParam, "rgb histogram: bins per channel must be 4 or 8");
  const int b = bins_per_channel;
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(b * b * b);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const Rgb c = img.at(x, y);
      const int r = c[0] * b / 256, g = c[1] * b / 256, bl = c[2] * b / 256;
      hist[(r * b + g) * b + bl] += 1.0;
    }
  return {"rgb" + std::to_string(b * b * b), normalize(hist, Normalization::L1)};
}

// ---- LBP -------------------------------------------------------------------

std::string_view to_string(LbpVariant v) {
  switch (v) {
    case LbpVariant::Base: return "base";
    case LbpVariant::RotationInvariant: return "ri";
    case LbpVariant::Uniform: return "u2";
    case LbpVariant::RotationInvariantUniform: return "riu2";
  }
  return "base";
}

std::optional<LbpVariant> parse_lbp_variant(std::string_view name) {
  if (name == "base") return LbpVariant::Base;
  if (name == "ri") return LbpVariant::RotationInvariant;
  if (name == "u2") return LbpVariant::Uniform;
  if (name == "riu2") return LbpVariant::RotationInvariantUniform;
  return std::nullopt;
}

namespace {

constexpr int kMaxLbpNeighbors = 16;

std::uint32_t rotate_right(std::uint32_t code, int by, int bits) {
  const std::uint32_t mask = (bits == 32) ? ~0u : ((1u << bits) - 1u);
  return ((code >> by) | (code << (bits - by))) & mask;
}

int transitions(std::uint32_t code, int bits) {
  return std::popcount(code ^ rotate_right(code, 1, bits));
}

// code -> histogram bin for every P-bit code
std::vector<int> lbp_lookup(int p, LbpVariant variant) {
  const std::uint32_t n = 1u << p;
  std::vector<int> lut(n);
  switch (variant) {
    case LbpVariant::Base:
      for (std::uint32_t c = 0; c < n; ++c) lut[c] = static_cast<int>(c);
      break;
    case LbpVariant::RotationInvariant: {
      std::map<std::uint32_t, int> index;
      std::vector<std::uint32_t> mins(n);
      for (std::uint32_t c = 0; c < n; ++c) {
        std::uint32_t m = c;
        for (int r = 1; r < p; ++r) m = std::min(m, rotate_right(c, r, p));
        mins[c] = m;
        index.emplace(m, 0);
      }
      int next = 0;
      for (auto& [code, idx] : index) idx = next++;
      for (std::uint32_t c = 0; c < n; ++c) lut[c] = index[mins[c]];
      break;
    }
    case LbpVariant::Uniform: {
      int next = 0;
      const int nonuniform = p * (p - 1) + 2;
      for (std::uint32_t c = 0; c < n; ++c) lut[c] = transitions(c, p) <= 2 ? next++ : nonuniform;
      break;
    }
    case LbpVariant::RotationInvariantUniform:
      for (std::uint32_t c = 0; c < n; ++c)
        lut[c] = transitions(c, p) <= 2 ? std::popcount(c) : p + 1;
      break;
  }
  return lut;
}

void check_lbp_params(int p, double r) {
  if (p < 4 || p > kMaxLbpNeighbors) throw Error(ErrorKind::InvalidParam, "lbp: neighbours must be in [4, 16]");
  if (r < 1.0) throw Error(ErrorKind::InvalidParam, "lbp: radius must be >= 1");
}

}  // namespace

int lbp_dim(int neighbors, LbpVariant variant) {
  switch (variant) {
    case LbpVariant::Base: return 1 << neighbors;
    case LbpVariant::RotationInvariant: {
      const auto lut = lbp_lookup(neighbors, variant);
      return *std::max_element(lut.begin(), lut.end()) + 1;
    }
    case LbpVariant::Uniform: return neighbors * (neighbors - 1) + 3;
    case LbpVariant::RotationInvariantUniform: return neighbors + 2;
  }
  return 0;
}

Eigen::ArrayXXi lbp_codes(const GrayImage& gray, int neighbors, double radius) {
  check_lbp_params(neighbors, radius);
  const int margin = static_cast<int>(std::ceil(radius));
  const int w = gray.width - 2 * margin, h = gray.height - 2 * margin;
  if (w < 1 || h < 1) throw Error(ErrorKind::ImageTooSmall, "lbp: image has no interior at this radius");

  struct Sample {
    int x0, y0, x1, y1;
    double fx, fy;
  };
  std::vector<Sample> samples(neighbors);
  for (int p = 0; p < neighbors; ++p) {
    const double a = 2.0 * std::numbers::pi * p / neighbors;
    double dx = radius * std::cos(a), dy = -radius * std::sin(a);
    // snap samples that sit on the pixel grid up to rounding
    if (std::abs(dx - std::round(dx)) < 1e-9) dx = std::round(dx);
    if (std::abs(dy - std::round(dy)) < 1e-9) dy = std::round(dy);
    const int x0 = static_cast<int>(std::floor(dx)), y0 = static_cast<int>(std::floor(dy));
    samples[p] = {x0, y0, x0 + 1, y0 + 1, dx - x0, dy - y0};
  }

  // Interpolated neighbours that equal the centre in exact arithmetic may land
  // a few ulps below it; nonzero differences are far larger than this.
  constexpr double kEqualEps = 1e-6;
  Eigen::ArrayXXi codes(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int cx = x + margin, cy = y + margin;
      const double center = gray.at(cx, cy);
      int code = 0;
      for (int p = 0; p < neighbors; ++p) {
        const Sample& s = samples[p];
        double v;
        if (s.fx == 0.0 && s.fy == 0.0) {
          v = gray.at(cx + s.x0, cy + s.y0);
        } else {
          const double a = gray.at(cx + s.x0, cy + s.y0), b = gray.at(cx + s.x1, cy + s.y0);
          const double c = gray.at(cx + s.x0, cy + s.y1), d = gray.at(cx + s.x1, cy + s.y1);
          v = (1 - s.fx) * (1 - s.fy) * a + s.fx * (1 - s.fy) * b + (1 - s.fx) * s.fy * c + s.fx * s.fy * d;
        }
        if (v - center >= -kEqualEps) code |= 1 << p;
      }
      codes(y, x) = code;
    }
  return codes;
}

DenseDescriptor lbp(const GrayImage& gray, const LbpParams& params) {
  const Eigen::ArrayXXi codes = lbp_codes(gray, params.neighbors, params.radius);
  const auto lut = lbp_lookup(params.neighbors, params.variant);
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(lbp_dim(params.neighbors, params.variant));
  for (Eigen::Index i = 0; i < codes.size(); ++i) hist[lut[codes(i)]] += 1.0;
  return {"lbp." + std::string(to_string(params.variant)), normalize(hist, params.normalization)};
}

// ---- GIST ------------------------------------------------------------------

namespace {

using ComplexPlane = Eigen::Matrix<std::complex<double>, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void fft2(ComplexPlane& plane, bool inverse) {
  Eigen::FFT<double> fft;
  const Eigen::Index rows = plane.rows(), cols = plane.cols();
  std::vector<std::complex<double>> in, out;
  in.resize(cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) in[c] = plane(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index c = 0; c < cols; ++c) plane(r, c) = out[c];
  }
  in.resize(rows);
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) in[r] = plane(r, c);
    inverse ? fft.inv(out, in) : fft.fwd(out, in);
    for (Eigen::Index r = 0; r < rows; ++r) plane(r, c) = out[r];
  }
}

// One-sided Gaussian transfer functions centred on (f cos t, f sin t); the
// complex response magnitude is the local Gabor energy.
const std::vector<Eigen::MatrixXd>& gabor_bank() {
  static const std::vector<Eigen::MatrixXd> bank = [] {
    std::vector<Eigen::MatrixXd> out;
    const int n = kGistSize;
    for (int s = 0; s < kGistScales; ++s) {
      const double f0 = 0.25 / std::pow(2.0, s);
      const double sigma = 0.5 * f0;
      for (int o = 0; o < kGistOrientations; ++o) {
        const double t = std::numbers::pi * o / kGistOrientations;
        const double cu = f0 * std::cos(t), cv = f0 * std::sin(t);
        Eigen::MatrixXd h(n, n);
        for (int r = 0; r < n; ++r) {
          const double v = (r < n / 2 ? r : r - n) / static_cast<double>(n);
          for (int c = 0; c < n; ++c) {
            const double u = (c < n / 2 ? c : c - n) / static_cast<double>(n);
            const double d2 = (u - cu) * (u - cu) + (v - cv) * (v - cv);
            h(r, c) = std::exp(-d2 / (2.0 * sigma * sigma));
          }
        }
        h(0, 0) = 0.0;
        out.push_back(std::move(h));
      }
    }
    return out;
  }();
  return bank;
}

}  // namespace

DenseDescriptor gist(const GrayImage& gray) {
  const ImageF resized = resize_bilinear(to_float(gray), kGistSize, kGistSize);
  Eigen::ArrayXXd img = resized.cast<double>();
  img -= img.mean();

  ComplexPlane spectrum = img.matrix().cast<std::complex<double>>();
  fft2(spectrum, false);

  const int cell = kGistSize / kGistGrid;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(kGistDim);
  const auto& bank = gabor_bank();
  Eigen::Index k = 0;
  for (const auto& filter : bank) {
    ComplexPlane resp = spectrum.cwiseProduct(filter.cast<std::complex<double>>());
    fft2(resp, true);
    const Eigen::MatrixXd energy = resp.cwiseAbs();
    for (int gy = 0; gy < kGistGrid; ++gy)
      for (int gx = 0; gx < kGistGrid; ++gx) out[k++] = energy.block(gy * cell, gx * cell, cell, cell).mean();
  }
  if (out.norm() < 1e-12) out.setZero();
  return {"gist", normalize(out, Normalization::L2)};
}

}  // namespace tmr
