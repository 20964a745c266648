#include "tmr/keypoint_features.hpp"

#include "tmr/codebook.hpp"
#include "tmr/errors.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <set>

namespace tmr {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kPi = std::numbers::pi;
constexpr double kInitialBlur = 0.5;
constexpr int kMinOctaveSize = 8;
constexpr int kExtremumBorder = 2;
constexpr int kRefineIterations = 5;
constexpr int kOrientationBins = 36;
constexpr double kOrientationPeakRatio = 0.8;

double wrap_two_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;
  return a;
}

double wrap_pi(double a) {
  a = std::fmod(a, kPi);
  if (a < 0.0) a += kPi;
  if (a >= kPi) a = 0.0;
  return a;
}

std::vector<float> gaussian_kernel(double sigma) {
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<float> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-0.5 * i * i / (sigma * sigma));
    k[i + radius] = static_cast<float>(v);
    sum += v;
  }
  for (auto& v : k) v = static_cast<float>(v / sum);
  return k;
}

ImageF gaussian_blur(const ImageF& src, double sigma) {
  const auto k = gaussian_kernel(sigma);
  const int r = static_cast<int>(k.size() / 2);
  const int h = static_cast<int>(src.rows()), w = static_cast<int>(src.cols());
  ImageF tmp(h, w), out(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * src(y, std::clamp(x + i, 0, w - 1));
      tmp(y, x) = acc;
    }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      float acc = 0.0f;
      for (int i = -r; i <= r; ++i) acc += k[i + r] * tmp(std::clamp(y + i, 0, h - 1), x);
      out(y, x) = acc;
    }
  return out;
}

struct ScaleSpace {
  int levels = 3;  // S
  double sigma0 = 1.6;
  std::vector<std::vector<ImageF>> gauss;  // [octave][0 .. S+2]
  std::vector<std::vector<ImageF>> dog;    // [octave][0 .. S+1]
};

ScaleSpace build_scale_space(const GrayImage& gray, const DogConfig& cfg) {
  if (gray.width < 16 || gray.height < 16) throw Error(ErrorKind::ImageTooSmall, "dog: image must be at least 16x16");
  if (cfg.octaves < 1 || cfg.scales_per_octave < 1 || cfg.sigma0 <= kInitialBlur)
    throw Error(ErrorKind::InvalidParam, "dog: invalid pyramid configuration");
  ScaleSpace ss;
  ss.levels = cfg.scales_per_octave;
  ss.sigma0 = cfg.sigma0;
  const int s = ss.levels;

  std::vector<double> step(s + 3, 0.0);
  for (int i = 1; i < s + 3; ++i) {
    const double prev = cfg.sigma0 * std::pow(2.0, (i - 1) / static_cast<double>(s));
    const double cur = cfg.sigma0 * std::pow(2.0, i / static_cast<double>(s));
    step[i] = std::sqrt(cur * cur - prev * prev);
  }

  ImageF base = gaussian_blur(to_float(gray), std::sqrt(cfg.sigma0 * cfg.sigma0 - kInitialBlur * kInitialBlur));
  for (int o = 0; o < cfg.octaves; ++o) {
    if (std::min(base.rows(), base.cols()) < kMinOctaveSize) break;
    std::vector<ImageF> g;
    g.reserve(s + 3);
    g.push_back(base);
    for (int i = 1; i < s + 3; ++i) g.push_back(gaussian_blur(g.back(), step[i]));
    std::vector<ImageF> d;
    d.reserve(s + 2);
    for (int i = 0; i + 1 < s + 3; ++i) d.push_back(g[i + 1] - g[i]);
    const ImageF& next_src = g[s];
    ImageF next((next_src.rows() + 1) / 2, (next_src.cols() + 1) / 2);
    for (Eigen::Index y = 0; y < next.rows(); ++y)
      for (Eigen::Index x = 0; x < next.cols(); ++x) next(y, x) = next_src(2 * y, 2 * x);
    ss.gauss.push_back(std::move(g));
    ss.dog.push_back(std::move(d));
    base = std::move(next);
  }
  return ss;
}

bool is_extremum(const std::vector<ImageF>& dog, int layer, int y, int x) {
  const float v = dog[layer](y, x);
  const bool is_max = v > 0;
  for (int l = layer - 1; l <= layer + 1; ++l)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == layer && dy == 0 && dx == 0) continue;
        const float n = dog[l](y + dy, x + dx);
        if (is_max ? n >= v : n <= v) return false;
      }
  return true;
}

struct Refined {
  double x, y, layer;  // octave coordinates
  double response;
};

std::optional<Refined> refine(const std::vector<ImageF>& dog, int layer, int y, int x, const DogConfig& cfg) {
  const int s = cfg.scales_per_octave;
  const int h = static_cast<int>(dog[0].rows()), w = static_cast<int>(dog[0].cols());
  Eigen::Vector3d offset = Eigen::Vector3d::Zero();
  Eigen::Vector3d grad;
  for (int it = 0;; ++it) {
    const auto& c = dog[layer];
    const auto& p = dog[layer - 1];
    const auto& n = dog[layer + 1];
    const double v = c(y, x);
    grad << 0.5 * (c(y, x + 1) - c(y, x - 1)), 0.5 * (c(y + 1, x) - c(y - 1, x)), 0.5 * (n(y, x) - p(y, x));
    Eigen::Matrix3d hess;
    const double dxx = c(y, x + 1) + c(y, x - 1) - 2 * v;
    const double dyy = c(y + 1, x) + c(y - 1, x) - 2 * v;
    const double dss = n(y, x) + p(y, x) - 2 * v;
    const double dxy = 0.25 * (c(y + 1, x + 1) - c(y + 1, x - 1) - c(y - 1, x + 1) + c(y - 1, x - 1));
    const double dxs = 0.25 * (n(y, x + 1) - n(y, x - 1) - p(y, x + 1) + p(y, x - 1));
    const double dys = 0.25 * (n(y + 1, x) - n(y - 1, x) - p(y + 1, x) + p(y - 1, x));
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    const auto lu = hess.fullPivLu();
    if (!lu.isInvertible()) return std::nullopt;
    offset = -lu.solve(grad);
    if ((offset.array().abs() < 0.5).all()) {
      const double response = v + 0.5 * grad.dot(offset);
      if (std::abs(response) < cfg.contrast_threshold) return std::nullopt;
      const double tr = dxx + dyy;
      const double det = dxx * dyy - dxy * dxy;
      const double r = cfg.edge_threshold;
      if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return std::nullopt;
      return Refined{x + offset[0], y + offset[1], layer + offset[2], std::abs(response)};
    }
    if (it + 1 >= kRefineIterations) return std::nullopt;
    x += static_cast<int>(std::lround(offset[0]));
    y += static_cast<int>(std::lround(offset[1]));
    layer += static_cast<int>(std::lround(offset[2]));
    if (layer < 1 || layer > s || x < kExtremumBorder || x >= w - kExtremumBorder || y < kExtremumBorder ||
        y >= h - kExtremumBorder)
      return std::nullopt;
  }
}

// Central-difference gradient; pixel must be in the interior.
inline void gradient_at(const ImageF& img, int y, int x, double& mag, double& ang) {
  const double dx = img(y, x + 1) - img(y, x - 1);
  const double dy = img(y + 1, x) - img(y - 1, x);
  mag = std::sqrt(dx * dx + dy * dy);
  ang = std::atan2(dy, dx);
}

std::vector<double> dominant_orientations(const ImageF& img, double xo, double yo, double sigma_oct) {
  const double sigma = 1.5 * sigma_oct;
  const int radius = static_cast<int>(std::lround(3.0 * sigma));
  const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
  const int cx = static_cast<int>(std::lround(xo)), cy = static_cast<int>(std::lround(yo));
  std::array<double, kOrientationBins> hist{};
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx) {
      const int x = cx + dx, y = cy + dy;
      if (x < 1 || x >= w - 1 || y < 1 || y >= h - 1) continue;
      double mag, ang;
      gradient_at(img, y, x, mag, ang);
      const double wgt = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
      int bin = static_cast<int>(std::floor(wrap_two_pi(ang) * kOrientationBins / kTwoPi));
      bin = std::clamp(bin, 0, kOrientationBins - 1);
      hist[bin] += wgt * mag;
    }
  std::array<double, kOrientationBins> smooth{};
  for (int i = 0; i < kOrientationBins; ++i) {
    auto at = [&](int j) { return hist[(j + kOrientationBins) % kOrientationBins]; };
    smooth[i] = (at(i - 2) + at(i + 2)) / 16.0 + 4.0 * (at(i - 1) + at(i + 1)) / 16.0 + 6.0 * at(i) / 16.0;
  }
  const double peak = *std::max_element(smooth.begin(), smooth.end());
  std::vector<double> out;
  if (peak <= 0.0) return {0.0};
  for (int i = 0; i < kOrientationBins; ++i) {
    const double l = smooth[(i + kOrientationBins - 1) % kOrientationBins];
    const double r = smooth[(i + 1) % kOrientationBins];
    const double c = smooth[i];
    if (c > l && c > r && c >= kOrientationPeakRatio * peak) {
      const double denom = l - 2 * c + r;
      const double off = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
      out.push_back(wrap_two_pi((i + 0.5 + off) * kTwoPi / kOrientationBins));
    }
  }
  if (out.empty()) out.push_back(0.0);
  return out;
}

}  // namespace

std::vector<Keypoint> detect_dog_keypoints(const GrayImage& gray, const DogConfig& cfg) {
  const ScaleSpace ss = build_scale_space(gray, cfg);
  const int s = ss.levels;
  const double prefilter = 0.5 * cfg.contrast_threshold;
  std::vector<Keypoint> out;
  for (std::size_t o = 0; o < ss.dog.size(); ++o) {
    const auto& dog = ss.dog[o];
    const int h = static_cast<int>(dog[0].rows()), w = static_cast<int>(dog[0].cols());
    const double octave_scale = std::ldexp(1.0, static_cast<int>(o));
    for (int layer = 1; layer <= s; ++layer)
      for (int y = kExtremumBorder; y < h - kExtremumBorder; ++y)
        for (int x = kExtremumBorder; x < w - kExtremumBorder; ++x) {
          if (std::abs(dog[layer](y, x)) < prefilter || !is_extremum(dog, layer, y, x)) continue;
          const auto r = refine(dog, layer, y, x, cfg);
          if (!r) continue;
          const double sigma_oct = cfg.sigma0 * std::pow(2.0, r->layer / s);
          const int glayer = std::clamp(static_cast<int>(std::lround(r->layer)), 1, s);
          for (double ori : dominant_orientations(ss.gauss[o][glayer], r->x, r->y, sigma_oct)) {
            out.push_back({r->x * octave_scale, r->y * octave_scale, sigma_oct * octave_scale, ori, r->response});
          }
        }
  }
  std::sort(out.begin(), out.end(), [](const Keypoint& a, const Keypoint& b) {
    if (a.response != b.response) return a.response > b.response;
    if (a.y != b.y) return a.y < b.y;
    if (a.x != b.x) return a.x < b.x;
    if (a.scale != b.scale) return a.scale < b.scale;
    return a.orientation < b.orientation;
  });
  if (out.size() > cfg.max_keypoints) out.resize(cfg.max_keypoints);
  return out;
}

int scale_level(const Keypoint& kp, const DogConfig& cfg) {
  return static_cast<int>(std::lround(cfg.scales_per_octave * std::log2(kp.scale / cfg.sigma0)));
}

int folded_orientation_bin(double angle, int bins) {
  const int b = static_cast<int>(std::floor(wrap_pi(angle) * bins / kPi));
  return std::clamp(b, 0, bins - 1);
}

namespace {

constexpr int kSpatialBins = 4;
constexpr double kMagnification = 3.0;
constexpr float kClampValue = 0.2f;

DescriptorSet describe_gradient_histograms(const GrayImage& gray, std::span<const Keypoint> keypoints,
                                           const DogConfig& cfg, bool fold) {
  const int ori_bins = fold ? 4 : 8;
  const double ori_range = fold ? kPi : kTwoPi;
  const int dim = kSpatialBins * kSpatialBins * ori_bins;
  DescriptorSet set;
  set.feature_id = fold ? "orsift" : "sift";
  set.vectors.resize(0, dim);
  if (keypoints.empty()) return set;
  const ScaleSpace ss = build_scale_space(gray, cfg);
  const int s = ss.levels;
  const int n_oct = static_cast<int>(ss.gauss.size());

  std::vector<Eigen::VectorXf> rows;
  for (const Keypoint& kp : keypoints) {
    const int total = static_cast<int>(std::lround(s * std::log2(kp.scale / cfg.sigma0)));
    int o = total >= 0 ? total / s : -((-total + s - 1) / s);
    o = std::clamp(o, 0, n_oct - 1);
    const int layer = std::clamp(total - o * s, 0, s + 2);
    const ImageF& img = ss.gauss[o][layer];
    const int h = static_cast<int>(img.rows()), w = static_cast<int>(img.cols());
    const double octave_scale = std::ldexp(1.0, o);
    const double xo = kp.x / octave_scale, yo = kp.y / octave_scale;
    if (xo < 1.0 || yo < 1.0 || xo > w - 2.0 || yo > h - 2.0) continue;

    const double frame = fold ? wrap_pi(kp.orientation) : wrap_two_pi(kp.orientation);
    const double cos_t = std::cos(frame), sin_t = std::sin(frame);
    const double hist_width = kMagnification * kp.scale / octave_scale;
    const int radius = static_cast<int>(std::lround(hist_width * std::sqrt(2.0) * (kSpatialBins + 1) * 0.5));
    const double weight_scale = -1.0 / (0.5 * kSpatialBins * kSpatialBins);

    // (row + 2) x (col + 2) x (ori + 2) accumulator to absorb interpolation spill.
    const int ob = ori_bins + 2, cb = kSpatialBins + 2;
    std::vector<double> acc(static_cast<std::size_t>(cb * cb * ob), 0.0);
    const int x_lo = std::max(1, static_cast<int>(std::floor(xo - radius)));
    const int x_hi = std::min(w - 2, static_cast<int>(std::ceil(xo + radius)));
    const int y_lo = std::max(1, static_cast<int>(std::floor(yo - radius)));
    const int y_hi = std::min(h - 2, static_cast<int>(std::ceil(yo + radius)));
    for (int py = y_lo; py <= y_hi; ++py)
      for (int px = x_lo; px <= x_hi; ++px) {
        const double rx = px - xo, ry = py - yo;
        const double c_rot = (cos_t * rx + sin_t * ry) / hist_width;
        const double r_rot = (-sin_t * rx + cos_t * ry) / hist_width;
        const double rbin = r_rot + kSpatialBins / 2.0 - 0.5;
        const double cbin = c_rot + kSpatialBins / 2.0 - 0.5;
        if (rbin <= -1.0 || rbin >= kSpatialBins || cbin <= -1.0 || cbin >= kSpatialBins) continue;
        double mag, ang;
        gradient_at(img, py, px, mag, ang);
        if (mag == 0.0) continue;
        const double rel = fold ? wrap_pi(ang - frame) : wrap_two_pi(ang - frame);
        const double obin = rel * ori_bins / ori_range;
        const double wmag = mag * std::exp((c_rot * c_rot + r_rot * r_rot) * weight_scale);

        const int r0 = static_cast<int>(std::floor(rbin));
        const int c0 = static_cast<int>(std::floor(cbin));
        int o0 = static_cast<int>(std::floor(obin));
        const double dr = rbin - r0, dc = cbin - c0, dor = obin - o0;
        o0 = ((o0 % ori_bins) + ori_bins) % ori_bins;
        for (int ir = 0; ir <= 1; ++ir)
          for (int ic = 0; ic <= 1; ++ic)
            for (int io = 0; io <= 1; ++io) {
              const double wr = ir ? dr : 1.0 - dr;
              const double wc = ic ? dc : 1.0 - dc;
              const double wo = io ? dor : 1.0 - dor;
              const int rr = r0 + ir + 1, cc = c0 + ic + 1;
              const int oo = (o0 + io) % ori_bins;
              acc[(static_cast<std::size_t>(rr) * cb + cc) * ob + oo] += wmag * wr * wc * wo;
            }
      }
    Eigen::VectorXf desc(dim);
    for (int r = 0; r < kSpatialBins; ++r)
      for (int c = 0; c < kSpatialBins; ++c)
        for (int k = 0; k < ori_bins; ++k)
          desc[(r * kSpatialBins + c) * ori_bins + k] =
              static_cast<float>(acc[(static_cast<std::size_t>(r + 1) * cb + (c + 1)) * ob + k]);
    float norm = desc.norm();
    if (norm <= 0.0f) continue;
    desc /= norm;
    desc = desc.cwiseMin(kClampValue);
    norm = desc.norm();
    if (norm <= 0.0f) continue;
    desc /= norm;
    set.keypoints.push_back(kp);
    rows.push_back(std::move(desc));
  }
  set.vectors.resize(static_cast<Eigen::Index>(rows.size()), dim);
  for (std::size_t i = 0; i < rows.size(); ++i) set.vectors.row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
  return set;
}

}  // namespace

DescriptorSet describe_sift(const GrayImage& gray, std::span<const Keypoint> keypoints, const DogConfig& cfg) {
  return describe_gradient_histograms(gray, keypoints, cfg, false);
}

DescriptorSet describe_orsift(const GrayImage& gray, std::span<const Keypoint> keypoints, const DogConfig& cfg) {
  return describe_gradient_histograms(gray, keypoints, cfg, true);
}

// ---- HOG ---------------------------------------------------------------------

DescriptorSet describe_hog_dense(const GrayImage& gray, int cell_px) {
  constexpr int kBins = 9;
  if (cell_px < 2) throw Error(ErrorKind::InvalidParam, "hog: cell size must be >= 2");
  const int nx = gray.width / cell_px, ny = gray.height / cell_px;
  if (nx < 2 || ny < 2) throw Error(ErrorKind::ImageTooSmall, "hog: image must hold at least 2x2 cells");
  const ImageF img = to_float(gray);
  const int w = gray.width, h = gray.height;

  std::vector<double> cells(static_cast<std::size_t>(nx * ny * kBins), 0.0);
  for (int y = 0; y < ny * cell_px; ++y)
    for (int x = 0; x < nx * cell_px; ++x) {
      const double dx = img(y, std::min(x + 1, w - 1)) - img(y, std::max(x - 1, 0));
      const double dy = img(std::min(y + 1, h - 1), x) - img(std::max(y - 1, 0), x);
      const double mag = std::sqrt(dx * dx + dy * dy);
      if (mag == 0.0) continue;
      // bin k is centred on k * 20 degrees
      const double pos = wrap_pi(std::atan2(dy, dx)) * kBins / kPi;
      const int b0 = static_cast<int>(std::floor(pos)) % kBins;
      const double frac = pos - std::floor(pos);
      const std::size_t cell = static_cast<std::size_t>((y / cell_px) * nx + (x / cell_px)) * kBins;
      cells[cell + b0] += (1.0 - frac) * mag;
      cells[cell + (b0 + 1) % kBins] += frac * mag;
    }

  DescriptorSet set;
  set.feature_id = "hog";
  const int bx_n = nx - 1, by_n = ny - 1;
  const std::size_t count = std::min<std::size_t>(static_cast<std::size_t>(bx_n * by_n), kMaxDescriptorsPerImage);
  set.vectors.resize(static_cast<Eigen::Index>(count), 4 * kBins);
  std::size_t row = 0;
  for (int by = 0; by < by_n && row < count; ++by)
    for (int bx = 0; bx < bx_n && row < count; ++bx, ++row) {
      Eigen::VectorXd block(4 * kBins);
      int k = 0;
      for (int cy = by; cy <= by + 1; ++cy)
        for (int cx = bx; cx <= bx + 1; ++cx)
          for (int b = 0; b < kBins; ++b) block[k++] = cells[static_cast<std::size_t>(cy * nx + cx) * kBins + b];
      const double n = block.norm();
      if (n > 0.0) block /= n;
      set.vectors.row(static_cast<Eigen::Index>(row)) = block.cast<float>().transpose();
      set.keypoints.push_back({(bx + 1.0) * cell_px, (by + 1.0) * cell_px, static_cast<double>(cell_px), 0.0, 0.0});
    }
  return set;
}

// ---- shape context -----------------------------------------------------------

Eigen::MatrixXd shape_context_histograms(std::span<const Point2> points) {
  const Eigen::Index n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd hist = Eigen::MatrixXd::Zero(n, kShapeContextDim);
  if (n < 2) return hist;
  Eigen::MatrixXd dist(n, n);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      dist(i, j) = std::hypot(points[j].x - points[i].x, points[j].y - points[i].y);
      if (i != j) total += dist(i, j);
    }
  const double mean = total / static_cast<double>(n * (n - 1));
  // log-spaced radial edges between 1/8 and 2 mean distances
  std::array<double, kShapeContextRadialBins - 1> edges{};
  const double lo = std::log(0.125), hi = std::log(2.0);
  for (int k = 1; k < kShapeContextRadialBins; ++k) edges[k - 1] = std::exp(lo + k * (hi - lo) / kShapeContextRadialBins);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double r = mean > 0.0 ? dist(i, j) / mean : 0.0;
      int rb = 0;
      for (double e : edges) rb += r >= e ? 1 : 0;
      const double theta = wrap_two_pi(std::atan2(points[j].y - points[i].y, points[j].x - points[i].x));
      const int ab = std::clamp(static_cast<int>(std::floor(theta * kShapeContextAngularBins / kTwoPi)), 0,
                                kShapeContextAngularBins - 1);
      hist(i, rb * kShapeContextAngularBins + ab) += 1.0;
    }
  return hist;
}

std::vector<Point2> sample_edge_points(const GrayImage& gray, int n_samples) {
  if (n_samples < 2) throw Error(ErrorKind::InvalidParam, "shape context: need at least 2 samples");
  const int w = gray.width, h = gray.height;
  Eigen::MatrixXd mag = Eigen::MatrixXd::Zero(h, w);
  auto px = [&](int x, int y) -> double { return gray.at(std::clamp(x, 0, w - 1), std::clamp(y, 0, h - 1)); };
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double gx = (px(x + 1, y - 1) + 2 * px(x + 1, y) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x - 1, y) + px(x - 1, y + 1));
      const double gy = (px(x - 1, y + 1) + 2 * px(x, y + 1) + px(x + 1, y + 1)) -
                        (px(x - 1, y - 1) + 2 * px(x, y - 1) + px(x + 1, y - 1));
      mag(y, x) = std::sqrt(gx * gx + gy * gy);
    }
  const double peak = mag.maxCoeff();
  std::vector<Point2> edges;
  if (peak > 0.0) {
    const double threshold = 0.2 * peak;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        if (mag(y, x) >= threshold) edges.push_back({static_cast<double>(x), static_cast<double>(y)});
  }
  if (edges.size() < static_cast<std::size_t>(n_samples))
    throw Error(ErrorKind::InsufficientEdges, "shape context: fewer edge pixels than samples");
  const std::size_t step = edges.size() / static_cast<std::size_t>(n_samples);
  std::vector<Point2> out;
  out.reserve(n_samples);
  for (int i = 0; i < n_samples; ++i) out.push_back(edges[i * step]);
  return out;
}

DescriptorSet shape_context(const GrayImage& gray, int n_samples) {
  const auto points = sample_edge_points(gray, n_samples);
  const Eigen::MatrixXd hist = shape_context_histograms(points);
  double mean = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j)
      if (i != j) mean += std::hypot(points[j].x - points[i].x, points[j].y - points[i].y);
  mean /= static_cast<double>(points.size() * (points.size() - 1));
  DescriptorSet set;
  set.feature_id = "shapecontext";
  set.vectors.resize(hist.rows(), kShapeContextDim);
  for (Eigen::Index i = 0; i < hist.rows(); ++i) {
    const double sum = hist.row(i).sum();
    set.vectors.row(i) = (sum > 0.0 ? Eigen::RowVectorXd(hist.row(i) / sum) : Eigen::RowVectorXd(hist.row(i)))
                             .cast<float>();
    set.keypoints.push_back({points[i].x, points[i].y, mean > 0.0 ? mean : 1.0, 0.0, 0.0});
  }
  return set;
}

// ---- triplets ----------------------------------------------------------------

std::vector<WordId> assign_words(const DescriptorSet& set, const Codebook& codebook) {
  if (set.size() > 0 && set.dim() != codebook.dim())
    throw Error(ErrorKind::DimMismatch, "descriptor and codebook dimensions differ");
  std::vector<WordId> words(static_cast<std::size_t>(set.size()));
  for (Eigen::Index i = 0; i < set.size(); ++i) words[i] = nearest_word(codebook, set.vectors.row(i));
  return words;
}

std::vector<TripletCode> group_triplets(const DescriptorSet& set, const Codebook& codebook, const DogConfig& cfg) {
  const auto words = assign_words(set, codebook);
  std::map<int, std::vector<std::size_t>> by_level;
  for (std::size_t i = 0; i < set.keypoints.size(); ++i) by_level[scale_level(set.keypoints[i], cfg)].push_back(i);
  std::set<TripletCode> codes;
  for (const auto& [level, members] : by_level) {
    if (members.size() < 3) continue;
    for (std::size_t a : members) {
      std::vector<std::pair<double, std::size_t>> near;
      near.reserve(members.size() - 1);
      for (std::size_t b : members) {
        if (b == a) continue;
        const double d = std::hypot(set.keypoints[b].x - set.keypoints[a].x, set.keypoints[b].y - set.keypoints[a].y);
        near.emplace_back(d, b);
      }
      std::partial_sort(near.begin(), near.begin() + 2, near.end());
      TripletCode code{{words[a], words[near[0].second], words[near[1].second]}, level};
      std::sort(code.words.begin(), code.words.end());
      codes.insert(code);
    }
  }
  return {codes.begin(), codes.end()};
}

Eigen::VectorXd triplet_histogram(std::span<const TripletCode> codes) {
  Eigen::VectorXd hist = Eigen::VectorXd::Zero(kTripletHashBins);
  for (const auto& c : codes) {
    const std::uint64_t h = (static_cast<std::uint64_t>(c.words[0]) * 73856093ULL) ^
                            (static_cast<std::uint64_t>(c.words[1]) * 19349663ULL) ^
                            (static_cast<std::uint64_t>(c.words[2]) * 83492791ULL);
    hist[static_cast<Eigen::Index>(h % kTripletHashBins)] += 1.0;
  }
  return hist;
}

}  // namespace tmr
