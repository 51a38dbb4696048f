#include "scr/image.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "scr/errors.hpp"

namespace scr {

RgbImage replicate(const GrayImage& gray) {
  RgbImage out;
  for (auto& p : out.planes) p = gray;
  return out;
}

GrayImage to_gray(const RgbImage& rgb) { return (rgb[0] + rgb[1] + rgb[2]) / 3.0f; }

GrayImage resize_bilinear(const GrayImage& img, int rows, int cols) {
  if (rows <= 0 || cols <= 0 || img.size() == 0) throw DomainError("image: resize to an empty size");
  if (rows == img.rows() && cols == img.cols()) return img;
  GrayImage out(rows, cols);
  const double sy = static_cast<double>(img.rows()) / rows;
  const double sx = static_cast<double>(img.cols()) / cols;
  const int last_r = static_cast<int>(img.rows()) - 1;
  const int last_c = static_cast<int>(img.cols()) - 1;
  for (int i = 0; i < rows; ++i) {
    const double y = std::clamp((i + 0.5) * sy - 0.5, 0.0, static_cast<double>(last_r));
    const int y0 = static_cast<int>(y);
    const int y1 = std::min(y0 + 1, last_r);
    const double fy = y - y0;
    for (int j = 0; j < cols; ++j) {
      const double x = std::clamp((j + 0.5) * sx - 0.5, 0.0, static_cast<double>(last_c));
      const int x0 = static_cast<int>(x);
      const int x1 = std::min(x0 + 1, last_c);
      const double fx = x - x0;
      const double top = (1 - fx) * img(y0, x0) + fx * img(y0, x1);
      const double bottom = (1 - fx) * img(y1, x0) + fx * img(y1, x1);
      out(i, j) = static_cast<float>((1 - fy) * top + fy * bottom);
    }
  }
  return out;
}

RgbImage resize_bilinear(const RgbImage& img, int rows, int cols) {
  RgbImage out;
  for (int c = 0; c < 3; ++c) out[c] = resize_bilinear(img[c], rows, cols);
  return out;
}

double iou(const GrayImage& a, const GrayImage& b, float threshold) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) throw DomainError("image: iou size mismatch");
  const auto ma = a > threshold;
  const auto mb = b > threshold;
  const auto inter = (ma && mb).count();
  const auto uni = (ma || mb).count();
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

int connected_components(const GrayImage& img, float threshold) {
  const int rows = static_cast<int>(img.rows()), cols = static_cast<int>(img.cols());
  std::vector<int> label(static_cast<std::size_t>(rows) * cols, 0);
  std::vector<int> stack;
  int count = 0;
  for (int start = 0; start < rows * cols; ++start) {
    if (label[start] || !(img(start / cols, start % cols) > threshold)) continue;
    ++count;
    label[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int p = stack.back();
      stack.pop_back();
      const int r = p / cols, c = p % cols;
      const int nbr[4][2] = {{r - 1, c}, {r + 1, c}, {r, c - 1}, {r, c + 1}};
      for (const auto& n : nbr) {
        if (n[0] < 0 || n[0] >= rows || n[1] < 0 || n[1] >= cols) continue;
        const int q = n[0] * cols + n[1];
        if (label[q] || !(img(n[0], n[1]) > threshold)) continue;
        label[q] = count;
        stack.push_back(q);
      }
    }
  }
  return count;
}

}  // namespace scr
