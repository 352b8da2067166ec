#include <algorithm>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

#include "mtof/data_model.hpp"

// PNG plumbing, isolated so OpenCV stays out of the public headers.

namespace mtof {

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L));
}

void ensure_parent_dir(const std::string& path) {
  auto parent = std::filesystem::path(path).parent_path();
  if (!parent.empty()) std::filesystem::create_directories(parent);
}

cv::Mat read_or_throw(const std::string& path, int flags) {
  cv::Mat m = cv::imread(path, flags);
  if (m.empty()) throw std::runtime_error("cannot read image: " + path);
  return m;
}

}  // namespace

void write_rgb_png(const std::string& path, const RgbImage& img) {
  ensure_parent_dir(path);
  cv::Mat m(img.height, img.width, CV_8UC3);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      auto& px = m.at<cv::Vec3b>(y, x);  // OpenCV stores BGR
      px[2] = to_byte(img.at(y, x, 0));
      px[1] = to_byte(img.at(y, x, 1));
      px[0] = to_byte(img.at(y, x, 2));
    }
  if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write " + path);
}

void write_raw_tof_png(const std::string& path, const RawToFMap& raw) {
  ensure_parent_dir(path);
  cv::Mat m(raw.height, raw.width, CV_16UC1);
  for (int y = 0; y < raw.height; ++y)
    for (int x = 0; x < raw.width; ++x)
      m.at<std::uint16_t>(y, x) = raw.words[static_cast<std::size_t>(y) * raw.width + x];
  if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write " + path);
}

void write_tof_png(const std::string& path, const ToFMap& tof) {
  ensure_parent_dir(path);
  cv::Mat m(tof.height, tof.width, CV_8UC1);
  for (int y = 0; y < tof.height; ++y)
    for (int x = 0; x < tof.width; ++x) m.at<std::uint8_t>(y, x) = to_byte(tof.at(y, x));
  if (!cv::imwrite(path, m)) throw std::runtime_error("cannot write " + path);
}

RgbImage read_rgb_png(const std::string& path) {
  cv::Mat m = read_or_throw(path, cv::IMREAD_COLOR);
  RgbImage img;
  img.width = m.cols;
  img.height = m.rows;
  img.values.resize(static_cast<std::size_t>(m.cols) * m.rows * 3);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) {
      const auto& px = m.at<cv::Vec3b>(y, x);
      img.at(y, x, 0) = px[2] / 255.0;
      img.at(y, x, 1) = px[1] / 255.0;
      img.at(y, x, 2) = px[0] / 255.0;
    }
  return img;
}

RawToFMap read_raw_tof_png(const std::string& path) {
  cv::Mat m = read_or_throw(path, cv::IMREAD_UNCHANGED);
  if (m.type() != CV_16UC1)
    throw std::runtime_error("raw ToF PNG must be 16-bit single channel: " + path);
  RawToFMap raw;
  raw.width = m.cols;
  raw.height = m.rows;
  raw.words.resize(static_cast<std::size_t>(m.cols) * m.rows);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x)
      raw.words[static_cast<std::size_t>(y) * m.cols + x] = m.at<std::uint16_t>(y, x);
  return raw;
}

ToFMap read_tof_png(const std::string& path) {
  cv::Mat m = read_or_throw(path, cv::IMREAD_GRAYSCALE);
  ToFMap tof;
  tof.width = m.cols;
  tof.height = m.rows;
  tof.values.resize(static_cast<std::size_t>(m.cols) * m.rows);
  for (int y = 0; y < m.rows; ++y)
    for (int x = 0; x < m.cols; ++x) tof.at(y, x) = m.at<std::uint8_t>(y, x) / 255.0;
  return tof;
}

}  // namespace mtof
