#pragma once

// Image, clip and mask files for the command-line tool. Pixels are stored as
// 8-bit PNG/JPEG on disk and as floats in [0, 1] in memory.

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "vinpaint/vinpaint.hpp"

namespace vinpaint::io {

namespace fs = std::filesystem;

inline bool is_image_file(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg" || ext == ".bmp";
}

// Numeric order on the last run of digits in the file stem ("f2" before "f10"),
// ties and digit-free names broken by the full name.
inline std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  auto key = [](const fs::path& p) {
    const std::string s = p.stem().string();
    const auto end = s.find_last_of("0123456789");
    if (end == std::string::npos) return -1.0L;
    auto begin = end;
    while (begin > 0 && std::isdigit(static_cast<unsigned char>(s[begin - 1]))) --begin;
    return std::stold(s.substr(begin, end - begin + 1));
  };
  std::sort(files.begin(), files.end(), [&](const fs::path& a, const fs::path& b) {
    const auto ka = key(a), kb = key(b);
    return ka != kb ? ka < kb : a.filename() < b.filename();
  });
  return files;
}

inline data::Image from_mat(const cv::Mat& bgr8) {
  cv::Mat rgb;
  cv::cvtColor(bgr8, rgb, cv::COLOR_BGR2RGB);
  data::Image img({rgb.rows, rgb.cols, 3});
  for (int y = 0; y < rgb.rows; ++y) {
    const auto* row = rgb.ptr<std::uint8_t>(y);
    for (int i = 0; i < rgb.cols * 3; ++i) img[std::size_t(y) * rgb.cols * 3 + i] = row[i] / 255.0f;
  }
  return img;
}

inline std::uint8_t to_byte(float v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 1.0f) * 255.0f)); }

inline data::Image read_image(const fs::path& path) {
  const cv::Mat m = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (m.empty()) throw IoError("cannot decode image " + path.string());
  return from_mat(m);
}

// Writes an H x W x 1 or H x W x 3 image as 8-bit.
inline void write_image(const fs::path& path, const float* px, int h, int w, int c) {
  cv::Mat m(h, w, c == 1 ? CV_8UC1 : CV_8UC3);
  for (int y = 0; y < h; ++y) {
    auto* row = m.ptr<std::uint8_t>(y);
    for (int x = 0; x < w; ++x) {
      const float* p = px + (std::size_t(y) * w + x) * c;
      if (c == 1) {
        row[x] = to_byte(p[0]);
      } else {
        row[x * 3 + 0] = to_byte(p[2]);
        row[x * 3 + 1] = to_byte(p[1]);
        row[x * 3 + 2] = to_byte(p[0]);
      }
    }
  }
  if (!cv::imwrite(path.string(), m)) throw IoError("cannot write " + path.string());
}

inline void write_image(const fs::path& path, const data::Image& img) {
  write_image(path, img.data(), img.dim(0), img.dim(1), img.dim(2));
}

// Frames of a clip: a directory of images or a video file.
inline std::vector<data::Image> read_clip(const fs::path& path) {
  std::vector<data::Image> frames;
  if (fs::is_directory(path)) {
    for (const auto& f : list_images(path)) frames.push_back(read_image(f));
  } else {
    cv::VideoCapture cap(path.string());
    if (!cap.isOpened()) throw IoError("cannot open video " + path.string());
    cv::Mat m;
    while (cap.read(m)) frames.push_back(from_mat(m));
  }
  if (frames.empty()) throw EmptyInput("no frames in " + path.string());
  return frames;
}

inline VideoVolume stack_frames(const std::vector<data::Image>& frames) {
  if (frames.empty()) throw EmptyInput("no frames");
  const Shape s = frames.front().shape();
  VideoVolume v({static_cast<int>(frames.size()), s[0], s[1], s[2]});
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].shape() != s) throw ShapeMismatch("frame sizes differ within the clip");
    std::copy(frames[f].values().begin(), frames[f].values().end(),
              v.values().begin() + static_cast<std::ptrdiff_t>(f * frames[f].size()));
  }
  return v;
}

inline bool is_sample_file(const fs::path& path) {
  if (!fs::is_regular_file(path)) return false;
  std::ifstream f(path, std::ios::binary);
  char magic[sizeof data::kSampleMagic] = {};
  f.read(magic, sizeof magic);
  return f && std::memcmp(magic, data::kSampleMagic, sizeof magic) == 0;
}

// A video from a sample file, an image directory or a video file.
inline VideoVolume read_video(const fs::path& path) {
  if (!fs::exists(path)) throw IoError("no such input " + path.string());
  if (is_sample_file(path)) return data::read_sample(path.string()).clean;
  return stack_frames(read_clip(path));
}

inline std::string frame_name(const std::string& stem, int f, const std::string& suffix = "") {
  char buf[16];
  std::snprintf(buf, sizeof buf, "_%04d", f);
  return stem + buf + suffix + ".png";
}

inline void write_frames(const fs::path& dir, const VideoVolume& v, const std::string& stem,
                         const std::string& suffix = "") {
  fs::create_directories(dir);
  const std::size_t per = v.size() / static_cast<std::size_t>(v.frames());
  for (int f = 0; f < v.frames(); ++f)
    write_image(dir / frame_name(stem, f, suffix), v.data() + f * per, v.height(), v.width(), v.channels());
}

inline void write_mask(const fs::path& dir, const MaskVolume& m, const std::string& stem) {
  fs::create_directories(dir);
  std::vector<float> px(std::size_t(m.height()) * m.width());
  for (int f = 0; f < m.frames(); ++f) {
    for (std::size_t i = 0; i < px.size(); ++i) px[i] = m[f * px.size() + i] ? 1.0f : 0.0f;
    write_image(dir / frame_name(stem, f), px.data(), m.height(), m.width(), 1);
  }
}

// Mask from one image (applied to every frame) or a directory with one image
// per frame. Any nonzero pixel marks a hole.
inline MaskVolume read_mask(const fs::path& path, int frames, int h, int w) {
  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    files = list_images(path);
    if (static_cast<int>(files.size()) != frames)
      throw ShapeMismatch("mask directory has " + std::to_string(files.size()) + " images for " +
                          std::to_string(frames) + " frames");
  } else {
    files.assign(static_cast<std::size_t>(frames), path);
  }
  MaskVolume m(frames, h, w);
  for (int f = 0; f < frames; ++f) {
    const cv::Mat img = cv::imread(files[f].string(), cv::IMREAD_GRAYSCALE);
    if (img.empty()) throw IoError("cannot decode mask " + files[f].string());
    if (img.rows != h || img.cols != w)
      throw ShapeMismatch("mask is " + std::to_string(img.rows) + "x" + std::to_string(img.cols) + ", frames are " +
                          std::to_string(h) + "x" + std::to_string(w));
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) m.at(f, y, x) = img.at<std::uint8_t>(y, x) ? 1 : 0;
  }
  return m;
}

// Center-crop (optional) and resize every frame to l x l.
inline VideoVolume fit_video(const VideoVolume& v, int l, data::CropMode crop) {
  std::vector<data::Image> frames;
  const std::size_t per = v.size() / static_cast<std::size_t>(v.frames());
  for (int f = 0; f < v.frames(); ++f) {
    data::Image img({v.height(), v.width(), v.channels()});
    std::copy(v.data() + f * per, v.data() + (f + 1) * per, img.data());
    if (crop == data::CropMode::CenterSquare) img = data::crop_center_square(img);
    frames.push_back(data::resize_bilinear(img, l, l));
  }
  return stack_frames(frames);
}

}  // namespace vinpaint::io
