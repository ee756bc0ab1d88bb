#include "ftbrain/image.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "ftbrain/error.hpp"

namespace ftbrain {

Image resize_bilinear(const Image& src, std::size_t out_h, std::size_t out_w) {
  if (out_h == 0 || out_w == 0) throw InvalidArgument("dataio", "resize target dims must be positive");
  if (src.height == 0 || src.width == 0) throw InvalidArgument("dataio", "cannot resize an empty image");
  Image out(out_h, out_w);
  const double sy = static_cast<double>(src.height) / static_cast<double>(out_h);
  const double sx = static_cast<double>(src.width) / static_cast<double>(out_w);
  const double max_y = static_cast<double>(src.height - 1);
  const double max_x = static_cast<double>(src.width - 1);

  // Horizontal taps are shared by every output row.
  std::vector<std::size_t> x0(out_w), x1(out_w);
  std::vector<double> fx(out_w);
  for (std::size_t c = 0; c < out_w; ++c) {
    const double px = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_x);
    x0[c] = static_cast<std::size_t>(px);
    x1[c] = std::min(x0[c] + 1, src.width - 1);
    fx[c] = px - static_cast<double>(x0[c]);
  }
  for (std::size_t r = 0; r < out_h; ++r) {
    const double py = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_y);
    const std::size_t y0 = static_cast<std::size_t>(py);
    const std::size_t y1 = std::min(y0 + 1, src.height - 1);
    const double fy = py - static_cast<double>(y0);
    for (std::size_t c = 0; c < out_w; ++c) {
      const double top = (1.0 - fx[c]) * src.at(y0, x0[c]) + fx[c] * src.at(y0, x1[c]);
      const double bot = (1.0 - fx[c]) * src.at(y1, x0[c]) + fx[c] * src.at(y1, x1[c]);
      out.at(r, c) = static_cast<float>((1.0 - fy) * top + fy * bot);
    }
  }
  return out;
}

Image normalize(const Image& src, VoxelType source) {
  Image out = src;
  if (source == VoxelType::U8) {
    for (float& v : out.pixels) v = std::clamp(v / 255.0f, 0.0f, 1.0f);
    return out;
  }
  if (out.pixels.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(out.pixels.begin(), out.pixels.end());
  const float lo = *lo_it, range = *hi_it - *lo_it;
  for (float& v : out.pixels) v = range > 0.0f ? (v - lo) / range : 0.0f;
  return out;
}

namespace {

// Reads a PNM header ("P5"/"P6", width, height, maxval) and returns the
// stream positioned at the first data byte.
void read_pnm_header(std::ifstream& in, const std::string& magic, std::size_t& w, std::size_t& h,
                     const std::filesystem::path& path) {
  std::string m;
  in >> m;
  if (m != magic) throw FormatError("dataio", path.string() + ": expected " + magic + " image");
  auto next_int = [&]() {
    in >> std::ws;
    while (in.peek() == '#') {
      std::string line;
      std::getline(in, line);
      in >> std::ws;
    }
    long v = -1;
    in >> v;
    if (!in || v <= 0) throw FormatError("dataio", path.string() + ": bad image header");
    return static_cast<std::size_t>(v);
  };
  w = next_int();
  h = next_int();
  if (next_int() != 255) throw FormatError("dataio", path.string() + ": only maxval 255 supported");
  in.get();
}

}  // namespace

void write_pgm(const Image& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dataio", "cannot open " + path.string() + " for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  std::vector<char> bytes(img.size());
  for (std::size_t i = 0; i < img.size(); ++i) {
    const float v = std::clamp(img.pixels[i], 0.0f, 1.0f);
    bytes[i] = static_cast<char>(static_cast<std::uint8_t>(std::lround(v * 255.0f)));
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("dataio", "write failed for " + path.string());
}

Image read_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("dataio", "cannot open " + path.string());
  std::size_t w = 0, h = 0;
  read_pnm_header(in, "P5", w, h, path);
  std::vector<unsigned char> bytes(w * h);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (in.gcount() != static_cast<std::streamsize>(bytes.size())) {
    throw FormatError("dataio", path.string() + ": truncated PGM data");
  }
  Image img(h, w);
  for (std::size_t i = 0; i < bytes.size(); ++i) img.pixels[i] = static_cast<float>(bytes[i]) / 255.0f;
  return img;
}

void write_ppm(const RgbImage& img, const std::filesystem::path& path) {
  if (img.rgb.size() != img.height * img.width * 3) {
    throw InvalidArgument("dataio", "RGB buffer does not match image dims");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dataio", "cannot open " + path.string() + " for writing");
  out << "P6\n" << img.width << ' ' << img.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (!out) throw Error("dataio", "write failed for " + path.string());
}

RgbImage read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("dataio", "cannot open " + path.string());
  RgbImage img;
  read_pnm_header(in, "P6", img.width, img.height, path);
  img.rgb.resize(img.width * img.height * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw FormatError("dataio", path.string() + ": truncated PPM data");
  }
  return img;
}

}  // namespace ftbrain
