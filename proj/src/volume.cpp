#include "ftbrain/volume.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <limits>

#include "ftbrain/error.hpp"

namespace ftbrain {

std::string_view label_name(Label l) {
  switch (l) {
    case Label::AD: return "AD";
    case Label::MCI: return "MCI";
    case Label::NC: return "NC";
  }
  return "?";
}

Label parse_label(std::string_view s) {
  if (s == "AD") return Label::AD;
  if (s == "MCI") return Label::MCI;
  if (s == "NC") return Label::NC;
  throw InvalidArgument("dataio", "unknown label '" + std::string(s) + "'");
}

float Volume::value(std::size_t z, std::size_t y, std::size_t x) const {
  const std::size_t i = (z * dims.y + y) * dims.x + x;
  if (const auto* u8 = std::get_if<std::vector<std::uint8_t>>(&voxels)) return (*u8)[i];
  return std::get<std::vector<float>>(voxels)[i];
}

Image Volume::plane(std::size_t z) const {
  if (z >= dims.z) throw InvalidArgument("dataio", "slice index out of range");
  Image img(dims.y, dims.x);
  const std::size_t off = z * dims.y * dims.x;
  std::visit(
      [&](const auto& buf) {
        for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<float>(buf[off + i]);
      },
      voxels);
  return img;
}

std::vector<SliceRecord> extract_axial(const Volume& v) {
  std::vector<SliceRecord> out;
  out.reserve(v.dims.z);
  for (std::size_t z = 0; z < v.dims.z; ++z) {
    out.push_back(SliceRecord{v.subject_id, v.label, z, 0.0, v.plane(z), v.type()});
  }
  return out;
}

void normalize(SliceRecord& s) { s.pixels = normalize(s.pixels, s.source_type); }

namespace {

constexpr std::array<char, 4> kMagic = {'M', 'V', 'O', 'L'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::filesystem::path& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (in.gcount() != 4) throw FormatError("dataio", path.string() + ": truncated MVOL header");
  return std::uint32_t{b[0]} | (std::uint32_t{b[1]} << 8) | (std::uint32_t{b[2]} << 16) |
         (std::uint32_t{b[3]} << 24);
}

}  // namespace

void save_volume(const Volume& v, const std::filesystem::path& path) {
  const std::size_t n = v.dims.count();
  const std::size_t stored = std::visit([](const auto& b) { return b.size(); }, v.voxels);
  if (n == 0 || stored != n) throw InvalidArgument("dataio", "volume voxel count does not match dims");
  constexpr std::size_t kMax = std::numeric_limits<std::uint32_t>::max();
  if (v.dims.z > kMax || v.dims.y > kMax || v.dims.x > kMax) {
    throw InvalidArgument("dataio", "volume dims exceed u32");
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("dataio", "cannot open " + path.string() + " for writing");
  out.write(kMagic.data(), 4);
  put_u32(out, static_cast<std::uint32_t>(v.dims.z));
  put_u32(out, static_cast<std::uint32_t>(v.dims.y));
  put_u32(out, static_cast<std::uint32_t>(v.dims.x));
  put_u32(out, static_cast<std::uint32_t>(v.type()));
  if (const auto* u8 = std::get_if<std::vector<std::uint8_t>>(&v.voxels)) {
    out.write(reinterpret_cast<const char*>(u8->data()), static_cast<std::streamsize>(n));
  } else {
    const auto& f = std::get<std::vector<float>>(v.voxels);
    std::vector<unsigned char> bytes(n * 4);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits;
      std::memcpy(&bits, &f[i], 4);
      for (int k = 0; k < 4; ++k) bytes[i * 4 + k] = static_cast<unsigned char>(bits >> (8 * k));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  }
  if (!out) throw Error("dataio", "write failed for " + path.string());
}

Volume load_volume(const std::filesystem::path& path, std::string subject_id, Label label) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("dataio", "cannot open " + path.string());
  std::array<char, 4> magic{};
  in.read(magic.data(), 4);
  if (in.gcount() != 4 || magic != kMagic) throw FormatError("dataio", path.string() + ": bad magic, not an MVOL file");
  Volume v;
  v.subject_id = subject_id.empty() ? path.stem().string() : std::move(subject_id);
  v.label = label;
  const std::uint64_t z = get_u32(in, path), y = get_u32(in, path), x = get_u32(in, path);
  const std::uint32_t dtype = get_u32(in, path);
  if (z == 0 || y == 0 || x == 0) throw FormatError("dataio", path.string() + ": zero dimension");
  if (dtype > 1) throw FormatError("dataio", path.string() + ": unknown dtype " + std::to_string(dtype));
  // z*y fits in 64 bits; guard the final product and the byte count.
  const std::uint64_t zy = z * y;
  const std::uint64_t elem = dtype == 0 ? 1 : 4;
  if (x > std::numeric_limits<std::uint64_t>::max() / zy / elem ||
      zy * x * elem > static_cast<std::uint64_t>(std::numeric_limits<std::streamsize>::max())) {
    throw FormatError("dataio", path.string() + ": dim overflow");
  }
  v.dims = Dims{static_cast<std::size_t>(z), static_cast<std::size_t>(y), static_cast<std::size_t>(x)};
  const std::size_t n = v.dims.count();

  const auto here = in.tellg();
  in.seekg(0, std::ios::end);
  const auto remaining = static_cast<std::uint64_t>(in.tellg() - here);
  in.seekg(here);
  if (remaining < n * elem) {
    throw FormatError("dataio", path.string() + ": truncated data, header declares " +
                                    std::to_string(n * elem) + " bytes, file holds " +
                                    std::to_string(remaining));
  }
  if (dtype == 0) {
    std::vector<std::uint8_t> buf(n);
    in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(n));
    v.voxels = std::move(buf);
  } else {
    std::vector<unsigned char> bytes(n * 4);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    std::vector<float> buf(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = 0;
      for (int k = 0; k < 4; ++k) bits |= std::uint32_t{bytes[i * 4 + k]} << (8 * k);
      std::memcpy(&buf[i], &bits, 4);
    }
    v.voxels = std::move(buf);
  }
  return v;
}

}  // namespace ftbrain
