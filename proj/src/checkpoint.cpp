#include "ftbrain/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <limits>

#include "ftbrain/error.hpp"

namespace ftbrain {

const Tensor* Checkpoint::find(std::string_view name) const {
  for (const auto& [n, t] : tensors) {
    if (n == name) return &t;
  }
  return nullptr;
}

Checkpoint make_checkpoint(const Model& model, std::size_t epoch) {
  Checkpoint c;
  for (const auto& p : model.parameters()) c.tensors.emplace_back(p.name, p.value);
  c.metadata = {{"spec", model.spec().to_json()}, {"epoch", epoch}, {"seed", model.seed()}};
  return c;
}

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) out.push_back(static_cast<char>((v >> (8 * k)) & 0xff));
}

class Reader {
 public:
  Reader(std::string bytes, std::string path) : b_(std::move(bytes)), path_(std::move(path)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int k = 0; k < 4; ++k) v |= std::uint32_t{static_cast<unsigned char>(b_[pos_ + k])} << (8 * k);
    pos_ += 4;
    return v;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = b_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  void need(std::size_t n) const {
    if (b_.size() - pos_ < n) throw FormatError("model", path_ + ": truncated checkpoint");
  }

 private:
  std::string b_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::string out = "MNET";
  put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& [name, t] : ckpt.tensors) {
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
    for (float v : t.storage()) {
      std::uint32_t bits;
      std::memcpy(&bits, &v, 4);
      put_u32(out, bits);
    }
  }
  const std::string meta = ckpt.metadata.dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;

  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("model", "cannot open " + path.string() + " for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw Error("model", "write failed for " + path.string());
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("model", "cannot open " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());
  if (r.bytes(4) != "MNET") throw FormatError("model", path.string() + ": bad magic, not an MNET file");
  Checkpoint c;
  const std::uint32_t count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.bytes(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank == 0 || rank > 8) throw FormatError("model", path.string() + ": bad rank for '" + name + "'");
    Shape shape(rank);
    std::uint64_t n = 1;
    for (auto& d : shape) {
      d = r.u32();
      if (d == 0) throw FormatError("model", path.string() + ": zero extent in '" + name + "'");
      n *= d;
      if (n > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("model", path.string() + ": tensor '" + name + "' too large");
      }
    }
    r.need(n * 4);
    std::vector<float> data(n);
    for (auto& v : data) {
      const std::uint32_t bits = r.u32();
      std::memcpy(&v, &bits, 4);
    }
    c.tensors.emplace_back(std::move(name), Tensor(std::move(shape), std::move(data)));
  }
  const std::string meta = r.bytes(r.u32());
  try {
    c.metadata = nlohmann::json::parse(meta);
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("model", path.string() + ": bad metadata JSON: " + e.what());
  }
  return c;
}

void save_checkpoint(const Model& model, const std::filesystem::path& path, std::size_t epoch) {
  write_checkpoint(make_checkpoint(model, epoch), path);
}

void load_parameters(const Checkpoint& ckpt, Model& model) {
  for (auto& p : model.parameters()) {
    const Tensor* t = ckpt.find(p.name);
    if (t == nullptr) throw InvalidArgument("model", "checkpoint lacks tensor '" + p.name + "'");
    if (t->shape() != p.value.shape()) {
      throw InvalidArgument("model", "tensor '" + p.name + "' has shape " + shape_string(t->shape()) +
                                         " but the spec expects " + shape_string(p.value.shape()));
    }
  }
  if (ckpt.tensors.size() != model.parameters().size()) {
    for (const auto& [name, t] : ckpt.tensors) {
      bool known = false;
      for (const auto& p : model.parameters()) known = known || p.name == name;
      if (!known) throw InvalidArgument("model", "checkpoint tensor '" + name + "' is not in the spec");
    }
  }
  for (auto& p : model.parameters()) p.value = *ckpt.find(p.name);
}

Model load_checkpoint(const std::filesystem::path& path, const ModelSpec& spec) {
  const Checkpoint c = read_checkpoint(path);
  const std::uint64_t seed = c.metadata.value("seed", std::uint64_t{0});
  Model m(spec, seed);
  load_parameters(c, m);
  return m;
}

Model model_from_checkpoint(const Checkpoint& ckpt) {
  Model m(ckpt.spec(), ckpt.metadata.value("seed", std::uint64_t{0}));
  load_parameters(ckpt, m);
  return m;
}

std::size_t transfer_conv_weights(const Checkpoint& source, Model& target) {
  std::size_t copied = 0;
  for (auto& p : target.parameters()) {
    if (p.name.rfind("conv", 0) != 0) continue;
    const Tensor* t = source.find(p.name);
    if (t == nullptr) throw InvalidArgument("model", "source checkpoint lacks '" + p.name + "'");
    if (t->shape() != p.value.shape()) {
      throw InvalidArgument("model", "cannot transfer '" + p.name + "': shape " +
                                         shape_string(t->shape()) + " vs " +
                                         shape_string(p.value.shape()));
    }
    p.value = *t;
    ++copied;
  }
  return copied;
}

}  // namespace ftbrain
