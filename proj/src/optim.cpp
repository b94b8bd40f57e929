#include "anchorrank/optim.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace anchorrank {

void adam_step(ParamSlot& slot, double lr, const AdamConfig& cfg) {
  Tensor& g = slot.gradient;
  if (!g.all_finite()) throw NumericError("adam_step: non-finite gradient in '" + slot.name + "'");
  const std::size_t skip = slot.freeze_row0 ? slot.value.cols() : 0;
  slot.step += 1;
  const double t = static_cast<double>(slot.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = skip; i < g.size(); ++i) {
    slot.moment1[i] = cfg.beta1 * slot.moment1[i] + (1.0 - cfg.beta1) * g[i];
    slot.moment2[i] = cfg.beta2 * slot.moment2[i] + (1.0 - cfg.beta2) * g[i] * g[i];
    const double mhat = slot.moment1[i] / c1;
    const double vhat = slot.moment2[i] / c2;
    slot.value[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
  for (std::size_t i = 0; i < skip; ++i) slot.value[i] = 0.0;
  g.fill(0.0);
  slot.touch();
}

void reset_optimizer(ParamSlot& slot) {
  slot.moment1.fill(0.0);
  slot.moment2.fill(0.0);
  slot.step = 0;
}

namespace {

constexpr char kMagic[8] = {'A', 'R', 'C', 'K', 'P', 'T', '\0', '\0'};

template <typename T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw CheckpointError("truncated checkpoint: " + path.string());
  return v;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, std::span<const ParamSlot* const> slots) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open for writing: " + path.string());
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, slots.size());
  for (const ParamSlot* s : slots) {
    put<std::uint64_t>(out, s->name.size());
    out.write(s->name.data(), static_cast<std::streamsize>(s->name.size()));
    put<std::uint64_t>(out, s->value.rank());
    for (std::size_t d : s->value.shape()) put<std::uint64_t>(out, d);
    out.write(reinterpret_cast<const char*>(s->value.data()),
              static_cast<std::streamsize>(s->value.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed: " + path.string());
}

void load_checkpoint(const std::filesystem::path& path, std::span<ParamSlot* const> slots) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw CheckpointError("not a checkpoint: " + path.string());
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion)
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  const auto count = get<std::uint64_t>(in, path);
  std::map<std::string, Tensor> stored;
  for (std::uint64_t k = 0; k < count; ++k) {
    const auto len = get<std::uint64_t>(in, path);
    std::string name(len, '\0');
    in.read(name.data(), static_cast<std::streamsize>(len));
    const auto rank = get<std::uint64_t>(in, path);
    std::vector<std::size_t> shape;
    for (std::uint64_t d = 0; d < rank; ++d) shape.push_back(get<std::uint64_t>(in, path));
    Tensor t(shape);
    in.read(reinterpret_cast<char*>(t.data()), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) throw CheckpointError("truncated checkpoint: " + path.string());
    stored.emplace(std::move(name), std::move(t));
  }
  for (ParamSlot* s : slots) {
    auto it = stored.find(s->name);
    if (it == stored.end()) throw CheckpointError("checkpoint lacks slot '" + s->name + "'");
    if (!it->second.same_shape(s->value))
      throw CheckpointError("shape mismatch for slot '" + s->name + "': stored " + it->second.shape_string() +
                            ", expected " + s->value.shape_string());
    s->value = std::move(it->second);
    s->touch();
  }
}

}  // namespace anchorrank
