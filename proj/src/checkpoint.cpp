#include <zlib.h>

#include <cstring>
#include <fstream>
#include <iterator>

#include "efenet/errors.hpp"
#include "efenet/training.hpp"

namespace efenet {
namespace {

constexpr char kMagic[4] = {'E', 'F', 'C', 'K'};

// Little-endian host assumed; values are copied byte for byte.
class Writer {
 public:
  template <class T>
  void pod(T v) {
    const auto* p = reinterpret_cast<const char*>(&v);
    buf_.insert(buf_.end(), p, p + sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint64_t>(s.size()));
    buf_.insert(buf_.end(), s.begin(), s.end());
  }
  void tensor(const Tensor& t) {
    pod(static_cast<std::uint32_t>(t.channels()));
    pod(static_cast<std::uint32_t>(t.height()));
    pod(static_cast<std::uint32_t>(t.width()));
    const auto* p = reinterpret_cast<const char*>(t.data());
    buf_.insert(buf_.end(), p, p + t.size() * sizeof(float));
  }
  const std::vector<char>& bytes() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(const char* data, std::size_t size) : p_(data), end_(data + size) {}
  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_, sizeof(T));
    p_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint64_t>();
    need(n);
    std::string s(p_, p_ + n);
    p_ += n;
    return s;
  }
  Tensor tensor() {
    const auto c = pod<std::uint32_t>(), h = pod<std::uint32_t>(), w = pod<std::uint32_t>();
    const std::uint64_t count = std::uint64_t{c} * h * w;
    if (count == 0 || count > static_cast<std::uint64_t>(end_ - p_) / sizeof(float))
      throw DataError("checkpoint: bad tensor shape");
    Tensor t(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    std::memcpy(t.data(), p_, t.size() * sizeof(float));
    p_ += t.size() * sizeof(float);
    return t;
  }
  bool done() const { return p_ == end_; }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw DataError("checkpoint: truncated payload");
  }
  const char* p_;
  const char* end_;
};

std::uint32_t checksum(const std::vector<char>& bytes) {
  return static_cast<std::uint32_t>(
      crc32(crc32(0L, Z_NULL, 0), reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size())));
}

}  // namespace

void save_checkpoint(const TrainState& state, const std::filesystem::path& path) {
  Writer w;
  const ModelParams& model = state.params;
  w.pod(static_cast<std::uint32_t>(model.image_channels()));
  w.pod(static_cast<std::uint32_t>(model.sequence_length()));
  w.pod(static_cast<std::uint8_t>(model.refiner.residual ? 1 : 0));
  w.pod(static_cast<std::int64_t>(state.adam_step));
  w.pod(static_cast<std::int64_t>(state.iteration));
  w.str(state.rng_state);
  w.str(state.config_json);
  const auto params = model.parameters();
  w.pod(static_cast<std::uint32_t>(params.size()));
  for (const ag::Parameter* p : params) {
    w.str(p->name);
    w.tensor(p->value);
  }
  const bool has_moments = state.adam_m.size() == params.size() && state.adam_v.size() == params.size();
  w.pod(static_cast<std::uint8_t>(has_moments ? 1 : 0));
  if (has_moments)
    for (std::size_t i = 0; i < params.size(); ++i) {
      w.tensor(state.adam_m[i]);
      w.tensor(state.adam_v[i]);
    }

  const std::vector<char>& payload = w.bytes();
  const std::uint32_t crc = checksum(payload);
  const std::uint64_t size = payload.size();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint '" + path.string() + "'");
  out.write(kMagic, sizeof kMagic);
  out.write(reinterpret_cast<const char*>(&kCheckpointVersion), sizeof kCheckpointVersion);
  out.write(reinterpret_cast<const char*>(&size), sizeof size);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(&crc), sizeof crc);
  if (!out) throw DataError("failed writing checkpoint '" + path.string() + "'");
}

TrainState load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<char> file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  constexpr std::size_t header = sizeof kMagic + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (file.size() < header + sizeof(std::uint32_t) || std::memcmp(file.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("'" + path.string() + "' is not a checkpoint");
  std::uint32_t version;
  std::memcpy(&version, file.data() + sizeof kMagic, sizeof version);
  if (version != kCheckpointVersion)
    throw DataError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                    std::to_string(kCheckpointVersion) + ")");
  std::uint64_t size;
  std::memcpy(&size, file.data() + sizeof kMagic + sizeof version, sizeof size);
  if (file.size() != header + size + sizeof(std::uint32_t)) throw DataError("checkpoint: size mismatch");
  const std::vector<char> payload(file.begin() + header, file.begin() + static_cast<std::ptrdiff_t>(header + size));
  std::uint32_t crc;
  std::memcpy(&crc, file.data() + header + size, sizeof crc);
  if (crc != checksum(payload)) throw DataError("checkpoint: checksum mismatch");

  Reader r(payload.data(), payload.size());
  const auto channels = r.pod<std::uint32_t>();
  const auto n = r.pod<std::uint32_t>();
  const bool residual = r.pod<std::uint8_t>() != 0;
  if ((channels != 1 && channels != 3) || n < 1 || n > 1024) throw DataError("checkpoint: bad model header");
  TrainState s;
  s.params = ModelParams::create(static_cast<int>(channels), static_cast<int>(n), 0, nn::HeadInit::Zero);
  s.params.refiner.residual = residual;
  s.adam_step = r.pod<std::int64_t>();
  s.iteration = static_cast<int>(r.pod<std::int64_t>());
  s.rng_state = r.str();
  s.config_json = r.str();
  const auto params = s.params.parameters();
  if (r.pod<std::uint32_t>() != params.size()) throw DataError("checkpoint: parameter count mismatch");
  for (ag::Parameter* p : params) {
    if (r.str() != p->name) throw DataError("checkpoint: unexpected parameter order at '" + p->name + "'");
    Tensor t = r.tensor();
    if (t.shape() != p->value.shape()) throw DataError("checkpoint: shape mismatch for '" + p->name + "'");
    p->value = std::move(t);
  }
  if (r.pod<std::uint8_t>()) {
    for (ag::Parameter* p : params) {
      s.adam_m.push_back(r.tensor());
      s.adam_v.push_back(r.tensor());
      if (s.adam_m.back().shape() != p->value.shape() || s.adam_v.back().shape() != p->value.shape())
        throw DataError("checkpoint: optimizer state shape mismatch for '" + p->name + "'");
    }
  } else {
    for (const ag::Parameter* p : params) {
      s.adam_m.emplace_back(p->value.shape());
      s.adam_v.emplace_back(p->value.shape());
    }
  }
  if (!r.done()) throw DataError("checkpoint: trailing bytes in payload");
  s.params.zero_grad();
  return s;
}

}  // namespace efenet
