#include "mattekit/io/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <map>
#include <sstream>
#include <stdexcept>

namespace mattekit::io {

namespace {

constexpr char kMagic[8] = {'M', 'K', 'C', 'K', 'P', 'T', '\r', '\n'};

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      buf_.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
    }
  }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  void f32(float v) { uint(std::bit_cast<std::uint32_t>(v)); }
  const std::vector<char>& data() const { return buf_; }

 private:
  std::vector<char> buf_;
};

class Reader {
 public:
  Reader(std::vector<char> data, std::string path)
      : data_(std::move(data)), path_(std::move(path)) {}

  void need(std::size_t n, const std::string& what) const {
    if (pos_ + n > data_.size()) {
      throw std::runtime_error(path_ + ": truncated checkpoint while reading " + what);
    }
  }
  template <typename U>
  U uint(const std::string& what) {
    need(sizeof(U), what);
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(U);
    return static_cast<U>(v);
  }
  double f64(const std::string& what) {
    return std::bit_cast<double>(uint<std::uint64_t>(what));
  }
  std::string str(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }
  std::size_t size() const { return data_.size(); }
  const char* at(std::size_t p) const { return data_.data() + p; }
  const std::string& path() const { return path_; }

 private:
  std::vector<char> data_;
  std::string path_;
  std::size_t pos_ = 0;
};

std::string hex(std::uint64_t v) {
  std::ostringstream os;
  os << "0x" << std::hex << v;
  return os.str();
}

}  // namespace

std::vector<std::string> trainable_names(ModelParams<float>& model, Phase phase) {
  std::vector<std::string> names;
  const auto named = model.named_tensors();
  const std::size_t stage1 = 2 * static_cast<std::size_t>(model.stage1_layer_count());
  for (std::size_t i = 0; i < named.size(); ++i) {
    const bool in_stage1 = i < stage1;
    if ((phase == Phase::kStage1Only && in_stage1) ||
        (phase == Phase::kStage2Only && !in_stage1) || phase == Phase::kFineTuneAll) {
      names.push_back(named[i].name);
    }
  }
  return names;
}

Checkpoint make_checkpoint(ModelParams<float>& model, const TrainResult* training) {
  Checkpoint ckpt;
  ckpt.fingerprint = model.fingerprint();
  for (const auto& nt : model.named_tensors()) {
    Tensor<float> copy = *nt.tensor;
    copy.drop_grad();
    ckpt.tensors.emplace_back(nt.name, std::move(copy));
  }
  if (training && !training->optimizer.m.empty()) {
    ckpt.phase = training->last_phase;
    ckpt.train_step = training->steps;
    ckpt.adam = training->optimizer.config;
    ckpt.adam_step = training->optimizer.step;
    const auto names = trainable_names(model, training->last_phase);
    if (names.size() != training->optimizer.m.size()) {
      throw std::logic_error("make_checkpoint: optimizer state does not match phase layout");
    }
    for (std::size_t i = 0; i < names.size(); ++i) {
      ckpt.tensors.emplace_back("adam.m." + names[i], training->optimizer.m[i]);
      ckpt.tensors.emplace_back("adam.v." + names[i], training->optimizer.v[i]);
    }
  }
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.uint<std::uint32_t>(ckpt.version);
  w.uint<std::uint64_t>(ckpt.fingerprint);
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.phase));
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(ckpt.train_step));
  w.f64(ckpt.adam.lr);
  w.f64(ckpt.adam.beta1);
  w.f64(ckpt.adam.beta2);
  w.f64(ckpt.adam.epsilon);
  w.uint<std::uint64_t>(static_cast<std::uint64_t>(ckpt.adam_step));
  w.uint<std::uint32_t>(static_cast<std::uint32_t>(ckpt.tensors.size()));
  std::uint64_t offset = 0;
  for (const auto& [name, t] : ckpt.tensors) {
    w.uint<std::uint32_t>(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    const Shape& s = t.shape();
    for (int d : {s.n, s.c, s.h, s.w}) w.uint<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.uint<std::uint64_t>(offset);
    offset += 4 * t.size();
  }
  w.uint<std::uint64_t>(offset);
  for (const auto& entry : ckpt.tensors) {
    const auto& data = entry.second.data();
    for (Eigen::Index i = 0; i < data.size(); ++i) w.f32(data[i]);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path.string() + ": cannot open for writing");
  out.write(w.data().data(), static_cast<std::streamsize>(w.data().size()));
  if (!out) throw std::runtime_error(path.string() + ": write failed");
}

Checkpoint load_checkpoint(const std::filesystem::path& path,
                           std::optional<std::uint64_t> expected_fingerprint) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path.string() + ": cannot open checkpoint");
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                          std::istreambuf_iterator<char>());
  Reader r(std::move(bytes), path.string());

  if (r.str(sizeof(kMagic), "magic") != std::string(kMagic, sizeof(kMagic))) {
    throw std::runtime_error(path.string() + ": bad magic, not a mattekit checkpoint");
  }
  Checkpoint ckpt;
  ckpt.version = r.uint<std::uint32_t>("version");
  if (ckpt.version != kCheckpointVersion) {
    throw std::runtime_error(path.string() + ": unsupported checkpoint version " +
                             std::to_string(ckpt.version));
  }
  ckpt.fingerprint = r.uint<std::uint64_t>("fingerprint");
  if (expected_fingerprint && *expected_fingerprint != ckpt.fingerprint) {
    throw std::runtime_error(path.string() + ": config fingerprint " +
                             hex(ckpt.fingerprint) + " does not match model " +
                             hex(*expected_fingerprint));
  }
  const auto phase = r.uint<std::uint32_t>("phase");
  if (phase > 2) throw std::runtime_error(path.string() + ": invalid phase field");
  ckpt.phase = static_cast<Phase>(phase);
  ckpt.train_step = static_cast<std::int64_t>(r.uint<std::uint64_t>("train step"));
  ckpt.adam.lr = r.f64("adam lr");
  ckpt.adam.beta1 = r.f64("adam beta1");
  ckpt.adam.beta2 = r.f64("adam beta2");
  ckpt.adam.epsilon = r.f64("adam epsilon");
  ckpt.adam_step = static_cast<std::int64_t>(r.uint<std::uint64_t>("adam step"));
  const auto count = r.uint<std::uint32_t>("tensor count");

  struct Entry {
    std::string name;
    Shape shape;
    std::uint64_t offset;
  };
  std::vector<Entry> dir;
  std::uint64_t expected_offset = 0;
  for (std::uint32_t i = 0; i < count; ++i) {
    Entry e;
    const auto len = r.uint<std::uint32_t>("tensor directory");
    e.name = r.str(len, "tensor directory");
    int dims[4];
    for (int& d : dims) d = static_cast<int>(r.uint<std::uint32_t>("shape of " + e.name));
    e.shape = {dims[0], dims[1], dims[2], dims[3]};
    e.offset = r.uint<std::uint64_t>("offset of " + e.name);
    if (e.offset != expected_offset) {
      throw std::runtime_error(path.string() + ": tensor " + e.name +
                               " has inconsistent payload offset");
    }
    expected_offset += 4 * e.shape.numel();
    dir.push_back(std::move(e));
  }
  const auto payload_bytes = r.uint<std::uint64_t>("payload length");
  if (payload_bytes != expected_offset) {
    throw std::runtime_error(path.string() + ": payload length " +
                             std::to_string(payload_bytes) + " disagrees with directory (" +
                             std::to_string(expected_offset) + ")");
  }
  const std::size_t base = r.pos();
  for (const Entry& e : dir) {
    const std::size_t begin = base + e.offset;
    const std::size_t bytes = 4 * e.shape.numel();
    if (begin + bytes > r.size()) {
      throw std::runtime_error(path.string() + ": truncated payload in tensor " + e.name);
    }
    Tensor<float> t(e.shape);
    for (std::size_t k = 0; k < e.shape.numel(); ++k) {
      std::uint32_t bits = 0;
      const auto* p = reinterpret_cast<const unsigned char*>(r.at(begin + 4 * k));
      for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(p[b]) << (8 * b);
      t.data()[static_cast<Eigen::Index>(k)] = std::bit_cast<float>(bits);
    }
    ckpt.tensors.emplace_back(e.name, std::move(t));
  }
  if (base + payload_bytes != r.size()) {
    throw std::runtime_error(path.string() + ": trailing bytes after payload");
  }
  return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, ModelParams<float>& model) {
  if (ckpt.fingerprint != model.fingerprint()) {
    throw std::runtime_error("checkpoint fingerprint " + hex(ckpt.fingerprint) +
                             " does not match model " + hex(model.fingerprint()));
  }
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, t] : ckpt.tensors) by_name[name] = &t;
  for (auto& nt : model.named_tensors()) {
    const auto it = by_name.find(nt.name);
    if (it == by_name.end()) {
      throw std::runtime_error("checkpoint lacks tensor " + nt.name);
    }
    if (it->second->shape() != nt.tensor->shape()) {
      throw std::runtime_error("checkpoint tensor " + nt.name + " has shape " +
                               it->second->shape().str() + ", model expects " +
                               nt.tensor->shape().str());
    }
    nt.tensor->data() = it->second->data();
  }
}

}  // namespace mattekit::io
