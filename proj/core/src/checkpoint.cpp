#include "tatc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian");

namespace tatc::nn {

namespace {

constexpr std::string_view kMagic = "TATCCKPT";

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

void put_string(std::string& out, std::string_view s) {
  put<std::uint32_t>(out, static_cast<std::uint32_t>(s.size()));
  out.append(s);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }

  void get_doubles(double* dst, std::size_t n) {
    need(n * sizeof(double));
    std::memcpy(dst, bytes_.data() + pos_, n * sizeof(double));
    pos_ += n * sizeof(double);
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("checkpoint: truncated data");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void Checkpoint::add(std::string name, Eigen::MatrixXd value) {
  if (has(name)) throw std::invalid_argument("checkpoint: duplicate tensor '" + name + "'");
  tensors.push_back({std::move(name), std::move(value)});
}

bool Checkpoint::has(std::string_view name) const {
  for (const auto& e : tensors) {
    if (e.name == name) return true;
  }
  return false;
}

const Eigen::MatrixXd& Checkpoint::get(std::string_view name) const {
  for (const auto& e : tensors) {
    if (e.name == name) return e.value;
  }
  throw std::out_of_range("checkpoint: no tensor named '" + std::string(name) + "'");
}

const std::string& Checkpoint::meta_value(const std::string& key) const {
  const auto it = meta.find(key);
  if (it == meta.end()) throw std::out_of_range("checkpoint: no metadata key '" + key + "'");
  return it->second;
}

void Checkpoint::add_mlp(const std::string& prefix, const Mlp& net) {
  meta[prefix + ".arch"] = encode_architecture(net.arch());
  static constexpr const char* kNames[] = {"w1", "b1", "w2", "b2", "w3", "b3"};
  for (std::size_t k = 0; k < net.params().size(); ++k) {
    add(prefix + "." + kNames[k], net.params()[k]);
  }
}

Mlp Checkpoint::get_mlp(const std::string& prefix) const {
  Mlp net = Mlp::zeros(decode_architecture(meta_value(prefix + ".arch")));
  static constexpr const char* kNames[] = {"w1", "b1", "w2", "b2", "w3", "b3"};
  for (std::size_t k = 0; k < net.params().size(); ++k) {
    const auto& t = get(prefix + "." + kNames[k]);
    auto& dst = net.params()[k];
    if (t.rows() != dst.rows() || t.cols() != dst.cols()) {
      throw ShapeError("checkpoint: tensor " + prefix + "." + kNames[k] +
                       " does not match the stored architecture");
    }
    dst = t;
  }
  return net;
}

void Checkpoint::add_optimizer(const std::string& prefix, const Optimizer& opt) {
  meta[prefix + ".steps"] = std::to_string(opt.step_count());
  for (std::size_t k = 0; k < opt.state().size(); ++k) {
    add(prefix + ".s" + std::to_string(k), opt.state()[k]);
  }
}

void Checkpoint::restore_optimizer(const std::string& prefix, Optimizer& opt) const {
  Tensors state;
  for (std::size_t k = 0; k < opt.state().size(); ++k) {
    state.push_back(get(prefix + ".s" + std::to_string(k)));
  }
  opt.restore(std::move(state), std::stoll(meta_value(prefix + ".steps")));
}

std::string serialize(const Checkpoint& ckpt) {
  std::string out(kMagic);
  put<std::uint32_t>(out, Checkpoint::kVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.meta.size()));
  for (const auto& [k, v] : ckpt.meta) {
    put_string(out, k);
    put_string(out, v);
  }
  put<std::uint32_t>(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& e : ckpt.tensors) {
    put_string(out, e.name);
    put<std::int64_t>(out, e.value.rows());
    put<std::int64_t>(out, e.value.cols());
    out.append(reinterpret_cast<const char*>(e.value.data()),
               static_cast<std::size_t>(e.value.size()) * sizeof(double));
  }
  return out;
}

Checkpoint deserialize(std::string_view bytes) {
  if (!bytes.starts_with(kMagic)) throw std::runtime_error("checkpoint: bad magic");
  Reader in(bytes.substr(kMagic.size()));
  const auto version = in.get<std::uint32_t>();
  if (version != Checkpoint::kVersion) {
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(version));
  }
  Checkpoint ckpt;
  const auto n_meta = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_meta; ++i) {
    auto key = in.get_string();
    ckpt.meta[key] = in.get_string();
  }
  const auto n_tensors = in.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < n_tensors; ++i) {
    auto name = in.get_string();
    const auto rows = in.get<std::int64_t>();
    const auto cols = in.get<std::int64_t>();
    if (rows < 0 || cols < 0) throw std::runtime_error("checkpoint: negative tensor shape");
    Eigen::MatrixXd value(rows, cols);
    in.get_doubles(value.data(), static_cast<std::size_t>(rows * cols));
    ckpt.add(std::move(name), std::move(value));
  }
  if (!in.done()) throw std::runtime_error("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
  const auto bytes = serialize(ckpt);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("checkpoint: cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

std::string encode_architecture(const Architecture& arch) {
  std::string out = std::to_string(arch.in_dim) + "," + std::to_string(arch.hidden);
  for (const auto& h : arch.heads) {
    out += h.kind == HeadKind::kLogSoftmax ? ",logsoftmax:" : ",linear:";
    out += std::to_string(h.size);
  }
  return out;
}

Architecture decode_architecture(std::string_view text) {
  std::vector<std::string> fields;
  std::stringstream ss{std::string(text)};
  for (std::string f; std::getline(ss, f, ',');) fields.push_back(f);
  if (fields.size() < 3) throw std::runtime_error("checkpoint: malformed architecture");
  Architecture arch;
  arch.in_dim = std::stoi(fields[0]);
  arch.hidden = std::stoi(fields[1]);
  arch.heads.clear();
  for (std::size_t i = 2; i < fields.size(); ++i) {
    const auto colon = fields[i].find(':');
    if (colon == std::string::npos) throw std::runtime_error("checkpoint: malformed head");
    const auto kind = fields[i].substr(0, colon);
    Head h;
    h.size = std::stoi(fields[i].substr(colon + 1));
    if (kind == "linear") {
      h.kind = HeadKind::kLinear;
    } else if (kind == "logsoftmax") {
      h.kind = HeadKind::kLogSoftmax;
    } else {
      throw std::runtime_error("checkpoint: unknown head kind '" + kind + "'");
    }
    arch.heads.push_back(h);
  }
  return arch;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace tatc::nn
