#include "scale/params.hpp"

#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace scale::nn {

Mat& ParamSet::at(const std::string& name) {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::runtime_error("missing parameter: " + name);
  return it->second;
}

const Mat& ParamSet::at(const std::string& name) const {
  auto it = tensors.find(name);
  if (it == tensors.end()) throw std::runtime_error("missing parameter: " + name);
  return it->second;
}

bool ParamSet::all_finite() const {
  for (const auto& [name, t] : tensors) {
    if (!t.allFinite()) return false;
  }
  return true;
}

ParamSet ParamSet::subset(const std::string& prefix) const {
  ParamSet out;
  out.init_seed = init_seed;
  for (const auto& [name, t] : tensors) {
    if (name.rfind(prefix, 0) == 0) out.tensors[name] = t;
  }
  return out;
}

ad::Var ParamVars::at(const std::string& name) const {
  auto it = vars.find(name);
  if (it == vars.end()) throw std::runtime_error("missing parameter var: " + name);
  return it->second;
}

ParamVars make_vars(ad::Graph& g, const ParamSet& p) {
  ParamVars v;
  for (const auto& [name, t] : p.tensors) v.vars[name] = g.leaf(t, true);
  return v;
}

ParamVars make_vars(ad::Graph& g, const ParamSet& p, const std::string& trainable_prefix) {
  ParamVars v;
  for (const auto& [name, t] : p.tensors) {
    const bool trainable = name.rfind(trainable_prefix, 0) == 0;
    v.vars[name] = g.leaf(t, trainable);
  }
  return v;
}

void collect_grads(ad::Graph& g, const ParamVars& vars, GradMap& out) {
  for (const auto& [name, var] : vars.vars) {
    if (!g.node(var.idx).requires_grad) continue;
    const Mat& grad = g.node(var.idx).grad;
    if (grad.size() == 0) {
      out[name] = Mat::Zero(var.val().rows(), var.val().cols());
    } else {
      out[name] = grad;
    }
  }
}

namespace {

constexpr char kMagic[4] = {'S', 'C', 'K', '1'};

template <typename T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("checkpoint: truncated file");
  return v;
}

}  // namespace

void save_checkpoint(const ParamSet& p, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, 1);  // version
  write_pod<uint64_t>(out, p.init_seed);
  write_pod<uint32_t>(out, static_cast<uint32_t>(p.tensors.size()));
  for (const auto& [name, t] : p.tensors) {
    write_pod<uint32_t>(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<uint64_t>(out, static_cast<uint64_t>(t.rows()));
    write_pod<uint64_t>(out, static_cast<uint64_t>(t.cols()));
    out.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(sizeof(double) * t.size()));
  }
}

ParamSet load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw std::runtime_error("checkpoint: bad magic in " + path);
  }
  const auto version = read_pod<uint32_t>(in);
  if (version != 1) throw std::runtime_error("checkpoint: unsupported version");
  ParamSet p;
  p.init_seed = read_pod<uint64_t>(in);
  const auto count = read_pod<uint32_t>(in);
  for (uint32_t i = 0; i < count; ++i) {
    const auto name_len = read_pod<uint32_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    const auto rows = read_pod<uint64_t>(in);
    const auto cols = read_pod<uint64_t>(in);
    Mat t(rows, cols);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(sizeof(double) * rows * cols));
    if (!in) throw std::runtime_error("checkpoint: truncated tensor " + name);
    p.tensors[name] = std::move(t);
  }
  return p;
}

static void hash_bytes(uint64_t& h, const void* data, size_t n) {
  const auto* bytes = static_cast<const uint8_t*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ull;
  }
}

uint64_t param_hash(const ParamSet& p) { return param_hash(p, ""); }

uint64_t param_hash(const ParamSet& p, const std::string& prefix) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& [name, t] : p.tensors) {
    if (!prefix.empty() && name.rfind(prefix, 0) != 0) continue;
    hash_bytes(h, name.data(), name.size());
    hash_bytes(h, t.data(), sizeof(double) * t.size());
  }
  return h;
}

}  // namespace scale::nn
