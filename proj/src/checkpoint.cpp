#include "gecco/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <sstream>

namespace gecco {

std::uint32_t crc32(const unsigned char* data, std::size_t len) {
  static std::uint32_t table[256];
  static bool init = false;
  if (!init) {
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      table[i] = c;
    }
    init = true;
  }
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::size_t i = 0; i < len; ++i) {
    crc = table[(crc ^ data[i]) & 0xFFu] ^ (crc >> 8);
  }
  return crc ^ 0xFFFFFFFFu;
}

namespace {

constexpr char kMagic[4] = {'G', 'E', 'C', 'O'};
constexpr std::uint16_t kVersion = 1;

void put_u16(std::vector<unsigned char>& buf, std::uint16_t v) {
  buf.push_back(static_cast<unsigned char>(v));
  buf.push_back(static_cast<unsigned char>(v >> 8));
}

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int s = 0; s < 32; s += 8) buf.push_back(static_cast<unsigned char>(v >> s));
}

void put_f32(std::vector<unsigned char>& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

void put_tensor(std::vector<unsigned char>& buf, const Tensor2D& t) {
  put_u32(buf, static_cast<std::uint32_t>(t.rows()));
  put_u32(buf, static_cast<std::uint32_t>(t.cols()));
  for (real v : t.data()) put_f32(buf, static_cast<float>(v));
}

// Bounds-checked reader over the loaded file.
struct Cursor {
  const unsigned char* p;
  std::size_t remaining;
  const std::string& path;

  void need(std::size_t n) const {
    if (remaining < n) throw DataError("checkpoint truncated: " + path);
  }
  std::uint16_t u16() {
    need(2);
    const std::uint16_t v = static_cast<std::uint16_t>(p[0]) |
                            static_cast<std::uint16_t>(p[1]) << 8;
    p += 2;
    remaining -= 2;
    return v;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    p += 4;
    remaining -= 4;
    return v;
  }
  float f32() {
    const std::uint32_t bits = u32();
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(p), n);
    p += n;
    remaining -= n;
    return s;
  }
  Tensor2D tensor() {
    const std::uint32_t rows = u32();
    const std::uint32_t cols = u32();
    if (rows == 0 || cols == 0 || rows > (1u << 24) || cols > (1u << 24)) {
      throw DataError("checkpoint declares implausible tensor shape: " + path);
    }
    const std::uint64_t n = static_cast<std::uint64_t>(rows) * cols;
    need(n * 4);
    Tensor2D t(static_cast<int>(rows), static_cast<int>(cols));
    for (std::uint64_t i = 0; i < n; ++i) t.data()[i] = static_cast<real>(f32());
    return t;
  }
};

std::vector<const Tensor2D*> model_tensors(const GeccoModel& m) {
  std::vector<const Tensor2D*> out{&m.w1, &m.b1};
  for (const auto& w : m.w2) out.push_back(&w);
  if (!m.bn.gamma.empty()) {
    out.push_back(&m.bn.gamma);
    out.push_back(&m.bn.beta);
    out.push_back(&m.bn.running_mean);
    out.push_back(&m.bn.running_var);
  }
  out.push_back(&m.w_cls);
  out.push_back(&m.b_cls);
  return out;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  ckpt.config.validate();
  std::vector<unsigned char> buf;
  buf.insert(buf.end(), kMagic, kMagic + 4);
  put_u16(buf, kVersion);
  const ModelConfig& c = ckpt.config;
  put_u32(buf, static_cast<std::uint32_t>(c.image_h));
  put_u32(buf, static_cast<std::uint32_t>(c.image_w));
  put_u32(buf, static_cast<std::uint32_t>(c.d_out));
  put_u32(buf, static_cast<std::uint32_t>(c.num_classes));
  put_u32(buf, static_cast<std::uint32_t>(c.batch_size));
  put_f32(buf, static_cast<float>(c.dropout_rate));
  put_u32(buf, static_cast<std::uint32_t>(c.gcn_layers));
  buf.push_back(c.use_gcn ? 1 : 0);
  buf.push_back(c.use_attention ? 1 : 0);
  buf.push_back(c.gcn_self_term ? 1 : 0);
  buf.push_back(c.adjacency_mode == AdjacencyMode::RowNormalized ? 1 : 0);

  put_u32(buf, static_cast<std::uint32_t>(ckpt.class_names.size()));
  for (const std::string& name : ckpt.class_names) {
    put_u32(buf, static_cast<std::uint32_t>(name.size()));
    buf.insert(buf.end(), name.begin(), name.end());
  }

  const auto tensors = model_tensors(ckpt.model);
  put_u32(buf, static_cast<std::uint32_t>(tensors.size()));
  for (const Tensor2D* t : tensors) put_tensor(buf, *t);

  put_u32(buf, crc32(buf.data(), buf.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!out) throw DataError("short write for checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() < 10) throw DataError("checkpoint truncated: " + path);

  const std::size_t body = buf.size() - 4;
  std::uint32_t stored = 0;
  for (int i = 0; i < 4; ++i) stored |= static_cast<std::uint32_t>(buf[body + i]) << (8 * i);
  if (crc32(buf.data(), body) != stored) {
    throw DataError("checkpoint CRC mismatch (corrupted file): " + path);
  }

  Cursor cur{buf.data(), body, path};
  const std::string magic = cur.str(4);
  if (std::memcmp(magic.data(), kMagic, 4) != 0) {
    throw DataError("bad checkpoint magic in " + path);
  }
  const std::uint16_t version = cur.u16();
  if (version != kVersion) {
    std::ostringstream os;
    os << "unsupported checkpoint version " << version << " in " << path;
    throw DataError(os.str());
  }

  Checkpoint ckpt;
  ModelConfig& c = ckpt.config;
  c.image_h = static_cast<int>(cur.u32());
  c.image_w = static_cast<int>(cur.u32());
  c.d_out = static_cast<int>(cur.u32());
  c.num_classes = static_cast<int>(cur.u32());
  c.batch_size = static_cast<int>(cur.u32());
  c.dropout_rate = static_cast<real>(cur.f32());
  c.gcn_layers = static_cast<int>(cur.u32());
  const auto flag = [&cur, &path]() {
    cur.need(1);
    const unsigned char v = *cur.p;
    ++cur.p;
    --cur.remaining;
    if (v > 1) throw DataError("corrupt flag byte in checkpoint: " + path);
    return v == 1;
  };
  c.use_gcn = flag();
  c.use_attention = flag();
  c.gcn_self_term = flag();
  c.adjacency_mode = flag() ? AdjacencyMode::RowNormalized : AdjacencyMode::AllOnes;
  try {
    c.validate();
  } catch (const ConfigError& e) {
    throw DataError(std::string("checkpoint holds invalid config: ") + e.what());
  }

  const std::uint32_t n_names = cur.u32();
  if (n_names > (1u << 20)) throw DataError("implausible class-name count in " + path);
  for (std::uint32_t i = 0; i < n_names; ++i) {
    const std::uint32_t len = cur.u32();
    if (len > (1u << 16)) throw DataError("implausible class-name length in " + path);
    ckpt.class_names.push_back(cur.str(len));
  }

  const std::uint32_t n_tensors = cur.u32();
  const bool graph = c.use_gcn && c.gcn_layers >= 1;
  const std::uint32_t expect =
      graph ? 4 + static_cast<std::uint32_t>(c.gcn_layers) + 4 : 4;
  if (n_tensors != expect) {
    std::ostringstream os;
    os << "checkpoint tensor count " << n_tensors << " does not match config (expected " << expect
       << "): " << path;
    throw DataError(os.str());
  }

  GeccoModel& m = ckpt.model;
  m.w1 = cur.tensor();
  m.b1 = cur.tensor();
  if (graph) {
    for (int l = 0; l < c.gcn_layers; ++l) m.w2.push_back(cur.tensor());
    m.bn.gamma = cur.tensor();
    m.bn.beta = cur.tensor();
    m.bn.running_mean = cur.tensor();
    m.bn.running_var = cur.tensor();
    for (real v : m.bn.running_var.data()) {
      if (!(v > real(0))) throw DataError("checkpoint running variance not positive: " + path);
    }
  }
  m.w_cls = cur.tensor();
  m.b_cls = cur.tensor();
  if (cur.remaining != 0) throw DataError("trailing bytes in checkpoint: " + path);

  // Shape cross-check against the config.
  const int d = c.d_out;
  if (m.w1.rows() != c.input_dim() || m.w1.cols() != d || m.b1.cols() != d ||
      m.w_cls.rows() != c.pooled_dim() || m.w_cls.cols() != c.num_classes ||
      m.b_cls.cols() != c.num_classes) {
    throw DataError("checkpoint tensor shapes inconsistent with config: " + path);
  }
  for (const auto& w : m.w2) {
    if (w.rows() != d || w.cols() != d) {
      throw DataError("checkpoint graph weights inconsistent with config: " + path);
    }
  }
  if (graph && (m.bn.gamma.cols() != d || m.bn.beta.cols() != d || m.bn.running_mean.cols() != d ||
                m.bn.running_var.cols() != d)) {
    throw DataError("checkpoint batch-norm state inconsistent with config: " + path);
  }
  m.mode = Mode::Eval;
  return ckpt;
}

}  // namespace gecco
