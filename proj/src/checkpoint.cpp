#include "gibbsnet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace gibbsnet {
namespace {

// little-endian byte buffer
struct Writer {
  std::vector<unsigned char> bytes;

  void u8(std::uint8_t v) { bytes.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i64(std::int64_t v) { u64(static_cast<std::uint64_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void matrix(const Matrix& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      for (Eigen::Index j = 0; j < m.cols(); ++j) f64(m(i, j));
  }
};

struct Reader {
  const unsigned char* p;
  const unsigned char* end;

  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end - p) < n)
      throw CorruptError("checkpoint: truncated payload");
  }
  std::uint8_t u8() {
    need(1);
    return *p++;
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(*p++) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(*p++) << (8 * i);
    return v;
  }
  std::int64_t i64() { return static_cast<std::int64_t>(u64()); }
  double f64() { return std::bit_cast<double>(u64()); }
  Matrix matrix() {
    const std::uint32_t r = u32(), c = u32();
    if (static_cast<std::uint64_t>(r) * c > (1ull << 28))
      throw CorruptError("checkpoint: implausible matrix size");
    Matrix m(r, c);
    for (std::uint32_t i = 0; i < r; ++i)
      for (std::uint32_t j = 0; j < c; ++j) m(i, j) = f64();
    return m;
  }
};

void write_net(Writer& w, const NetParams& net) {
  w.u8(static_cast<std::uint8_t>(net.role));
  w.f64(net.log_var_min);
  w.f64(net.log_var_max);
  w.u32(static_cast<std::uint32_t>(net.hidden.size()));
  for (Activation a : net.activation) w.u8(static_cast<std::uint8_t>(a));
  for (const Layer& l : net.hidden) {
    w.matrix(l.weight);
    w.matrix(l.bias);
  }
  w.matrix(net.out.weight);
  w.matrix(net.out.bias);
  w.u8(net.label_out.has_value() ? 1 : 0);
  if (net.label_out) {
    w.matrix(net.label_out->weight);
    w.matrix(net.label_out->bias);
  }
}

NetParams read_net(Reader& r) {
  NetParams net;
  net.role = static_cast<Role>(r.u8());
  net.log_var_min = r.f64();
  net.log_var_max = r.f64();
  const std::uint32_t n_hidden = r.u32();
  for (std::uint32_t i = 0; i < n_hidden; ++i)
    net.activation.push_back(static_cast<Activation>(r.u8()));
  for (std::uint32_t i = 0; i < n_hidden; ++i) {
    Layer l;
    l.weight = r.matrix();
    l.bias = r.matrix();
    net.hidden.push_back(std::move(l));
  }
  net.out.weight = r.matrix();
  net.out.bias = r.matrix();
  if (r.u8()) {
    Layer l;
    l.weight = r.matrix();
    l.bias = r.matrix();
    net.label_out = std::move(l);
  }
  return net;
}

void write_adam(Writer& w, const AdamState& st) {
  w.f64(st.cfg.lr);
  w.f64(st.cfg.beta1);
  w.f64(st.cfg.beta2);
  w.f64(st.cfg.eps);
  w.i64(st.step_count);
  w.u32(static_cast<std::uint32_t>(st.first_moment.size()));
  for (const Matrix& m : st.first_moment) w.matrix(m);
  for (const Matrix& m : st.second_moment) w.matrix(m);
}

AdamState read_adam(Reader& r) {
  AdamState st;
  st.cfg.lr = r.f64();
  st.cfg.beta1 = r.f64();
  st.cfg.beta2 = r.f64();
  st.cfg.eps = r.f64();
  st.step_count = r.i64();
  const std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) st.first_moment.push_back(r.matrix());
  for (std::uint32_t i = 0; i < n; ++i) st.second_moment.push_back(r.matrix());
  return st;
}

}  // namespace

std::uint64_t fnv1a64(const void* data, std::size_t len, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < len; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("hash_file: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
    h = fnv1a64(buf, static_cast<std::size_t>(in.gcount()), h);
  return h;
}

void save_checkpoint(const std::string& path, const TrainerState& st,
                     std::uint64_t config_hash) {
  Writer payload;
  write_net(payload, st.nets.enc);
  write_net(payload, st.nets.dec);
  write_net(payload, st.nets.disc);
  write_adam(payload, st.opt_enc);
  write_adam(payload, st.opt_dec);
  write_adam(payload, st.opt_disc);

  Writer header;
  header.u64(kCheckpointMagic);
  header.u32(kCheckpointVersion);
  header.u64(config_hash);
  header.i64(st.iteration);
  header.u64(fnv1a64(payload.bytes.data(), payload.bytes.size()));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("save_checkpoint: cannot open " + path);
  out.write(reinterpret_cast<const char*>(header.bytes.data()),
            static_cast<std::streamsize>(header.bytes.size()));
  out.write(reinterpret_cast<const char*>(payload.bytes.data()),
            static_cast<std::streamsize>(payload.bytes.size()));
  if (!out) throw FormatError("save_checkpoint: write failed for " + path);
}

LoadedCheckpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("load_checkpoint: cannot open " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  Reader r{bytes.data(), bytes.data() + bytes.size()};

  if (r.u64() != kCheckpointMagic) throw CorruptError("load_checkpoint: bad magic in " + path);
  if (r.u32() != kCheckpointVersion)
    throw CorruptError("load_checkpoint: unsupported version in " + path);

  LoadedCheckpoint loaded;
  loaded.config_hash = r.u64();
  loaded.state.iteration = r.i64();
  loaded.payload_hash = r.u64();

  const std::size_t header_size = static_cast<std::size_t>(r.p - bytes.data());
  const std::uint64_t actual =
      fnv1a64(bytes.data() + header_size, bytes.size() - header_size);
  if (actual != loaded.payload_hash)
    throw CorruptError("load_checkpoint: payload hash mismatch in " + path);

  loaded.state.nets.enc = read_net(r);
  loaded.state.nets.dec = read_net(r);
  loaded.state.nets.disc = read_net(r);
  loaded.state.opt_enc = read_adam(r);
  loaded.state.opt_dec = read_adam(r);
  loaded.state.opt_disc = read_adam(r);
  if (r.p != r.end) throw CorruptError("load_checkpoint: trailing bytes in " + path);
  return loaded;
}

}  // namespace gibbsnet
