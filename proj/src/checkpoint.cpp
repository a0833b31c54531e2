#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include "milrec/error.hpp"
#include "milrec/train.hpp"

namespace milrec {

namespace {

constexpr char kMagic[8] = {'M', 'I', 'L', 'R', 'E', 'C', '0', '1'};

void put_u32(std::string& buf, std::uint32_t v) {
  char b[4];
  b[0] = static_cast<char>(v & 0xff);
  b[1] = static_cast<char>((v >> 8) & 0xff);
  b[2] = static_cast<char>((v >> 16) & 0xff);
  b[3] = static_cast<char>((v >> 24) & 0xff);
  buf.append(b, 4);
}

void put_u64(std::string& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32_array(std::string& buf, const std::vector<double>& values) {
  for (double d : values) {
    float f = static_cast<float>(d);
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32(buf, bits);
  }
}

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path) : in(path, std::ios::binary) {}

  void bytes(void* dst, std::size_t n, const char* what) {
    in.read(static_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (in.gcount() != static_cast<std::streamsize>(n))
      throw FormatError(std::string("checkpoint truncated while reading ") + what);
  }
  std::uint8_t u8(const char* what) {
    std::uint8_t v;
    bytes(&v, 1, what);
    return v;
  }
  std::uint32_t u32(const char* what) {
    std::uint8_t b[4];
    bytes(b, 4, what);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
  }
  std::uint64_t u64(const char* what) {
    std::uint64_t v = 0;
    std::uint8_t b[8];
    bytes(b, 8, what);
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
    return v;
  }
  void f32_array(std::vector<double>& out, std::size_t n, const char* what) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      std::uint32_t bits = u32(what);
      float f;
      std::memcpy(&f, &bits, 4);
      out[i] = static_cast<double>(f);
    }
  }
};

std::string meta_path(const std::string& path) { return path + ".meta"; }

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const ModelParams& p = ckpt.params;
  p.validate();
  const std::uint32_t dim = static_cast<std::uint32_t>(p.latent_dim());
  const std::uint32_t n_items = static_cast<std::uint32_t>(p.n_items());
  // For mf the encoder width IS the user count; for dae it is carried
  // alongside since the weights don't encode it.
  const std::uint32_t n_users = static_cast<std::uint32_t>(
      p.kind == ModelKind::mf ? p.W.cols : ckpt.n_users);
  if (p.kind == ModelKind::mf && ckpt.n_users != 0 && ckpt.n_users != p.W.cols)
    throw InvalidArgument("save_checkpoint: user count disagrees with encoder width");

  std::string buf;
  buf.append(kMagic, 8);
  buf.push_back(static_cast<char>(p.kind));
  buf.push_back(static_cast<char>(p.enc_act));
  buf.push_back(static_cast<char>(p.dec_act));
  put_u32(buf, dim);
  put_u32(buf, n_users);
  put_u32(buf, n_items);
  put_f32_array(buf, p.W.data);
  put_f32_array(buf, p.b);
  put_f32_array(buf, p.Wp.data);
  put_f32_array(buf, p.bp);
  const std::uint64_t payload = buf.size() - 8;
  put_u64(buf, payload);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write checkpoint: " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw InputError("write failure: " + path);

  std::ostringstream meta;
  meta << config_to_text(ckpt.config);
  meta << "vocab_hash = " << ckpt.vocab_hash << '\n';
  meta << "iteration = " << ckpt.iteration << '\n';
  std::ofstream mout(meta_path(path), std::ios::binary | std::ios::trunc);
  if (!mout) throw InputError("cannot write checkpoint sidecar: " + meta_path(path));
  mout << meta.str();
}

Checkpoint load_checkpoint(const std::string& path) {
  Reader r(path);
  if (!r.in) throw InputError("cannot open checkpoint: " + path);

  char magic[8];
  r.bytes(magic, 8, "magic");
  if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError("checkpoint: bad magic");

  std::uint8_t kind_b = r.u8("model kind");
  std::uint8_t enc_b = r.u8("encoder activation");
  std::uint8_t dec_b = r.u8("decoder activation");
  if (kind_b > 1) throw FormatError("checkpoint: unknown model kind code");
  if (enc_b > 3 || dec_b > 3) throw FormatError("checkpoint: unknown activation code");
  std::uint32_t dim = r.u32("latent dim");
  std::uint32_t n_users = r.u32("user count");
  std::uint32_t n_items = r.u32("item count");
  if (dim == 0 || n_items == 0) throw FormatError("checkpoint: zero dimension");

  Checkpoint ckpt;
  ModelParams& p = ckpt.params;
  p.kind = static_cast<ModelKind>(kind_b);
  p.enc_act = static_cast<Activation>(enc_b);
  p.dec_act = static_cast<Activation>(dec_b);
  const std::uint64_t in_cols = p.kind == ModelKind::mf ? n_users : n_items;
  if (in_cols == 0) throw FormatError("checkpoint: zero dimension");

  // Dimension sanity before allocating: payload must match the header.
  const std::uint64_t n_values =
      static_cast<std::uint64_t>(dim) * in_cols + dim +
      static_cast<std::uint64_t>(n_items) * dim + n_items;
  const std::uint64_t expected_payload = 3 + 12 + 4 * n_values;
  r.in.seekg(0, std::ios::end);
  const std::uint64_t file_size = static_cast<std::uint64_t>(r.in.tellg());
  if (file_size != 8 + expected_payload + 8)
    throw FormatError("checkpoint: declared dimensions disagree with file length");
  r.in.seekg(23, std::ios::beg);

  p.W = Matrix(dim, in_cols);
  r.f32_array(p.W.data, p.W.size(), "encoder weights");
  r.f32_array(p.b, dim, "encoder bias");
  p.Wp = Matrix(n_items, dim);
  r.f32_array(p.Wp.data, p.Wp.size(), "decoder weights");
  r.f32_array(p.bp, n_items, "decoder bias");

  std::uint64_t checksum = r.u64("length checksum");
  if (checksum != expected_payload)
    throw FormatError("checkpoint: length checksum mismatch");

  ckpt.n_users = n_users;
  ckpt.config.kind = p.kind;
  ckpt.config.latent_dim = dim;
  ckpt.config.enc_act = p.enc_act;
  ckpt.config.dec_act = p.dec_act;

  std::ifstream meta(meta_path(path), std::ios::binary);
  if (meta) {
    std::ostringstream buf;
    buf << meta.rdbuf();
    std::istringstream lines(buf.str());
    std::string config_lines;
    std::string line;
    while (std::getline(lines, line)) {
      auto eq = line.find('=');
      std::string key = eq == std::string::npos ? line : line.substr(0, eq);
      while (!key.empty() && (key.back() == ' ' || key.back() == '\t')) key.pop_back();
      if (key == "vocab_hash")
        ckpt.vocab_hash = std::stoull(line.substr(eq + 1));
      else if (key == "iteration")
        ckpt.iteration = std::stoull(line.substr(eq + 1));
      else
        config_lines += line + "\n";
    }
    ckpt.config = parse_config_text(config_lines);
  }
  p.validate();
  return ckpt;
}

}  // namespace milrec
