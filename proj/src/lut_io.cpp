#include "pbnlc/coefficients.hpp"

#include <zlib.h>

#include <bit>
#include <cstring>
#include <fstream>
#include <limits>

namespace pbnlc {
namespace {

constexpr char kMagic[8] = {'P', 'B', 'N', 'L', 'C', 'L', 'U', 'T'};
constexpr std::uint32_t kVersion = 1;

class Writer {
 public:
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  template <typename U>
  void uint(U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) buf_.push_back(static_cast<unsigned char>(v >> (8 * i)));
  }
  void i16(int v) {
    if (v < std::numeric_limits<std::int16_t>::min() || v > std::numeric_limits<std::int16_t>::max())
      throw LutFormatError("LUT: index does not fit in int16");
    uint(static_cast<std::uint16_t>(static_cast<std::int16_t>(v)));
  }
  void i32(int v) { uint(static_cast<std::uint32_t>(v)); }
  void f64(double v) { uint(std::bit_cast<std::uint64_t>(v)); }
  std::vector<unsigned char>& data() { return buf_; }

 private:
  std::vector<unsigned char> buf_;
};

class Reader {
 public:
  Reader(const unsigned char* p, std::size_t n) : p_(p), n_(n) {}
  void need(std::size_t k) const {
    if (pos_ + k > n_) throw LutFormatError("LUT: unexpected end of data");
  }
  template <typename U>
  U uint() {
    need(sizeof(U));
    U v = 0;
    for (std::size_t i = 0; i < sizeof(U); ++i) v |= U(p_[pos_ + i]) << (8 * i);
    pos_ += sizeof(U);
    return v;
  }
  int i16() { return static_cast<std::int16_t>(uint<std::uint16_t>()); }
  int i32() { return static_cast<std::int32_t>(uint<std::uint32_t>()); }
  double f64() { return std::bit_cast<double>(uint<std::uint64_t>()); }
  std::size_t remaining() const { return n_ - pos_; }

 private:
  const unsigned char* p_;
  std::size_t n_;
  std::size_t pos_ = 0;
};

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in blocks.
  while (n > 0) {
    const auto len = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, len);
    p += len;
    n -= len;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void save_table(const CoeffTable& t, const std::filesystem::path& path) {
  Writer w;
  w.bytes(kMagic, sizeof kMagic);
  w.uint<std::uint32_t>(kVersion);
  w.uint<std::uint8_t>(static_cast<std::uint8_t>(t.order));
  w.uint<std::uint8_t>(t.quantized ? 1 : 0);
  w.uint<std::uint16_t>(0);
  w.i32(t.window);
  w.f64(t.mu_db);
  w.f64(t.quant_scale);
  w.f64(t.reference.real());
  w.f64(t.reference.imag());
  w.f64(t.pulse.T);
  w.f64(t.pulse.tau);
  w.f64(t.pulse.P0);
  w.f64(t.pulse.rrc_rolloff);
  w.f64(t.link.alpha);
  w.f64(t.link.beta2);
  w.f64(t.link.gamma);
  w.f64(t.link.span_length);
  w.i32(t.link.n_spans);
  w.f64(t.link.noise_figure_db);
  w.f64(t.link.center_wavelength);

  w.uint<std::uint64_t>(t.entries.size());
  for (const auto& e : t.entries) {
    w.i16(e.idx.m);
    w.i16(e.idx.n);
    w.i16(e.idx.k);
    w.f64(e.value.real());
    w.f64(e.value.imag());
  }
  w.uint<std::uint64_t>(t.groups.size());
  for (const auto& g : t.groups) {
    w.f64(g.value.real());
    w.f64(g.value.imag());
    w.uint<std::uint64_t>(g.members.size());
    for (const auto& idx : g.members) {
      w.i16(idx.m);
      w.i16(idx.n);
      w.i16(idx.k);
    }
  }
  w.uint<std::uint32_t>(crc_of(w.data().data(), w.data().size()));

  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error("LUT: cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(w.data().data()), std::streamsize(w.data().size()));
  if (!os) throw std::runtime_error("LUT: write failed for '" + path.string() + "'");
}

CoeffTable load_table(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("LUT: cannot open '" + path.string() + "'");
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof kMagic + 4 || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0)
    throw LutFormatError("LUT: bad magic in '" + path.string() + "'");
  {
    Reader v(buf.data() + sizeof kMagic, 4);
    if (v.uint<std::uint32_t>() != kVersion) throw LutFormatError("LUT: unsupported format version");
  }
  if (buf.size() < sizeof kMagic + 8) throw LutFormatError("LUT: checksum mismatch (file truncated)");
  const std::size_t body = buf.size() - 4;
  Reader tail(buf.data() + body, 4);
  if (tail.uint<std::uint32_t>() != crc_of(buf.data(), body))
    throw LutFormatError("LUT: checksum mismatch in '" + path.string() + "'");

  Reader r(buf.data() + sizeof kMagic + 4, body - sizeof kMagic - 4);
  CoeffTable t;
  const auto order = r.uint<std::uint8_t>();
  if (order > 2) throw LutFormatError("LUT: unknown coefficient order");
  t.order = static_cast<CoeffOrder>(order);
  t.quantized = r.uint<std::uint8_t>() != 0;
  r.uint<std::uint16_t>();
  t.window = r.i32();
  t.mu_db = r.f64();
  t.quant_scale = r.f64();
  const double rr = r.f64(), ri = r.f64();
  t.reference = {rr, ri};
  t.pulse.T = r.f64();
  t.pulse.tau = r.f64();
  t.pulse.P0 = r.f64();
  t.pulse.rrc_rolloff = r.f64();
  t.link.alpha = r.f64();
  t.link.beta2 = r.f64();
  t.link.gamma = r.f64();
  t.link.span_length = r.f64();
  t.link.n_spans = r.i32();
  t.link.noise_figure_db = r.f64();
  t.link.center_wavelength = r.f64();

  const auto n_entries = r.uint<std::uint64_t>();
  if (n_entries > r.remaining() / 22) throw LutFormatError("LUT: entry count exceeds file size");
  t.entries.resize(n_entries);
  for (auto& e : t.entries) {
    e.idx.m = r.i16();
    e.idx.n = r.i16();
    e.idx.k = r.i16();
    const double re = r.f64(), im = r.f64();
    e.value = {re, im};
  }
  const auto n_groups = r.uint<std::uint64_t>();
  if (n_groups > r.remaining() / 24) throw LutFormatError("LUT: group count exceeds file size");
  t.groups.resize(n_groups);
  for (auto& g : t.groups) {
    const double re = r.f64(), im = r.f64();
    g.value = {re, im};
    const auto nm = r.uint<std::uint64_t>();
    if (nm > r.remaining() / 6) throw LutFormatError("LUT: group size exceeds file size");
    g.members.resize(nm);
    for (auto& idx : g.members) {
      idx.m = r.i16();
      idx.n = r.i16();
      idx.k = r.i16();
    }
  }
  if (r.remaining() != 0) throw LutFormatError("LUT: trailing bytes before checksum");
  return t;
}

}  // namespace pbnlc
