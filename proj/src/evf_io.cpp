#include "bta/evf_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

namespace bta {

namespace {

constexpr char kMagic[4] = {'E', 'V', 'F', '1'};

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>(v >> (8 * i)));
}

void put_f64(std::vector<unsigned char>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<unsigned char>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(const std::vector<unsigned char>& bytes) : bytes_(bytes) {}

  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) {
      throw EvfFormatError(EvfFormatError::Kind::Truncated,
                           std::string("EVF file truncated while reading ") + what + " at byte " +
                               std::to_string(pos_));
    }
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 8;
    return std::bit_cast<double>(v);
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  std::size_t pos() const { return pos_; }
  void skip(std::size_t n) { pos_ += n; }

 private:
  const std::vector<unsigned char>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<unsigned char> encode_evf(const ExtendedQTable& evf) {
  std::vector<unsigned char> out(std::begin(kMagic), std::end(kMagic));
  put_u32(out, static_cast<std::uint32_t>(evf.num_states()));
  put_u32(out, static_cast<std::uint32_t>(evf.num_goals()));
  put_u32(out, static_cast<std::uint32_t>(kNumActions));
  for (const Cell& c : evf.goals()) {
    put_u32(out, static_cast<std::uint32_t>(c.row));
    put_u32(out, static_cast<std::uint32_t>(c.col));
  }
  // Row-major storage is already (s, g, a) order.
  const double* data = evf.values().data();
  for (Eigen::Index i = 0; i < evf.values().size(); ++i) put_f64(out, data[i]);
  put_f64(out, evf.rbar_min());
  return out;
}

ExtendedQTable decode_evf(const std::vector<unsigned char>& bytes) {
  Reader in(bytes);
  in.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 3) != 0) {
    throw EvfFormatError(EvfFormatError::Kind::BadMagic, "not an EVF file (bad magic)");
  }
  if (bytes[3] != static_cast<unsigned char>(kMagic[3])) {
    throw EvfFormatError(EvfFormatError::Kind::UnsupportedVersion,
                         std::string("unsupported EVF version 'EVF") + static_cast<char>(bytes[3]) + "'");
  }
  in.skip(4);
  const std::uint32_t states = in.u32("state count");
  const std::uint32_t goals = in.u32("goal count");
  const std::uint32_t actions = in.u32("action count");
  if (actions != kNumActions) {
    throw EvfFormatError(EvfFormatError::Kind::Inconsistent,
                         "EVF file has " + std::to_string(actions) + " actions, expected " + std::to_string(kNumActions));
  }
  if (states == 0 || goals == 0) {
    throw EvfFormatError(EvfFormatError::Kind::Inconsistent, "EVF file has an empty state or goal axis");
  }
  const std::uint64_t count = std::uint64_t{states} * goals * actions;
  const std::uint64_t expected = std::uint64_t{goals} * 8 + count * 8 + 8;
  if (in.remaining() < expected) {
    throw EvfFormatError(EvfFormatError::Kind::Truncated, "EVF file truncated: " + std::to_string(in.remaining()) +
                                                              " bytes of payload, expected " + std::to_string(expected));
  }
  if (in.remaining() > expected) {
    throw EvfFormatError(EvfFormatError::Kind::Inconsistent, "EVF file has trailing bytes");
  }
  std::vector<Cell> cells;
  cells.reserve(goals);
  for (std::uint32_t g = 0; g < goals; ++g) {
    const auto r = in.u32("goal row");
    const auto c = in.u32("goal col");
    cells.push_back({static_cast<int>(r), static_cast<int>(c)});
  }
  ExtendedQTable::Table values(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(goals) * actions);
  double* data = values.data();
  for (std::uint64_t i = 0; i < count; ++i) data[i] = in.f64("values");
  const double rbar = in.f64("r_bar_min");
  return ExtendedQTable(std::move(values), std::move(cells), rbar);
}

void save_evf(const ExtendedQTable& evf, const std::filesystem::path& path) {
  const auto bytes = encode_evf(evf);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw EvfFormatError(EvfFormatError::Kind::Io, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw EvfFormatError(EvfFormatError::Kind::Io, "write failed for " + path.string());
}

ExtendedQTable load_evf(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw EvfFormatError(EvfFormatError::Kind::Io, "cannot open " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_evf(bytes);
}

}  // namespace bta
