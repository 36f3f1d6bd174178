#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include <json.hpp>

#include "gigareg/error.hpp"
#include "gigareg/io.hpp"

namespace gigareg {

namespace fs = std::filesystem;

namespace {

constexpr char kFieldMagic[] = "GIGAREGFIELDv001";
constexpr std::size_t kMagicLen = 16;

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

void write_bytes(const fs::path& path, const char* data, std::size_t n) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::OutputWriteFailure, tmp.string() + ": cannot open for writing");
    f.write(data, static_cast<std::streamsize>(n));
    if (!f) throw Error(ErrorKind::OutputWriteFailure, tmp.string() + ": write failed");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw Error(ErrorKind::OutputWriteFailure, path.string() + ": " + ec.message());
}

}  // namespace

void write_file(const fs::path& path, const std::string& content) {
  write_bytes(path, content.data(), content.size());
}

void write_file(const fs::path& path, const std::vector<std::uint8_t>& content) {
  write_bytes(path, reinterpret_cast<const char*>(content.data()), content.size());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::UnreadableInput, path.string() + ": cannot open");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

double round_sig9(double v) {
  if (!std::isfinite(v) || v == 0.0) return v;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return std::strtod(buf, nullptr);
}

std::string affine_to_json(const AffineTransform& t) {
  nlohmann::ordered_json j;
  j["matrix"] = {{t.m[0], t.m[1], t.m[2]}, {t.m[3], t.m[4], t.m[5]}};
  return j.dump() + "\n";
}

AffineTransform affine_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    const auto& m = j.at("matrix");
    if (m.size() != 2 || m[0].size() != 3 || m[1].size() != 3)
      throw Error(ErrorKind::UnreadableInput, "affine matrix must be 2 x 3");
    AffineTransform t;
    for (int r = 0; r < 2; ++r)
      for (int c = 0; c < 3; ++c) t.m[r * 3 + c] = m[r][c].get<double>();
    if (!t.finite()) throw Error(ErrorKind::UnreadableInput, "affine matrix has non-finite entries");
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::UnreadableInput, std::string("affine json: ") + e.what());
  }
}

void write_affine(const fs::path& path, const AffineTransform& t) { write_file(path, affine_to_json(t)); }

AffineTransform read_affine(const fs::path& path) { return affine_from_json(read_text_file(path)); }

std::vector<std::uint8_t> field_to_bytes(const DisplacementField& u) {
  std::vector<std::uint8_t> out(kFieldMagic, kFieldMagic + kMagicLen);
  out.reserve(kMagicLen + 8 + 8 * u.size());
  put_u32(out, static_cast<std::uint32_t>(u.width));
  put_u32(out, static_cast<std::uint32_t>(u.height));
  for (const auto* ch : {&u.ux, &u.uy})
    for (double v : *ch) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  return out;
}

DisplacementField field_from_bytes(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kMagicLen + 8 || std::memcmp(bytes.data(), kFieldMagic, kMagicLen) != 0)
    throw Error(ErrorKind::UnreadableInput, "not a displacement field file");
  const std::uint32_t w = get_u32(bytes.data() + kMagicLen);
  const std::uint32_t h = get_u32(bytes.data() + kMagicLen + 4);
  const std::size_t n = static_cast<std::size_t>(w) * h;
  if (w == 0 || h == 0 || bytes.size() != kMagicLen + 8 + 8 * n)
    throw Error(ErrorKind::UnreadableInput, "displacement field file has the wrong length");
  DisplacementField u(static_cast<int>(w), static_cast<int>(h));
  const std::uint8_t* p = bytes.data() + kMagicLen + 8;
  for (auto* ch : {&u.ux, &u.uy})
    for (double& v : *ch) {
      v = std::bit_cast<float>(get_u32(p));
      p += 4;
    }
  return u;
}

void write_field(const fs::path& path, const DisplacementField& u) { write_file(path, field_to_bytes(u)); }

DisplacementField read_field(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorKind::UnreadableInput, path.string() + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return field_from_bytes(bytes);
}

}  // namespace gigareg
