#include "gnnx/tensor/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "gnnx/error.hpp"

namespace gnnx {
namespace {

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffU));
}

class Reader {
 public:
  Reader(const std::string& bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  std::string str(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("tensor container: truncated at byte " + std::to_string(pos_));
  }
  const std::string& bytes_;
  std::size_t pos_;
};

}  // namespace

std::string encode_parameters(const ParameterSet& params) {
  std::string out = std::string(kCheckpointHeader) + "\n";
  put_u64(out, params.size());
  for (const auto& [name, t] : params) {
    put_u64(out, name.size());
    out += name;
    put_u64(out, t.rank());
    for (std::size_t extent : t.shape()) put_u64(out, extent);
    for (double v : t.data()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

ParameterSet decode_parameters(const std::string& bytes) {
  const auto newline = bytes.find('\n');
  if (newline == std::string::npos || bytes.substr(0, newline) != kCheckpointHeader) {
    throw ParseError("tensor container: missing or unsupported header line");
  }
  Reader in(bytes, newline + 1);
  ParameterSet params;
  const std::uint64_t count = in.u64();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = in.str(in.u64());
    const std::uint64_t rank = in.u64();
    if (rank > 8) throw ParseError("tensor container: implausible rank for '" + name + "'");
    Shape shape(rank);
    for (auto& extent : shape) extent = in.u64();
    std::vector<double> values(shape_numel(shape));
    for (double& v : values) v = std::bit_cast<double>(in.u64());
    params.set(name, Tensor(std::move(shape), std::move(values)));
  }
  if (!in.done()) throw ParseError("tensor container: trailing bytes");
  return params;
}

void save_parameters(const ParameterSet& params, const std::filesystem::path& path) {
  write_file_atomic(path, encode_parameters(params));
}

ParameterSet load_parameters(const std::filesystem::path& path) { return decode_parameters(read_file(path)); }

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp.string() + " for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    out.flush();
    if (!out) throw Error("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw UsageError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

}  // namespace gnnx
