#include "bytes.hpp"

#include <fstream>
#include <iterator>

namespace ddavs::io {

std::size_t ByteWriter::save(const std::filesystem::path& path) const {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open " + path.string() + " for writing");
  f.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
  if (!f) throw Error("short write to " + path.string());
  return buf_.size();
}

ByteReader ByteReader::from_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return ByteReader(std::move(data), path.string());
}

}  // namespace ddavs::io
