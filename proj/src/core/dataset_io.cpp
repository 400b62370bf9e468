#include "lidx/core/dataset_io.hpp"

#include <array>
#include <fstream>

namespace lidx {
namespace {

std::uint64_t decode_le(const unsigned char* bytes) {
  std::uint64_t value = 0;
  for (int i = 7; i >= 0; --i) {
    value = (value << 8) | bytes[i];
  }
  return value;
}

void encode_le(std::uint64_t value, unsigned char* bytes) {
  for (int i = 0; i < 8; ++i) {
    bytes[i] = static_cast<unsigned char>(value >> (8 * i));
  }
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DatasetError("cannot open " + path.string());
  }
  std::error_code ec;
  const auto file_size = std::filesystem::file_size(path, ec);
  if (ec) {
    throw DatasetError("cannot stat " + path.string() + ": " + ec.message());
  }
  if (file_size < 8) {
    throw DatasetError("truncated file " + path.string() + ": missing count header");
  }

  std::array<unsigned char, 8> header{};
  in.read(reinterpret_cast<char*>(header.data()), 8);
  const std::uint64_t count = decode_le(header.data());
  if (count > (file_size - 8) / 8 || file_size != 8 + 8 * count) {
    throw DatasetError("truncated file " + path.string() + ": header says " +
                       std::to_string(count) + " keys but file has " +
                       std::to_string(file_size) + " bytes");
  }
  if (count == 0) {
    throw DatasetError("empty dataset");
  }

  std::vector<unsigned char> raw(count * 8);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!in) {
    throw DatasetError("read failure on " + path.string());
  }
  std::vector<Key> keys(count);
  for (std::size_t i = 0; i < count; ++i) {
    keys[i] = decode_le(raw.data() + 8 * i);
  }
  return Dataset::from_unsorted(std::move(keys));
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  std::vector<unsigned char> raw(8 + 8 * dataset.size());
  encode_le(dataset.size(), raw.data());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    encode_le(dataset[i], raw.data() + 8 + 8 * i);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DatasetError("cannot open " + path.string() + " for writing");
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) {
    throw DatasetError("write failure on " + path.string());
  }
}

}  // namespace lidx
