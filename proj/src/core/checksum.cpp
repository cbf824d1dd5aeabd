#include "tabsense/core/checksum.hpp"

#include <zlib.h>

namespace tabsense {

uint32_t Crc32(std::string_view bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed in chunks for very large inputs.
  const auto* data = reinterpret_cast<const Bytef*>(bytes.data());
  size_t remaining = bytes.size();
  while (remaining > 0) {
    const uInt chunk = remaining > (1u << 30) ? (1u << 30) : static_cast<uInt>(remaining);
    crc = crc32(crc, data, chunk);
    data += chunk;
    remaining -= chunk;
  }
  return static_cast<uint32_t>(crc);
}

}  // namespace tabsense
