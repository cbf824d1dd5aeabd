#pragma once

#include <cstdint>
#include <string_view>

namespace tabsense {

uint32_t Crc32(std::string_view bytes);

}  // namespace tabsense
