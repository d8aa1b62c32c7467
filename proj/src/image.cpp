#include "capimg/image.hpp"

#include "capimg/error.hpp"

#include <array>
#include <utility>

namespace capimg {

namespace {

constexpr std::array<std::pair<Channel, std::string_view>, 11> kNames{{
    {Channel::X, "X"},
    {Channel::Y, "Y"},
    {Channel::R, "R"},
    {Channel::PHI, "PHI"},
    {Channel::R_NORM, "R_NORM"},
    {Channel::PHI_NORM, "PHI_NORM"},
    {Channel::DELTA, "DELTA"},
    {Channel::XI, "XI"},
    {Channel::DELTA_P, "DELTA_P"},
    {Channel::XI_P, "XI_P"},
    {Channel::MASK, "MASK"},
}};

}  // namespace

std::string_view channel_name(Channel c) {
    for (const auto& [ch, name] : kNames) {
        if (ch == c) return name;
    }
    return "?";
}

std::optional<Channel> parse_channel(std::string_view name) {
    for (const auto& [ch, n] : kNames) {
        if (n == name) return ch;
    }
    return std::nullopt;
}

std::string_view default_units(Channel c) {
    switch (c) {
        case Channel::X:
        case Channel::Y:
        case Channel::R: return "V2";
        case Channel::PHI: return "rad";
        default: return "1";
    }
}

void require_same_shape(const ScanImage& a, const ScanImage& b) {
    if (!a.same_shape(b)) {
        throw DimensionError("image shapes differ: " + std::to_string(a.ny) + "x" + std::to_string(a.nx) +
                             " vs " + std::to_string(b.ny) + "x" + std::to_string(b.nx));
    }
}

}  // namespace capimg
