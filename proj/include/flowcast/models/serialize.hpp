#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace flowcast::models {

/// Model kinds carried in the header section.
enum class ModelKind : std::uint8_t { var = 1, holt_winters = 2, rrp = 3, bdt = 4 };

std::string to_string(ModelKind kind);

/**
 * @brief Little-endian writer for the canonical model framing.
 *
 * A model file is the magic "FCMD" followed by sections. Each section is a
 * u32 tag, a u64 payload length and the payload. The first section is always
 * `HEAD` holding the kind (u8) and format version (u16).
 */
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) { put(v, 2); }
    void u32(std::uint32_t v) { put(v, 4); }
    void u64(std::uint64_t v) { put(v, 8); }
    void f64(double v);
    void f64s(std::span<const double> values);

    void begin_section(std::uint32_t tag);
    void end_section();

    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    void put(std::uint64_t v, int width);

    std::vector<std::uint8_t> out_;
    std::size_t open_length_at_ = 0;
};

class ByteReader {
public:
    explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

    std::uint8_t u8() { return static_cast<std::uint8_t>(get(1)); }
    std::uint16_t u16() { return static_cast<std::uint16_t>(get(2)); }
    std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
    std::uint64_t u64() { return get(8); }
    double f64();
    std::vector<double> f64s();

    /// Reads a section header, checks its tag and returns a reader over its payload.
    ByteReader section(std::uint32_t tag);

    bool done() const noexcept { return pos_ == bytes_.size(); }

private:
    std::uint64_t get(int width);
    std::span<const std::uint8_t> take(std::size_t n);

    std::span<const std::uint8_t> bytes_;
    std::size_t pos_ = 0;
};

constexpr std::uint32_t tag(const char (&name)[5]) {
    return static_cast<std::uint32_t>(static_cast<unsigned char>(name[0])) |
           static_cast<std::uint32_t>(static_cast<unsigned char>(name[1])) << 8 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(name[2])) << 16 |
           static_cast<std::uint32_t>(static_cast<unsigned char>(name[3])) << 24;
}

constexpr std::uint16_t kFormatVersion = 1;

/// Writes magic and the HEAD section.
void write_header(ByteWriter& w, ModelKind kind);

/// Checks magic and HEAD; returns the kind found.
ModelKind read_header(ByteReader& r);

}  // namespace flowcast::models
