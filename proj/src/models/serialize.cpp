#include "flowcast/models/serialize.hpp"

#include <bit>
#include <string>

#include "flowcast/error.hpp"

namespace flowcast::models {

std::string to_string(ModelKind kind) {
    switch (kind) {
        case ModelKind::var: return "var";
        case ModelKind::holt_winters: return "hw";
        case ModelKind::rrp: return "rrp";
        case ModelKind::bdt: return "bdt";
    }
    return "unknown";
}

void ByteWriter::put(std::uint64_t v, int width) {
    for (int i = 0; i < width; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void ByteWriter::f64(double v) { put(std::bit_cast<std::uint64_t>(v), 8); }

void ByteWriter::f64s(std::span<const double> values) {
    u64(values.size());
    for (double v : values) f64(v);
}

void ByteWriter::begin_section(std::uint32_t t) {
    u32(t);
    open_length_at_ = out_.size();
    u64(0);
}

void ByteWriter::end_section() {
    const std::uint64_t length = out_.size() - open_length_at_ - 8;
    for (int i = 0; i < 8; ++i) out_[open_length_at_ + i] = static_cast<std::uint8_t>(length >> (8 * i));
}

std::span<const std::uint8_t> ByteReader::take(std::size_t n) {
    if (n > bytes_.size() - pos_) throw Error(ErrorCode::bad_format, "truncated model data");
    auto out = bytes_.subspan(pos_, n);
    pos_ += n;
    return out;
}

std::uint64_t ByteReader::get(int width) {
    auto raw = take(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v |= static_cast<std::uint64_t>(raw[static_cast<std::size_t>(i)]) << (8 * i);
    return v;
}

double ByteReader::f64() { return std::bit_cast<double>(get(8)); }

std::vector<double> ByteReader::f64s() {
    const auto n = u64();
    if (n > (bytes_.size() - pos_) / 8) throw Error(ErrorCode::bad_format, "vector length exceeds data");
    std::vector<double> out(n);
    for (auto& v : out) v = f64();
    return out;
}

ByteReader ByteReader::section(std::uint32_t t) {
    if (u32() != t) throw Error(ErrorCode::bad_format, "unexpected model section");
    const auto length = u64();
    return ByteReader(take(length));
}

void write_header(ByteWriter& w, ModelKind kind) {
    for (char c : std::string("FCMD")) w.u8(static_cast<std::uint8_t>(c));
    w.begin_section(tag("HEAD"));
    w.u8(static_cast<std::uint8_t>(kind));
    w.u16(kFormatVersion);
    w.end_section();
}

ModelKind read_header(ByteReader& r) {
    for (char c : std::string("FCMD")) {
        if (r.u8() != static_cast<std::uint8_t>(c)) throw Error(ErrorCode::bad_format, "not a flowcast model");
    }
    auto head = r.section(tag("HEAD"));
    const auto kind = head.u8();
    if (head.u16() != kFormatVersion) throw Error(ErrorCode::bad_format, "unsupported model version");
    if (kind < 1 || kind > 4) throw Error(ErrorCode::bad_format, "unknown model kind");
    return static_cast<ModelKind>(kind);
}

}  // namespace flowcast::models
