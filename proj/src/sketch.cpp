#include "hll/sketch.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <fstream>
#include <iterator>
#include <numeric>
#include <optional>

#include "hll/errors.hpp"

namespace hll {

namespace {

constexpr std::array<std::uint8_t, 4> magic{'H', 'L', 'L', 'S'};
constexpr std::size_t header_size = magic.size() + 3;

}  // namespace

SketchConfig::SketchConfig(int p, int q) : p_(p), q_(q) {
    if (p < min_p || p > max_p) {
        throw InvalidConfig("precision p must be in [2, 26], got " + std::to_string(p));
    }
    if (q < 0) {
        throw InvalidConfig("q must be non-negative, got " + std::to_string(q));
    }
    if (p + q > 64) {
        throw InvalidConfig("p + q must not exceed 64, got " + std::to_string(p + q));
    }
}

std::string to_string(const SketchConfig& config) {
    return "(p=" + std::to_string(config.p()) + ", q=" + std::to_string(config.q()) + ")";
}

std::uint64_t RegisterHistogram::total() const noexcept {
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

Sketch::Sketch(SketchConfig config) : config_(config), registers_(config.m(), 0) {}

Sketch::Sketch(SketchConfig config, std::vector<std::uint8_t> registers)
    : config_(config), registers_(std::move(registers)) {}

Sketch Sketch::from_registers(SketchConfig config, std::vector<std::uint8_t> registers) {
    if (registers.size() != config.m()) {
        throw InvalidConfig("expected " + std::to_string(config.m()) + " registers, got " +
                            std::to_string(registers.size()));
    }
    const auto limit = static_cast<std::uint8_t>(config.max_value());
    for (std::size_t i = 0; i < registers.size(); ++i) {
        if (registers[i] > limit) {
            throw RangeError("register " + std::to_string(i) + " has value " +
                             std::to_string(registers[i]) + " > q+1 = " + std::to_string(limit));
        }
    }
    return Sketch(config, std::move(registers));
}

HashPosition locate_hash(const SketchConfig& config, std::uint64_t hash) noexcept {
    const int p = config.p();
    const int q = config.q();
    const auto index = static_cast<std::size_t>(hash >> (64 - p));
    // p < 64, so the shift is well defined; the low p bits of `rest` are zero.
    const std::uint64_t rest = hash << p;
    const int leading = std::countl_zero(rest);
    const int value = leading >= q ? q + 1 : leading + 1;
    return {index, static_cast<std::uint8_t>(value)};
}

void Sketch::insert_hash(std::uint64_t hash) noexcept {
    const auto [index, value] = locate_hash(config_, hash);
    if (value > registers_[index]) registers_[index] = value;
}

void Sketch::raise(std::size_t i, std::uint8_t value) {
    if (value > config_.max_value()) {
        throw RangeError("register value " + std::to_string(value) + " exceeds q+1");
    }
    registers_.at(i) = std::max(registers_.at(i), value);
}

void Sketch::merge_from(const Sketch& other) {
    if (other.config_ != config_) {
        throw ConfigMismatch("cannot merge sketches " + to_string(config_) + " and " +
                             to_string(other.config_));
    }
    std::transform(registers_.begin(), registers_.end(), other.registers_.begin(),
                   registers_.begin(), [](std::uint8_t a, std::uint8_t b) { return std::max(a, b); });
}

bool Sketch::is_empty() const noexcept {
    return std::all_of(registers_.begin(), registers_.end(), [](std::uint8_t r) { return r == 0; });
}

bool Sketch::is_saturated() const noexcept {
    const auto limit = static_cast<std::uint8_t>(config_.max_value());
    return std::all_of(registers_.begin(), registers_.end(),
                       [limit](std::uint8_t r) { return r == limit; });
}

Sketch merge(const Sketch& a, const Sketch& b) {
    Sketch result = a;
    result.merge_from(b);
    return result;
}

RegisterHistogram histogram(const Sketch& sketch) {
    RegisterHistogram h;
    h.counts.assign(static_cast<std::size_t>(sketch.config().max_value()) + 1, 0);
    for (auto r : sketch.registers()) ++h.counts[r];
    return h;
}

std::vector<std::uint8_t> serialize(const Sketch& sketch) {
    const auto registers = sketch.registers();
    std::vector<std::uint8_t> out(header_size + registers.size());
    auto it = std::copy(magic.begin(), magic.end(), out.begin());
    *it++ = format_version;
    *it++ = static_cast<std::uint8_t>(sketch.config().p());
    *it++ = static_cast<std::uint8_t>(sketch.config().q());
    std::copy(registers.begin(), registers.end(), it);
    return out;
}

Sketch deserialize(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < header_size) {
        throw FormatError("truncated sketch header (" + std::to_string(bytes.size()) + " bytes)");
    }
    if (!std::equal(magic.begin(), magic.end(), bytes.begin())) {
        throw FormatError("bad magic bytes, expected \"HLLS\"");
    }
    if (bytes[4] != format_version) {
        throw FormatError("unsupported format version " + std::to_string(bytes[4]));
    }
    const int p = bytes[5];
    const int q = bytes[6];
    std::optional<SketchConfig> config;
    try {
        config.emplace(p, q);
    } catch (const InvalidConfig& e) {
        throw FormatError(std::string("invalid sketch parameters: ") + e.what());
    }
    const auto payload = bytes.subspan(header_size);
    if (payload.size() != config->m()) {
        throw FormatError("expected " + std::to_string(config->m()) + " register bytes, got " +
                          std::to_string(payload.size()));
    }
    return Sketch::from_registers(*config, std::vector<std::uint8_t>(payload.begin(), payload.end()));
}

void write_sketch_file(const std::string& path, const Sketch& sketch) {
    const auto bytes = serialize(sketch);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing '" + path + "'");
}

Sketch read_sketch_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open sketch file '" + path + "'");
    std::vector<std::uint8_t> bytes{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
    return deserialize(bytes);
}

}  // namespace hll
