#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace hll {

// HyperLogLog parameters: p index bits select one of m = 2^p registers, the
// following q bits are scanned for the first 1-bit. Register values therefore
// live in [0, q + 1].
class SketchConfig {
public:
    static constexpr int min_p = 2;
    static constexpr int max_p = 26;

    // Throws InvalidConfig unless 2 <= p <= 26, q >= 0 and p + q <= 64.
    SketchConfig(int p, int q);

    int p() const noexcept { return p_; }
    int q() const noexcept { return q_; }
    std::uint32_t m() const noexcept { return std::uint32_t{1} << p_; }
    // Largest register value, q + 1.
    int max_value() const noexcept { return q_ + 1; }

    friend bool operator==(const SketchConfig&, const SketchConfig&) = default;

private:
    int p_;
    int q_;
};

std::string to_string(const SketchConfig& config);

// Multiplicity vector C_0..C_{q+1}. Sums to m.
struct RegisterHistogram {
    std::vector<std::uint64_t> counts;

    std::uint64_t operator[](std::size_t k) const { return counts[k]; }
    std::uint64_t total() const noexcept;

    friend bool operator==(const RegisterHistogram&, const RegisterHistogram&) = default;
};

// One register per byte. Single writer; copies are independent.
class Sketch {
public:
    explicit Sketch(SketchConfig config);

    // Throws InvalidConfig on a size mismatch and RangeError if a value exceeds q + 1.
    static Sketch from_registers(SketchConfig config, std::vector<std::uint8_t> registers);

    const SketchConfig& config() const noexcept { return config_; }
    std::span<const std::uint8_t> registers() const noexcept { return registers_; }

    // Algorithm: the most significant p bits pick the register, the next q bits
    // (most significant first) give the rank of the first 1-bit, or q + 1.
    void insert_hash(std::uint64_t hash) noexcept;

    // Raises register i to at least `value`. Throws RangeError if value > q + 1.
    void raise(std::size_t i, std::uint8_t value);

    // Register-wise maximum with `other` in place.
    void merge_from(const Sketch& other);

    bool is_empty() const noexcept;
    bool is_saturated() const noexcept;

    friend bool operator==(const Sketch&, const Sketch&) = default;

private:
    Sketch(SketchConfig config, std::vector<std::uint8_t> registers);

    SketchConfig config_;
    std::vector<std::uint8_t> registers_;
};

// Register index (0-based) and value that `hash` maps to.
struct HashPosition {
    std::size_t index;
    std::uint8_t value;
};
HashPosition locate_hash(const SketchConfig& config, std::uint64_t hash) noexcept;

// Throws ConfigMismatch if the parameters differ.
Sketch merge(const Sketch& a, const Sketch& b);

RegisterHistogram histogram(const Sketch& sketch);

// Binary layout: "HLLS", version 0x01, p, q, then m register bytes.
inline constexpr std::uint8_t format_version = 0x01;

std::vector<std::uint8_t> serialize(const Sketch& sketch);
Sketch deserialize(std::span<const std::uint8_t> bytes);

void write_sketch_file(const std::string& path, const Sketch& sketch);
Sketch read_sketch_file(const std::string& path);

}  // namespace hll
