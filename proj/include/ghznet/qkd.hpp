#pragma once

#include "ghznet/rng.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ghznet {

enum class Basis : std::uint8_t { computational, hadamard };

std::string_view to_string(Basis b);

/// Alice holds m qubits of the shared GHZ state, Bob holds l.
struct GhzShare {
    int m = 1;
    int l = 1;
};

struct QkdRound {
    GhzShare share;
    Basis basis_a = Basis::computational;
    Basis basis_b = Basis::computational;
    std::vector<std::uint8_t> alice;  ///< m outcome bits
    std::vector<std::uint8_t> bob;    ///< l outcome bits
};

class QkdError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Ideal outcome statistics of measuring |0..0> + |1..1> in the given bases.
QkdRound measure_share(GhzShare share, Basis basis_a, Basis basis_b, Rng& rng);

/// Key bits derived independently by each party for a same-basis round.
struct SiftedBit {
    std::uint8_t alice = 0;
    std::uint8_t bob = 0;
};

/// nullopt when the bases differ. Throws QkdError when a computational-basis
/// string is not constant or a string length disagrees with the share.
std::optional<SiftedBit> sift_round(const QkdRound& round);

struct QkdResult {
    std::vector<QkdRound> rounds;
    std::vector<std::optional<SiftedBit>> sifted;  ///< per round
    std::vector<std::uint8_t> alice_key;
    std::vector<std::uint8_t> bob_key;
    std::int64_t mismatches = 0;

    double sift_rate() const
    {
        return rounds.empty() ? 0.0 : static_cast<double>(alice_key.size()) / static_cast<double>(rounds.size());
    }
};

/// One round per share with independent uniform bases. Round i draws from a
/// stream derived from (seed, i) so the result does not depend on threads.
QkdResult run_qkd(std::span<const GhzShare> shares, std::uint64_t seed, int threads = 1);

/// Writes "# bits <n>" followed by the key packed MSB-first as lowercase hex.
void write_key_hex(std::ostream& out, std::span<const std::uint8_t> bits);

/// Writes `m,l,basis_a,basis_b,sifted,key_bit` rows.
void write_rounds_csv(std::ostream& out, const QkdResult& result);

} // namespace ghznet
