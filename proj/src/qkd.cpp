#include "ghznet/qkd.hpp"

#include "ghznet/protocol.hpp"

#include <ostream>

namespace ghznet {

std::string_view to_string(Basis b)
{
    return b == Basis::computational ? "comp" : "had";
}

QkdRound measure_share(GhzShare share, Basis basis_a, Basis basis_b, Rng& rng)
{
    if (share.m < 1 || share.l < 1)
        throw std::invalid_argument("share: both parties need at least one qubit");
    QkdRound r{share, basis_a, basis_b, std::vector<std::uint8_t>(static_cast<std::size_t>(share.m)),
               std::vector<std::uint8_t>(static_cast<std::size_t>(share.l))};
    auto constant = [&](std::vector<std::uint8_t>& v, std::uint8_t bit) { std::fill(v.begin(), v.end(), bit); };
    auto uniform = [&](std::vector<std::uint8_t>& v) {
        for (auto& b : v)
            b = static_cast<std::uint8_t>(rng.bits() >> 63);
    };

    if (basis_a == Basis::computational && basis_b == Basis::computational) {
        const auto bit = static_cast<std::uint8_t>(rng.bits() >> 63);
        constant(r.alice, bit);
        constant(r.bob, bit);
    }
    else if (basis_a == Basis::hadamard && basis_b == Basis::hadamard) {
        // uniform over strings of even total parity: draw all but the last bit
        uniform(r.alice);
        uniform(r.bob);
        std::uint8_t parity = 0;
        for (auto b : r.alice)
            parity ^= b;
        for (std::size_t i = 0; i + 1 < r.bob.size(); ++i)
            parity ^= r.bob[i];
        r.bob.back() = parity;
    }
    else {
        // Marginals: the computational side sees a constant uniform bit, the
        // Hadamard side sees uniform bits.
        if (basis_a == Basis::computational) {
            constant(r.alice, static_cast<std::uint8_t>(rng.bits() >> 63));
            uniform(r.bob);
        }
        else {
            uniform(r.alice);
            constant(r.bob, static_cast<std::uint8_t>(rng.bits() >> 63));
        }
    }
    return r;
}

namespace {

std::uint8_t key_bit(std::span<const std::uint8_t> bits, Basis basis)
{
    if (bits.empty())
        throw QkdError("round: empty outcome string");
    if (basis == Basis::computational) {
        for (auto b : bits)
            if (b != bits.front())
                throw QkdError("round: computational-basis outcomes are not constant");
        return bits.front();
    }
    std::uint8_t parity = 0;
    for (auto b : bits)
        parity ^= b & 1;
    return parity;
}

} // namespace

std::optional<SiftedBit> sift_round(const QkdRound& round)
{
    if (round.alice.size() != static_cast<std::size_t>(round.share.m) ||
        round.bob.size() != static_cast<std::size_t>(round.share.l))
        throw QkdError("round: outcome length does not match the share");
    if (round.basis_a != round.basis_b)
        return std::nullopt;
    return SiftedBit{key_bit(round.alice, round.basis_a), key_bit(round.bob, round.basis_b)};
}

QkdResult run_qkd(std::span<const GhzShare> shares, std::uint64_t seed, int threads)
{
    QkdResult out;
    out.rounds.resize(shares.size());
    out.sifted.resize(shares.size());
    for_each_trial(static_cast<std::int64_t>(shares.size()), threads, [&](std::int64_t i, int) {
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i), 5));
        const Basis a = rng.bernoulli(0.5) ? Basis::hadamard : Basis::computational;
        const Basis b = rng.bernoulli(0.5) ? Basis::hadamard : Basis::computational;
        const auto k = static_cast<std::size_t>(i);
        out.rounds[k] = measure_share(shares[k], a, b, rng);
        out.sifted[k] = sift_round(out.rounds[k]);
    });
    for (const auto& s : out.sifted) {
        if (!s)
            continue;
        out.alice_key.push_back(s->alice);
        out.bob_key.push_back(s->bob);
        out.mismatches += s->alice != s->bob;
    }
    return out;
}

void write_key_hex(std::ostream& out, std::span<const std::uint8_t> bits)
{
    static constexpr char digits[] = "0123456789abcdef";
    out << "# bits " << bits.size() << '\n';
    for (std::size_t i = 0; i < bits.size(); i += 4) {
        unsigned nibble = 0;
        for (std::size_t j = 0; j < 4; ++j)
            nibble = (nibble << 1) | (i + j < bits.size() ? (bits[i + j] & 1u) : 0u);
        out << digits[nibble];
        if ((i / 4 + 1) % 64 == 0)
            out << '\n';
    }
    const std::size_t nibbles = (bits.size() + 3) / 4;
    if (nibbles % 64 != 0)
        out << '\n';
}

void write_rounds_csv(std::ostream& out, const QkdResult& result)
{
    out << "m,l,basis_a,basis_b,sifted,key_bit\n";
    for (std::size_t i = 0; i < result.rounds.size(); ++i) {
        const auto& r = result.rounds[i];
        const auto& s = result.sifted[i];
        out << r.share.m << ',' << r.share.l << ',' << to_string(r.basis_a) << ',' << to_string(r.basis_b) << ','
            << (s ? 1 : 0) << ',';
        if (s)
            out << int(s->alice);
        else
            out << '-';
        out << '\n';
    }
}

} // namespace ghznet
