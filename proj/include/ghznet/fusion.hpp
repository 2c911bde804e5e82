#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

namespace ghznet {

using QubitLabel = std::uint32_t;

/// The qubits making up one GHZ state. Qubits are kept sorted.
struct GhzRecord {
    std::vector<QubitLabel> qubits;

    std::size_t size() const { return qubits.size(); }
    friend bool operator==(const GhzRecord&, const GhzRecord&) = default;
};

class FusionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// How a fusion treats two fused qubits that sit in the same record. `reject`
/// is the strict algebra (at most one fused qubit per record). `merge` accepts
/// it, which happens when fusions close a cycle in the network: the record is
/// still merged once and every fused qubit leaves it.
enum class SharedRecordPolicy { reject, merge };

/// Applies one n-fusion (n = fused.size()) to a set of disjoint GHZ records.
///
/// Success replaces the participating records with one record of all their
/// unmeasured qubits (size sum(m_i) - n). Failure X-measures each fused qubit,
/// shrinking its record by one. Empty records are dropped. A single fused
/// qubit with `success == false` is a plain X measurement.
std::vector<GhzRecord> fuse_ghz_records(std::vector<GhzRecord> records, std::span<const QubitLabel> fused,
                                        bool success,
                                        SharedRecordPolicy policy = SharedRecordPolicy::reject);

} // namespace ghznet
