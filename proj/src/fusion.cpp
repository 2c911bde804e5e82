#include "ghznet/fusion.hpp"

#include <algorithm>
#include <string>

namespace ghznet {

std::vector<GhzRecord> fuse_ghz_records(std::vector<GhzRecord> records, std::span<const QubitLabel> fused,
                                        bool success, SharedRecordPolicy policy)
{
    std::vector<std::size_t> owner;
    owner.reserve(fused.size());
    for (QubitLabel q : fused) {
        std::size_t found = records.size();
        for (std::size_t r = 0; r < records.size(); ++r)
            if (std::binary_search(records[r].qubits.begin(), records[r].qubits.end(), q)) {
                found = r;
                break;
            }
        if (found == records.size())
            throw FusionError("fused qubit " + std::to_string(q) + " is not in any record");
        if (std::find(owner.begin(), owner.end(), found) != owner.end() && policy == SharedRecordPolicy::reject)
            throw FusionError("two fused qubits belong to the same record");
        owner.push_back(found);
    }

    std::vector<QubitLabel> removed(fused.begin(), fused.end());
    std::sort(removed.begin(), removed.end());
    if (std::adjacent_find(removed.begin(), removed.end()) != removed.end())
        throw FusionError("a qubit is fused twice");

    auto strip = [&](GhzRecord& rec) {
        std::vector<QubitLabel> kept;
        kept.reserve(rec.qubits.size());
        std::set_difference(rec.qubits.begin(), rec.qubits.end(), removed.begin(), removed.end(),
                            std::back_inserter(kept));
        rec.qubits = std::move(kept);
    };

    std::vector<GhzRecord> out;
    out.reserve(records.size());
    if (success) {
        std::vector<std::size_t> parts = owner;
        std::sort(parts.begin(), parts.end());
        parts.erase(std::unique(parts.begin(), parts.end()), parts.end());
        GhzRecord merged;
        for (std::size_t r : parts)
            merged.qubits.insert(merged.qubits.end(), records[r].qubits.begin(), records[r].qubits.end());
        std::sort(merged.qubits.begin(), merged.qubits.end());
        strip(merged);
        for (std::size_t r = 0; r < records.size(); ++r) {
            if (!parts.empty() && r == parts.front()) {
                if (merged.size() > 0)
                    out.push_back(std::move(merged));
            }
            else if (!std::binary_search(parts.begin(), parts.end(), r)) {
                out.push_back(std::move(records[r]));
            }
        }
    }
    else {
        for (std::size_t r = 0; r < records.size(); ++r) {
            if (std::find(owner.begin(), owner.end(), r) != owner.end())
                strip(records[r]);
            if (records[r].size() > 0)
                out.push_back(std::move(records[r]));
        }
    }
    return out;
}

} // namespace ghznet
