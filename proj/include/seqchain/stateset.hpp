#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace seqchain {

// Subsets of the state space as bitmasks. Subset enumeration is
// exponential, so state spaces beyond ~16 states are out of scope.
using StateSet = std::uint32_t;

inline constexpr int kMaxStates = 20;

inline StateSet full_set(int n) {
    return (n >= 32) ? ~StateSet{0} : ((StateSet{1} << n) - 1);
}

inline bool set_contains(StateSet set, int s) {
    return (set >> s) & 1u;
}

inline StateSet set_complement(StateSet set, int n) {
    return full_set(n) & ~set;
}

inline int set_size(StateSet set) {
    return std::popcount(set);
}

inline std::vector<int> set_members(StateSet set) {
    std::vector<int> out;
    for (int s = 0; set >> s; ++s)
        if (set_contains(set, s)) out.push_back(s);
    return out;
}

/// Calls fn(D) for every nonempty proper subset D of C, in ascending
/// bitmask order.
template <typename Fn>
void for_each_proper_subset(StateSet C, Fn&& fn) {
    // Enumerates submasks of C ascending by iterating over all masks
    // below C and keeping those contained in C.
    for (StateSet D = 1; D < C; ++D) {
        if ((D & C) == D) fn(D);
    }
}

} // namespace seqchain
