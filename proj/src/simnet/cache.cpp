#include "tilecrypt/simnet.hpp"

namespace tilecrypt::simnet {

std::string_view to_string(LookupResult r)
{
    switch (r) {
    case LookupResult::Hit: return "hit";
    case LookupResult::RwwHit: return "rww";
    case LookupResult::Miss: return "miss";
    }
    return "?";
}

std::optional<int> CacheState::in_flight(std::uint64_t object) const
{
    const auto it = in_flight_.find(object);
    if (it == in_flight_.end()) return std::nullopt;
    return it->second;
}

LookupResult CacheState::lookup(std::uint64_t object)
{
    if (capacity_ == 0) return LookupResult::Miss;
    if (const auto it = index_.find(object); it != index_.end()) {
        lru_.splice(lru_.begin(), lru_, it->second);
        return LookupResult::Hit;
    }
    if (in_flight_.contains(object)) return LookupResult::RwwHit;
    return LookupResult::Miss;
}

void CacheState::begin_fill(std::uint64_t object, int flow)
{
    if (capacity_ == 0) return;
    in_flight_[object] = flow;
}

bool CacheState::complete_fill(std::uint64_t object, int flow, std::size_t size)
{
    if (const auto it = in_flight_.find(object); it != in_flight_.end() && it->second == flow) in_flight_.erase(it);
    if (capacity_ == 0 || size > capacity_ || index_.contains(object)) return false;
    while (used_ + size > capacity_) {
        const auto& victim = lru_.back();
        used_ -= victim.second;
        index_.erase(victim.first);
        lru_.pop_back();
    }
    lru_.emplace_front(object, size);
    index_[object] = lru_.begin();
    used_ += size;
    return true;
}

std::vector<std::uint64_t> CacheState::lru_order() const
{
    std::vector<std::uint64_t> out;
    out.reserve(lru_.size());
    for (auto it = lru_.rbegin(); it != lru_.rend(); ++it) out.push_back(it->first);
    return out;
}

}  // namespace tilecrypt::simnet
