#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dcb/errors.hpp"

namespace dcb {

/// Number of 20 MHz basic channels in the system, indexed 1..8.
inline constexpr int kBasicChannels = 8;

enum class Policy { OP, SCB, AM, PU };

inline const char* policy_name(Policy p) {
  switch (p) {
    case Policy::OP: return "OP";
    case Policy::SCB: return "SCB";
    case Policy::AM: return "AM";
    case Policy::PU: return "PU";
  }
  return "?";
}

inline Policy parse_policy(const std::string& s) {
  if (s == "OP") return Policy::OP;
  if (s == "SCB") return Policy::SCB;
  if (s == "AM") return Policy::AM;
  if (s == "PU") return Policy::PU;
  raise(Errc::invalid_policy, "unknown channel bonding policy '" + s + "'");
}

/// A contiguous block of basic channels [left, right], inclusive, 1-based.
/// Valid blocks have power-of-two width and sit on the binary channelization
/// tree anchored at channel 1.
struct ChannelRange {
  int left = 1;
  int right = 1;

  int width() const { return right - left + 1; }
  bool contains(int channel) const { return channel >= left && channel <= right; }
  bool contains(const ChannelRange& other) const {
    return other.left >= left && other.right <= right;
  }
  bool overlaps(const ChannelRange& other) const {
    return left <= other.right && other.left <= right;
  }

  friend bool operator==(const ChannelRange&, const ChannelRange&) = default;
  friend auto operator<=>(const ChannelRange&, const ChannelRange&) = default;
};

inline bool valid_block_width(int w) { return w == 1 || w == 2 || w == 4 || w == 8; }

inline void validate_channel_range(const ChannelRange& r) {
  if (r.left < 1 || r.right > kBasicChannels || r.left > r.right)
    raise(Errc::invalid_range, "channel block [" + std::to_string(r.left) + "," +
                                   std::to_string(r.right) + "] out of bounds");
  const int w = r.width();
  if (!valid_block_width(w))
    raise(Errc::invalid_range, "channel block width " + std::to_string(w) +
                                   " is not in {1,2,4,8}");
  if ((r.left - 1) % w != 0)
    raise(Errc::invalid_range, "channel block [" + std::to_string(r.left) + "," +
                                   std::to_string(r.right) +
                                   "] is not aligned to the channelization tree");
}

inline ChannelRange make_channel_range(int left, int right) {
  ChannelRange r{left, right};
  validate_channel_range(r);
  return r;
}

inline std::string to_string(const ChannelRange& r) {
  if (r.left == r.right) return std::to_string(r.left);
  return std::to_string(r.left) + "-" + std::to_string(r.right);
}

/// Index distance from a channel to the nearest edge of a block; 0 inside.
inline int channel_gap(const ChannelRange& r, int channel) {
  if (channel < r.left) return r.left - channel;
  if (channel > r.right) return channel - r.right;
  return 0;
}

/// A WLAN's allocated block plus the primary channel it listens on.
struct ChannelAllocation {
  ChannelRange allocated;
  int primary = 1;

  friend bool operator==(const ChannelAllocation&, const ChannelAllocation&) = default;
};

inline void validate_allocation(const ChannelAllocation& a) {
  validate_channel_range(a.allocated);
  if (!a.allocated.contains(a.primary))
    raise(Errc::invalid_range, "primary channel " + std::to_string(a.primary) +
                                   " outside allocated block [" +
                                   std::to_string(a.allocated.left) + "," +
                                   std::to_string(a.allocated.right) + "]");
}

inline ChannelAllocation make_allocation(ChannelRange allocated, int primary) {
  ChannelAllocation a{allocated, primary};
  validate_allocation(a);
  return a;
}

/// Set of basic channels as a bit mask (bit c-1 = channel c).
struct ChannelSet {
  std::uint8_t mask = 0;

  static ChannelSet all() { return ChannelSet{0xff}; }
  static ChannelSet none() { return ChannelSet{0}; }

  bool test(int channel) const { return (mask >> (channel - 1)) & 1u; }
  void set(int channel) { mask |= static_cast<std::uint8_t>(1u << (channel - 1)); }
  void reset(int channel) { mask &= static_cast<std::uint8_t>(~(1u << (channel - 1))); }
  bool contains(const ChannelRange& r) const {
    for (int c = r.left; c <= r.right; ++c)
      if (!test(c)) return false;
    return true;
  }
  int count() const { return __builtin_popcount(mask); }

  friend bool operator==(const ChannelSet&, const ChannelSet&) = default;
};

/// The aligned block of the given width that contains the channel.
inline ChannelRange aligned_block(int channel, int width) {
  const int left = ((channel - 1) / width) * width + 1;
  return ChannelRange{left, left + width - 1};
}

/// All aligned blocks containing the primary and contained in the allocation,
/// one per width, sorted ascending by width. The width-1 block is first.
inline std::vector<ChannelRange> candidate_blocks(const ChannelAllocation& alloc) {
  validate_allocation(alloc);
  std::vector<ChannelRange> out;
  for (int w = 1; w <= alloc.allocated.width(); w *= 2) {
    ChannelRange block = aligned_block(alloc.primary, w);
    if (alloc.allocated.contains(block)) out.push_back(block);
  }
  return out;
}

struct WeightedRange {
  ChannelRange range;
  double probability = 0.0;

  friend bool operator==(const WeightedRange&, const WeightedRange&) = default;
};

/// Deterministic enumeration of the channel-selection outcomes for one
/// backoff termination, with their probabilities. OP/AM yield one entry with
/// probability 1, SCB one entry or none, PU a uniform distribution over the
/// feasible blocks. The primary must be idle.
inline std::vector<WeightedRange> feasible_transitions(Policy policy,
                                                       const ChannelAllocation& alloc,
                                                       ChannelSet idle) {
  validate_allocation(alloc);
  if (!idle.test(alloc.primary))
    raise(Errc::primary_busy, "backoff cannot expire while the primary channel " +
                                  std::to_string(alloc.primary) + " is busy");
  switch (policy) {
    case Policy::OP:
      return {{aligned_block(alloc.primary, 1), 1.0}};
    case Policy::SCB:
      if (idle.contains(alloc.allocated)) return {{alloc.allocated, 1.0}};
      return {};
    case Policy::AM: {
      ChannelRange best = aligned_block(alloc.primary, 1);
      for (const ChannelRange& block : candidate_blocks(alloc))
        if (idle.contains(block)) best = block;
      return {{best, 1.0}};
    }
    case Policy::PU: {
      std::vector<WeightedRange> out;
      for (const ChannelRange& block : candidate_blocks(alloc))
        if (idle.contains(block)) out.push_back({block, 0.0});
      const double p = 1.0 / static_cast<double>(out.size());
      for (WeightedRange& wr : out) wr.probability = p;
      return out;
    }
  }
  return {};
}

/// The transmission channel a node picks when its backoff expires, or nullopt
/// when the policy forbids transmitting (SCB with a partially busy
/// allocation). `draw` in [0,1) resolves the PU choice and is ignored by the
/// deterministic policies.
inline std::optional<ChannelRange> select_channel(Policy policy,
                                                  const ChannelAllocation& alloc,
                                                  ChannelSet idle, double draw) {
  std::vector<WeightedRange> feasible = feasible_transitions(policy, alloc, idle);
  if (feasible.empty()) return std::nullopt;
  if (policy == Policy::PU) {
    auto k = static_cast<std::size_t>(feasible.size());
    auto i = static_cast<std::size_t>(draw * static_cast<double>(k));
    if (i >= k) i = k - 1;
    return feasible[i].range;
  }
  return feasible.front().range;
}

}  // namespace dcb
