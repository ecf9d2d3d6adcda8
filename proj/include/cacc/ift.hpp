#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace cacc {

// Bit vector over the platoon, leader first. Bit i is vehicle i.
using BitVec = std::vector<std::uint8_t>;

std::uint32_t bits_to_pattern(const BitVec& bits);
BitVec pattern_to_bits(std::uint32_t pattern, int n_plus_1);
std::string bits_to_string(const BitVec& bits);
BitVec string_to_bits(std::string_view s);

// Information flow topology: per-vehicle activation of the "send"
// functionality of the V2V device.
class Ift {
 public:
  explicit Ift(BitVec activation);
  static Ift parse(std::string_view bits);

  int size() const { return static_cast<int>(bits_.size()); }  // N+1
  bool active(int i) const { return bits_[static_cast<std::size_t>(i)] != 0; }
  int active_count() const;
  std::uint32_t pattern() const { return bits_to_pattern(bits_); }
  const BitVec& bits() const { return bits_; }
  std::string str() const { return bits_to_string(bits_); }

  // Candidate topologies always broadcast from the leader and never from
  // the last vehicle.
  bool is_candidate() const;

  friend bool operator==(const Ift&, const Ift&) = default;

 private:
  BitVec bits_;
};

// One realized sender outcome for a topology: outcome[i] = 1 iff vehicle i
// had its send functionality active and its broadcast succeeded.
struct DegenerationScenario {
  BitVec outcome;
  BitVec parent;  // activation vector of the topology this degenerates from

  std::uint32_t pattern() const { return bits_to_pattern(outcome); }
  std::string str() const { return bits_to_string(outcome); }
};

// Controller variant vehicle i runs, given which predecessor messages
// arrived this instant.
enum class ControllerMode : int { Cacc1 = 1, Cacc2 = 2, Cacc3 = 3, Acc = 4 };

using ReceiverStatus = std::vector<ControllerMode>;

// All 2^(number of active senders) outcomes of an IFT, exactly once, in
// canonical order: the active bit positions form a little-endian counter,
// so the all-failure outcome comes first and the intact topology last.
std::vector<DegenerationScenario> enumerate_degenerations(const Ift& ift);

// Receiver status of every vehicle under a realized outcome. A successful
// broadcast from vehicle i improves the status of followers i+1 and i+2;
// with no message received a vehicle falls back to ACC.
ReceiverStatus receiver_status(const DegenerationScenario& scenario);
ReceiverStatus receiver_status(const BitVec& outcome);
ControllerMode receiver_mode(std::uint32_t outcome_pattern, int vehicle);

// All candidate topologies for a platoon of n_plus_1 vehicles: leader bit
// set, last bit clear, interior bits counted little-endian.
std::vector<Ift> candidate_ifts(int n_plus_1);

}  // namespace cacc
