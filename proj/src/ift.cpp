#include "cacc/ift.hpp"

#include <algorithm>

#include "cacc/errors.hpp"

namespace cacc {

std::uint32_t bits_to_pattern(const BitVec& bits) {
  if (bits.size() > 32) throw ValidationError("bit vector longer than 32 entries");
  std::uint32_t p = 0;
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) p |= (1u << i);
  }
  return p;
}

BitVec pattern_to_bits(std::uint32_t pattern, int n_plus_1) {
  BitVec bits(static_cast<std::size_t>(n_plus_1), 0);
  for (int i = 0; i < n_plus_1; ++i) bits[static_cast<std::size_t>(i)] = (pattern >> i) & 1u;
  return bits;
}

std::string bits_to_string(const BitVec& bits) {
  std::string s(bits.size(), '0');
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) s[i] = '1';
  }
  return s;
}

BitVec string_to_bits(std::string_view s) {
  BitVec bits(s.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '1') {
      bits[i] = 1;
    } else if (s[i] != '0') {
      throw ValidationError("bit string may contain only '0' and '1'");
    }
  }
  return bits;
}

Ift::Ift(BitVec activation) : bits_(std::move(activation)) {
  if (bits_.size() < 2) throw ValidationError("platoon needs at least two vehicles");
  if (bits_.size() > 32) throw ValidationError("platoon size above 32 is not supported");
  for (auto b : bits_) {
    if (b > 1) throw ValidationError("activation entries must be 0 or 1");
  }
}

Ift Ift::parse(std::string_view bits) { return Ift(string_to_bits(bits)); }

int Ift::active_count() const {
  return static_cast<int>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

bool Ift::is_candidate() const { return bits_.front() == 1 && bits_.back() == 0; }

std::vector<DegenerationScenario> enumerate_degenerations(const Ift& ift) {
  std::vector<int> active;
  for (int i = 0; i < ift.size(); ++i) {
    if (ift.active(i)) active.push_back(i);
  }
  const std::size_t count = std::size_t{1} << active.size();
  std::vector<DegenerationScenario> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    BitVec outcome(ift.bits().size(), 0);
    for (std::size_t j = 0; j < active.size(); ++j) {
      if ((c >> j) & 1u) outcome[static_cast<std::size_t>(active[j])] = 1;
    }
    out.push_back(DegenerationScenario{std::move(outcome), ift.bits()});
  }
  return out;
}

ControllerMode receiver_mode(std::uint32_t outcome_pattern, int vehicle) {
  if (vehicle == 0) return ControllerMode::Acc;
  int status = 4;
  status -= 2 * static_cast<int>((outcome_pattern >> (vehicle - 1)) & 1u);
  if (vehicle >= 2) status -= static_cast<int>((outcome_pattern >> (vehicle - 2)) & 1u);
  return static_cast<ControllerMode>(status);
}

ReceiverStatus receiver_status(const BitVec& outcome) {
  const std::uint32_t pattern = bits_to_pattern(outcome);
  ReceiverStatus zeta(outcome.size());
  for (int i = 0; i < static_cast<int>(outcome.size()); ++i) {
    zeta[static_cast<std::size_t>(i)] = receiver_mode(pattern, i);
  }
  return zeta;
}

ReceiverStatus receiver_status(const DegenerationScenario& scenario) {
  if (scenario.outcome.size() != scenario.parent.size()) {
    throw ValidationError("scenario outcome and parent sizes differ");
  }
  for (std::size_t i = 0; i < scenario.outcome.size(); ++i) {
    if (scenario.outcome[i] > scenario.parent[i]) {
      throw ValidationError("scenario outcome exceeds parent activation");
    }
  }
  return receiver_status(scenario.outcome);
}

std::vector<Ift> candidate_ifts(int n_plus_1) {
  if (n_plus_1 < 2) throw ValidationError("candidate topologies need a platoon of at least 2");
  if (n_plus_1 > 32) throw ValidationError("platoon size above 32 is not supported");
  const int interior = n_plus_1 - 2;
  const std::size_t count = std::size_t{1} << interior;
  std::vector<Ift> out;
  out.reserve(count);
  for (std::size_t c = 0; c < count; ++c) {
    BitVec bits(static_cast<std::size_t>(n_plus_1), 0);
    bits[0] = 1;
    for (int j = 0; j < interior; ++j) bits[static_cast<std::size_t>(j + 1)] = (c >> j) & 1u;
    out.emplace_back(std::move(bits));
  }
  return out;
}

}  // namespace cacc
