#include "webphuzz/mutation.hpp"

#include <algorithm>
#include <array>

#include "webphuzz/error.hpp"

namespace webphuzz::mutation {

namespace {

constexpr char kFirstPrintable = 0x20;
constexpr char kLastPrintable = 0x7e;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

char random_printable(Rng& rng) {
  return static_cast<char>(std::uniform_int_distribution<int>(kFirstPrintable, kLastPrintable)(rng));
}

char random_printable_except(Rng& rng, char current) {
  // 94 choices: the printable range minus `current` (if it is in range).
  for (;;) {
    char c = random_printable(rng);
    if (c != current) return c;
  }
}

char random_digit(Rng& rng) {
  return static_cast<char>('0' + std::uniform_int_distribution<int>(0, 9)(rng));
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

std::vector<std::size_t> digit_positions(std::string_view s) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (is_digit(s[i])) out.push_back(i);
  }
  return out;
}

std::string insert_at(std::string_view value, std::size_t pos, std::string_view what) {
  std::string out;
  out.reserve(value.size() + what.size());
  out.append(value.substr(0, pos));
  out.append(what);
  out.append(value.substr(pos));
  return out;
}

// Swap two positions holding different characters. Returns false when no such
// pair exists among `positions`.
bool swap_distinct(std::string& s, const std::vector<std::size_t>& positions, Rng& rng) {
  if (positions.size() < 2) return false;
  bool any = false;
  for (std::size_t i = 1; i < positions.size() && !any; ++i) {
    any = s[positions[i]] != s[positions[0]];
  }
  if (!any) return false;
  for (;;) {
    auto a = positions[uniform_index(rng, positions.size())];
    auto b = positions[uniform_index(rng, positions.size())];
    if (s[a] != s[b]) {
      std::swap(s[a], s[b]);
      return true;
    }
  }
}

std::vector<std::size_t> all_positions(std::string_view s) {
  std::vector<std::size_t> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = i;
  return out;
}

}  // namespace

std::string make_marker_token(Rng& rng) {
  static constexpr char hex[] = "0123456789abcdef";
  std::string token = "fz";
  for (int i = 0; i < 8; ++i) token += hex[std::uniform_int_distribution<int>(0, 15)(rng)];
  return token;
}

bool is_marker_token(std::string_view text) {
  if (text.size() != 10 || text.substr(0, 2) != "fz") return false;
  return std::all_of(text.begin() + 2, text.end(),
                     [](char c) { return is_digit(c) || (c >= 'a' && c <= 'f'); });
}

ParamMutation mutate_param_detailed(std::string_view value, MutatorKind kind, Rng& rng) {
  ParamMutation m;
  m.applied = kind;
  std::string s(value);
  const std::size_t n = s.size();

  switch (kind) {
    case MutatorKind::insert_char:
      m.value = insert_at(s, uniform_index(rng, n + 1), std::string(1, random_printable(rng)));
      return m;

    case MutatorKind::delete_char:
      if (n > 0) s.erase(uniform_index(rng, n), 1);
      m.value = std::move(s);
      return m;

    case MutatorKind::replace_char:
      if (n == 0) return mutate_param_detailed(value, MutatorKind::insert_char, rng);
      {
        auto pos = uniform_index(rng, n);
        s[pos] = random_printable_except(rng, s[pos]);
      }
      m.value = std::move(s);
      return m;

    case MutatorKind::swap_chars:
      if (n == 0) {
        m.value = std::move(s);
        return m;
      }
      if (!swap_distinct(s, all_positions(s), rng))
        return mutate_param_detailed(value, MutatorKind::replace_char, rng);
      m.value = std::move(s);
      return m;

    case MutatorKind::insert_digit: {
      auto digits = digit_positions(s);
      if (digits.empty()) return mutate_param_detailed(value, MutatorKind::insert_char, rng);
      // Next to an existing digit, either side.
      auto pos = digits[uniform_index(rng, digits.size())] + uniform_index(rng, 2);
      m.value = insert_at(s, pos, std::string(1, random_digit(rng)));
      return m;
    }

    case MutatorKind::delete_digit: {
      auto digits = digit_positions(s);
      if (digits.empty()) return mutate_param_detailed(value, MutatorKind::delete_char, rng);
      s.erase(digits[uniform_index(rng, digits.size())], 1);
      m.value = std::move(s);
      return m;
    }

    case MutatorKind::replace_digit: {
      auto digits = digit_positions(s);
      if (digits.empty()) return mutate_param_detailed(value, MutatorKind::replace_char, rng);
      auto pos = digits[uniform_index(rng, digits.size())];
      char d;
      do {
        d = random_digit(rng);
      } while (d == s[pos]);
      s[pos] = d;
      m.value = std::move(s);
      return m;
    }

    case MutatorKind::swap_digits: {
      auto digits = digit_positions(s);
      if (!swap_distinct(s, digits, rng))
        return mutate_param_detailed(value, MutatorKind::swap_chars, rng);
      m.value = std::move(s);
      return m;
    }

    case MutatorKind::duplicate_slice: {
      if (n == 0 || n >= kMaxValueBytes)
        return mutate_param_detailed(value, n == 0 ? MutatorKind::insert_char : MutatorKind::truncate_tail, rng);
      auto start = uniform_index(rng, n);
      auto max_len = std::min(n - start, kMaxValueBytes - n);
      auto len = 1 + uniform_index(rng, max_len);
      auto slice = s.substr(start, len);
      m.value = insert_at(s, uniform_index(rng, n + 1), slice);
      return m;
    }

    case MutatorKind::truncate_tail:
      if (n > 0) s.resize(uniform_index(rng, n));
      m.value = std::move(s);
      return m;

    case MutatorKind::protocol_prefix: {
      auto prefix = kProtocolPrefixes[uniform_index(rng, std::size(kProtocolPrefixes))];
      m.payload = std::string(prefix);
      m.value = std::string(prefix) + s;
      return m;
    }

    case MutatorKind::patr_payload: {
      auto payload = kPathTraversalPayloads[uniform_index(rng, std::size(kPathTraversalPayloads))];
      m.payload = std::string(payload);
      m.value = insert_at(s, uniform_index(rng, n + 1), payload);
      return m;
    }

    case MutatorKind::xss_payload: {
      auto tmpl = std::string(kXssTemplates[uniform_index(rng, std::size(kXssTemplates))]);
      auto token = make_marker_token(rng);
      tmpl.replace(tmpl.find("TOKEN"), 5, token);
      m.token = token;
      m.payload = tmpl;
      m.value = insert_at(s, uniform_index(rng, n + 1), tmpl);
      return m;
    }
  }
  m.value = std::move(s);
  return m;
}

std::string mutate_param(std::string_view value, MutatorKind kind, Rng& rng) {
  return mutate_param_detailed(value, kind, rng).value;
}

std::vector<Candidate> expand_seeds(std::shared_ptr<const EndpointConfig> cfg) {
  if (!cfg || cfg->methods.empty()) throw EmptyConfig("endpoint config has no methods");

  struct Slot {
    ParamKey key;
    const std::vector<std::string>* seeds;
    std::size_t choices;  // 1 for fixed params
  };
  std::vector<Slot> slots;
  for (auto location : kAllLocations) {
    const auto* group = cfg->group(location);
    if (!group) continue;
    for (const auto& p : group->params) {
      if (p.mode == ParamMode::login || p.seeds.empty()) continue;
      slots.push_back({{location, p.name}, &p.seeds, p.mode == ParamMode::fixed ? 1 : p.seeds.size()});
    }
  }

  // Odometer over seed choices; the last slot varies fastest.
  auto advance = [&](std::vector<std::size_t>& idx) {
    for (std::size_t i = idx.size(); i-- > 0;) {
      if (++idx[i] < slots[i].choices) return true;
      idx[i] = 0;
    }
    return false;
  };

  std::vector<Candidate> out;
  for (auto method : cfg->methods) {
    std::vector<std::size_t> idx(slots.size(), 0);
    do {
      if (out.size() >= kMaxInitialCandidates) return out;
      Candidate c;
      c.endpoint = cfg;
      c.method = method;
      for (std::size_t i = 0; i < slots.size(); ++i) c.values[slots[i].key] = (*slots[i].seeds)[idx[i]];
      out.push_back(std::move(c));
    } while (advance(idx));
  }
  return out;
}

MutatorKind draw_mutator(Rng& rng, const SpecialRates& rates) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  if (unit(rng) < rates.patr) return MutatorKind::patr_payload;
  if (unit(rng) < rates.xss) return MutatorKind::xss_payload;
  if (unit(rng) < rates.protocol) return MutatorKind::protocol_prefix;
  return static_cast<MutatorKind>(std::uniform_int_distribution<int>(0, kGenericMutatorCount - 1)(rng));
}

std::vector<Candidate> mutate_candidate(const Candidate& parent, const MutationBudget& budget,
                                        const GlobalCoverageStore& dedup, const SpecialRates& rates) {
  if (!parent.endpoint) throw NoFuzzParams("candidate has no endpoint");

  struct FuzzGroup {
    ParamLocation location;
    std::vector<ParamKey> keys;
    double weight;
  };
  std::vector<FuzzGroup> groups;
  for (auto location : kAllLocations) {
    const auto* g = parent.endpoint->group(location);
    if (!g) continue;
    FuzzGroup fg{location, {}, g->weight};
    for (const auto& p : g->params) {
      ParamKey key{location, p.name};
      if (p.mode == ParamMode::fuzz && parent.values.count(key)) fg.keys.push_back(std::move(key));
    }
    if (!fg.keys.empty()) groups.push_back(std::move(fg));
  }
  if (groups.empty()) throw NoFuzzParams("candidate has no fuzz parameters");

  std::vector<double> weights;
  double total = 0.0;
  for (const auto& g : groups) {
    weights.push_back(g.weight);
    total += g.weight;
  }
  if (total <= 0.0) std::fill(weights.begin(), weights.end(), 1.0);
  std::discrete_distribution<std::size_t> pick_group(weights.begin(), weights.end());

  const auto parent_hash = candidate_hash(parent);
  Rng rng(budget.rng_seed);
  std::vector<Candidate> children;
  children.reserve(budget.energy);

  for (std::uint32_t i = 0; i < budget.energy; ++i) {
    const auto& group = groups[pick_group(rng)];
    const auto& key = group.keys[uniform_index(rng, group.keys.size())];
    auto kind = draw_mutator(rng, rates);
    const auto& old_value = parent.values.at(key);
    auto mutation = mutate_param_detailed(old_value, kind, rng);
    if (mutation.value.size() > kMaxValueBytes) mutation.value.resize(kMaxValueBytes);

    Candidate child;
    child.endpoint = parent.endpoint;
    child.method = parent.method;
    child.values = parent.values;
    child.values[key] = mutation.value;
    child.parent_hash = parent_hash;
    child.mutation = mutation.applied;
    for (const auto& marker : parent.markers) {
      const auto& v = child.values[marker.param];
      if (v.find(marker.token) != std::string::npos) child.markers.push_back(marker);
    }
    if (mutation.payload) {
      MarkerToken marker;
      marker.param = key;
      if (kind == MutatorKind::xss_payload) {
        marker.vuln_class = MarkerClass::xss;
        marker.token = *mutation.token;
      } else {
        marker.vuln_class = kind == MutatorKind::patr_payload ? MarkerClass::patr : MarkerClass::opre;
        marker.token = *mutation.payload;
      }
      if (mutation.value.find(marker.token) != std::string::npos) child.markers.push_back(std::move(marker));
    }

    if (dedup.has_hash(candidate_hash(child))) continue;
    children.push_back(std::move(child));
  }
  return children;
}

}  // namespace webphuzz::mutation
