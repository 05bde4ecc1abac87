#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sklab/bits.hpp"
#include "sklab/key_extraction.hpp"
#include "sklab/linear_code.hpp"
#include "sklab/rng.hpp"
#include "sklab/source_models.hpp"

namespace sklab {

/// Parameters of the typical-set key construction (models 2 and 4).
///   xi         typicality constant
///   eps_prime  rate backoff; model 2 needs eps' > xi + eps, model 4 eps' > 2 xi + eps
///   eps        slack in the rate guarantee, also used by the model 1/3 rate check
struct ExtractionConfig {
  double xi = 0.05;
  double eps_prime = 0.07;
  double eps = 0.01;
  friend bool operator==(const ExtractionConfig&, const ExtractionConfig&) = default;
};

/// Smallest admissible eps' for the model, exclusive.
inline double eps_prime_lower_bound(const SourceModel& model, const ExtractionConfig& cfg) {
  if (std::holds_alternative<Model2Params>(model)) return cfg.xi + cfg.eps;
  if (std::holds_alternative<Model4Params>(model)) return 2 * cfg.xi + cfg.eps;
  return 0.0;
}

inline void validate_extraction(const SourceModel& model, const ExtractionConfig& cfg) {
  detail::require(cfg.xi >= 0.0, "xi must be non-negative");
  detail::require(cfg.eps > 0.0, "eps must be positive");
  if (std::holds_alternative<Model2Params>(model)) {
    detail::require(cfg.eps_prime > cfg.xi + cfg.eps,
                    "model 2 requires eps' > xi + eps (eps'=" + std::to_string(cfg.eps_prime) +
                        ", xi=" + std::to_string(cfg.xi) + ", eps=" + std::to_string(cfg.eps) + ")");
  } else if (std::holds_alternative<Model4Params>(model)) {
    detail::require(cfg.eps_prime > 2 * cfg.xi + cfg.eps,
                    "model 4 requires eps' > 2 xi + eps (eps'=" + std::to_string(cfg.eps_prime) +
                        ", xi=" + std::to_string(cfg.xi) + ", eps=" + std::to_string(cfg.eps) + ")");
  }
}

enum class MessageKind { syndrome, revealed_observation };

struct Message {
  std::size_t terminal = 0;  // 1-based sender
  MessageKind kind = MessageKind::syndrome;
  BitVector payload;
  friend bool operator==(const Message&, const Message&) = default;
};

// Public communication F, in broadcast order.
class Transcript {
 public:
  void append(std::size_t terminal, MessageKind kind, BitVector payload) {
    messages_.push_back({terminal, kind, std::move(payload)});
  }

  [[nodiscard]] const std::vector<Message>& messages() const noexcept { return messages_; }
  [[nodiscard]] std::size_t size() const noexcept { return messages_.size(); }

  /// Payload of the first message from a terminal.
  [[nodiscard]] const BitVector& from(std::size_t terminal) const {
    for (const auto& m : messages_) {
      if (m.terminal == terminal) return m.payload;
    }
    detail::fail("no message from terminal " + std::to_string(terminal));
  }

  /// "1:S:0101 3:R:0011101"
  [[nodiscard]] std::string to_string() const {
    std::string out;
    for (const auto& m : messages_) {
      if (!out.empty()) out += ' ';
      out += std::to_string(m.terminal);
      out += m.kind == MessageKind::syndrome ? ":S:" : ":R:";
      out += m.payload.to_string();
    }
    return out;
  }

  friend bool operator==(const Transcript&, const Transcript&) = default;

 private:
  std::vector<Message> messages_;
};

struct ProtocolOutcome {
  SequenceTuple sources;
  Transcript transcript;
  /// Per terminal (index 0 is terminal 1); empty for terminals that hold no key.
  std::vector<std::optional<KeyValue>> keys;
  /// Each key holder's estimate of the sequence the key is read from.
  std::vector<std::optional<BitVector>> reconstructions;
  std::uint64_t key_range = 0;
  /// Terminal whose own observation is the key source (1, or j for model 3).
  std::size_t reference_terminal = 1;

  [[nodiscard]] bool keys_agree() const {
    std::optional<std::uint64_t> first;
    for (const auto& k : keys) {
      if (!k) continue;
      if (!first) {
        first = k->value;
      } else if (*first != k->value) {
        return false;
      }
    }
    return true;
  }

  [[nodiscard]] bool reconstructions_correct() const {
    const auto& truth = sources.terminal(reference_terminal);
    for (const auto& r : reconstructions) {
      if (r && *r != truth) return false;
    }
    return true;
  }

  [[nodiscard]] bool any_fallback() const {
    for (const auto& k : keys) {
      if (k && k->provenance == KeyProvenance::fallback) return true;
    }
    return false;
  }
};

namespace detail {

/// y xor f_P(s_target xor P y^T).
inline LinearCode::Word reconstruct_word(const LinearCode& code, LinearCode::Word s_target, LinearCode::Word y) {
  return y ^ code.leader_word(s_target ^ code.syndrome_word(y));
}

/// Successive estimates of x_j held by terminal i (both 1-based), walking the
/// chain one link at a time. syndromes[l-1] is P x_l; the terminal's own
/// syndrome is recomputed from x_i.
inline LinearCode::Word chain_estimate_word(const LinearCode& code, const std::vector<LinearCode::Word>& syndromes,
                                            LinearCode::Word x_i, std::size_t i, std::size_t j) {
  auto syn = [&](std::size_t l) { return l == i ? code.syndrome_word(x_i) : syndromes[l - 1]; };
  LinearCode::Word est = x_i;
  if (i < j) {
    for (std::size_t l = i; l < j; ++l) est ^= code.leader_word(syn(l) ^ syn(l + 1));
  } else {
    for (std::size_t l = i; l > j; --l) est ^= code.leader_word(syn(l) ^ syn(l - 1));
  }
  return est;
}

inline void check_sources(const SequenceTuple& sources, std::size_t terminals, const LinearCode& code) {
  require(sources.count() == terminals, "protocol expects " + std::to_string(terminals) + " terminals, got " +
                                            std::to_string(sources.count()));
  for (const auto& t : sources.terminals) {
    require(t.size() == code.length(), "observation length " + std::to_string(t.size()) +
                                           " does not match code length " + std::to_string(code.length()));
  }
}

inline Rng source_rng(std::uint64_t trial_seed) { return Rng(derive_seed(trial_seed, 0)); }
inline Rng terminal_rng(std::uint64_t trial_seed, std::size_t terminal) {
  return Rng(derive_seed(trial_seed, terminal));
}

}  // namespace detail

// The protocol classes hold a reference to the code; it must outlive them.

/// Syndrome of x1 to terminal 2, standard-array column as the key.
class Model1Protocol {
 public:
  Model1Protocol(const LinearCode& code, Model1Params params) : code_(&code), params_(params) {}

  [[nodiscard]] const Model1Params& params() const noexcept { return params_; }
  [[nodiscard]] const LinearCode& code() const noexcept { return *code_; }
  [[nodiscard]] std::uint64_t key_range() const noexcept { return code_->codeword_count(); }

  [[nodiscard]] ProtocolOutcome run(const SequenceTuple& sources) const {
    detail::check_sources(sources, 2, *code_);
    const auto& x1 = sources.terminal(1);
    const auto& x2 = sources.terminal(2);
    ProtocolOutcome out;
    out.sources = sources;
    out.key_range = key_range();
    const BitVector s1 = code_->syndrome(x1);
    out.transcript.append(1, MessageKind::syndrome, s1);
    const BitVector estimate = ml_reconstruct(*code_, out.transcript.from(1), x2);
    out.keys = {extract_key_standard_array(*code_, x1), extract_key_standard_array(*code_, estimate)};
    out.reconstructions = {x1, estimate};
    return out;
  }

  [[nodiscard]] ProtocolOutcome run_trial(std::uint64_t trial_seed) const {
    auto rng = detail::source_rng(trial_seed);
    return run(sample(params_, code_->length(), rng));
  }

 private:
  const LinearCode* code_;
  Model1Params params_;
};

/// Model 1 transmission with typical-set regular-subset keys.
class Model2Protocol {
 public:
  Model2Protocol(const LinearCode& code, Model2Params params, ExtractionConfig cfg)
      : code_(&code), params_(params), cfg_(cfg) {
    validate_extraction(params_, cfg_);
    table_ = std::make_shared<const RegularSubsetTable>(build_regular_subsets(code, params_, cfg_.xi, cfg_.eps_prime));
  }

  [[nodiscard]] const Model2Params& params() const noexcept { return params_; }
  [[nodiscard]] const ExtractionConfig& extraction() const noexcept { return cfg_; }
  [[nodiscard]] const LinearCode& code() const noexcept { return *code_; }
  [[nodiscard]] const RegularSubsetTable& table() const noexcept { return *table_; }
  [[nodiscard]] std::uint64_t key_range() const noexcept { return table_->key_count(); }

  [[nodiscard]] ProtocolOutcome run(const SequenceTuple& sources, Rng& fallback1, Rng& fallback2) const {
    detail::check_sources(sources, 2, *code_);
    const auto& x1 = sources.terminal(1);
    const auto& x2 = sources.terminal(2);
    ProtocolOutcome out;
    out.sources = sources;
    out.key_range = key_range();
    out.transcript.append(1, MessageKind::syndrome, code_->syndrome(x1));
    const BitVector estimate = ml_reconstruct(*code_, out.transcript.from(1), x2);
    out.keys = {extract_key_regular(*table_, x1, fallback1), extract_key_regular(*table_, estimate, fallback2)};
    out.reconstructions = {x1, estimate};
    return out;
  }

  [[nodiscard]] ProtocolOutcome run_trial(std::uint64_t trial_seed) const {
    auto rng = detail::source_rng(trial_seed);
    auto fb1 = detail::terminal_rng(trial_seed, 1);
    auto fb2 = detail::terminal_rng(trial_seed, 2);
    return run(sample(params_, code_->length(), rng), fb1, fb2);
  }

 private:
  const LinearCode* code_;
  Model2Params params_;
  ExtractionConfig cfg_;
  std::shared_ptr<const RegularSubsetTable> table_;
};

/// Syndromes from terminals 1..d-1; every terminal estimates x_j, j the
/// noisiest link, and keys on its standard-array column.
class Model3Protocol {
 public:
  Model3Protocol(const LinearCode& code, Model3Params params)
      : code_(&code), params_(std::move(params)), anchor_(worst_link(params_)) {}

  [[nodiscard]] const Model3Params& params() const noexcept { return params_; }
  [[nodiscard]] const LinearCode& code() const noexcept { return *code_; }
  [[nodiscard]] std::size_t anchor() const noexcept { return anchor_; }
  [[nodiscard]] std::uint64_t key_range() const noexcept { return code_->codeword_count(); }

  [[nodiscard]] ProtocolOutcome run(const SequenceTuple& sources) const {
    const std::size_t d = params_.terminals();
    detail::check_sources(sources, d, *code_);
    ProtocolOutcome out;
    out.sources = sources;
    out.key_range = key_range();
    out.reference_terminal = anchor_;
    for (std::size_t i = 1; i < d; ++i) {
      out.transcript.append(i, MessageKind::syndrome, code_->syndrome(sources.terminal(i)));
    }
    std::vector<LinearCode::Word> syndromes;
    for (const auto& m : out.transcript.messages()) syndromes.push_back(m.payload.to_uint());
    for (std::size_t i = 1; i <= d; ++i) {
      const auto x_i = sources.terminal(i).to_uint();
      const auto est = BitVector::from_uint(detail::chain_estimate_word(*code_, syndromes, x_i, i, anchor_),
                                            code_->length());
      out.keys.emplace_back(extract_key_standard_array(*code_, est));
      out.reconstructions.emplace_back(est);
    }
    return out;
  }

  [[nodiscard]] ProtocolOutcome run_trial(std::uint64_t trial_seed) const {
    auto rng = detail::source_rng(trial_seed);
    return run(sample(params_, code_->length(), rng));
  }

 private:
  const LinearCode* code_;
  Model3Params params_;
  std::size_t anchor_;
};

/// Helper reveals x3, terminal 1 sends its syndrome, terminal 2 decodes from
/// x2 xor x3; keys from regular subsets conditioned on x3. Terminal 3 holds no key.
class Model4Protocol {
 public:
  Model4Protocol(const LinearCode& code, Model4Params params, ExtractionConfig cfg)
      : code_(&code), params_(params), cfg_(cfg), cache_(std::make_shared<Cache>()) {
    validate_extraction(params_, cfg_);
    RegularSubsetTable::check_caps(code);
    range_ = regular_key_range(code, params_, cfg_.eps_prime);
  }

  [[nodiscard]] const Model4Params& params() const noexcept { return params_; }
  [[nodiscard]] const ExtractionConfig& extraction() const noexcept { return cfg_; }
  [[nodiscard]] const LinearCode& code() const noexcept { return *code_; }
  [[nodiscard]] std::uint64_t key_range() const noexcept { return range_.size; }

  /// Table for a given x3, built on first use. Safe to call concurrently.
  [[nodiscard]] std::shared_ptr<const RegularSubsetTable> table_for(const BitVector& x3) const {
    const auto key = x3.to_uint();
    std::lock_guard lock(cache_->mutex);
    auto& slot = cache_->tables[key];
    if (!slot) {
      slot = std::make_shared<const RegularSubsetTable>(
          build_regular_subsets(*code_, params_, cfg_.xi, cfg_.eps_prime, x3));
    }
    return slot;
  }

  [[nodiscard]] ProtocolOutcome run(const SequenceTuple& sources, Rng& fallback1, Rng& fallback2) const {
    detail::check_sources(sources, 3, *code_);
    const auto& x1 = sources.terminal(1);
    const auto& x2 = sources.terminal(2);
    const auto& x3 = sources.terminal(3);
    ProtocolOutcome out;
    out.sources = sources;
    out.key_range = key_range();
    out.transcript.append(3, MessageKind::revealed_observation, x3);
    out.transcript.append(1, MessageKind::syndrome, code_->syndrome(x1));
    const auto& revealed = out.transcript.from(3);
    const BitVector estimate = ml_reconstruct(*code_, out.transcript.from(1), x2 ^ revealed);
    const auto table = table_for(revealed);
    out.keys = {extract_key_regular(*table, x1, fallback1), extract_key_regular(*table, estimate, fallback2),
                 std::nullopt};
    out.reconstructions = {x1, estimate, std::nullopt};
    return out;
  }

  [[nodiscard]] ProtocolOutcome run_trial(std::uint64_t trial_seed) const {
    auto rng = detail::source_rng(trial_seed);
    auto fb1 = detail::terminal_rng(trial_seed, 1);
    auto fb2 = detail::terminal_rng(trial_seed, 2);
    return run(sample(params_, code_->length(), rng), fb1, fb2);
  }

 private:
  struct Cache {
    std::mutex mutex;
    std::map<LinearCode::Word, std::shared_ptr<const RegularSubsetTable>> tables;
  };

  const LinearCode* code_;
  Model4Params params_;
  ExtractionConfig cfg_;
  KeyRange range_;
  std::shared_ptr<Cache> cache_;
};

using AnyProtocol = std::variant<Model1Protocol, Model2Protocol, Model3Protocol, Model4Protocol>;

inline AnyProtocol make_protocol(const LinearCode& code, const SourceModel& model, const ExtractionConfig& cfg) {
  return std::visit(
      [&](const auto& m) -> AnyProtocol {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Model1Params>) {
          return Model1Protocol(code, m);
        } else if constexpr (std::is_same_v<T, Model2Params>) {
          return Model2Protocol(code, m, cfg);
        } else if constexpr (std::is_same_v<T, Model3Params>) {
          return Model3Protocol(code, m);
        } else {
          return Model4Protocol(code, m, cfg);
        }
      },
      model);
}

inline ProtocolOutcome run_trial(const AnyProtocol& protocol, std::uint64_t trial_seed) {
  return std::visit([&](const auto& p) { return p.run_trial(trial_seed); }, protocol);
}

inline std::uint64_t key_range(const AnyProtocol& protocol) {
  return std::visit([](const auto& p) { return p.key_range(); }, protocol);
}

// Single-shot entry points. Models 2 and 4 rebuild their tables on each
// call; batch work should construct a protocol object once.

inline ProtocolOutcome run_model1(const LinearCode& code, const Model1Params& params, Rng& rng) {
  return Model1Protocol(code, params).run(sample(params, code.length(), rng));
}

inline ProtocolOutcome run_model2(const LinearCode& code, const Model2Params& params, double xi, double eps_prime,
                                  Rng& rng, double eps = ExtractionConfig{}.eps) {
  const Model2Protocol protocol(code, params, {xi, eps_prime, eps});
  auto sources = sample(params, code.length(), rng);
  Rng fb1(rng.next());
  Rng fb2(rng.next());
  return protocol.run(sources, fb1, fb2);
}

inline ProtocolOutcome run_model3(const LinearCode& code, const Model3Params& params, Rng& rng) {
  return Model3Protocol(code, params).run(sample(params, code.length(), rng));
}

inline ProtocolOutcome run_model4(const LinearCode& code, const Model4Params& params, double xi, double eps_prime,
                                  Rng& rng, double eps = ExtractionConfig{}.eps) {
  const Model4Protocol protocol(code, params, {xi, eps_prime, eps});
  auto sources = sample(params, code.length(), rng);
  Rng fb1(rng.next());
  Rng fb2(rng.next());
  return protocol.run(sources, fb1, fb2);
}

}  // namespace sklab
