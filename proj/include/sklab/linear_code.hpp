#pragma once

#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "sklab/bits.hpp"
#include "sklab/errors.hpp"
#include "sklab/rng.hpp"

namespace sklab {

/// Largest block length a LinearCode accepts (vectors fit one machine word).
inline constexpr std::size_t kMaxBlockLength = 63;
/// Coset-leader tables hold 2^m entries.
inline constexpr std::size_t kMaxParityChecks = 24;
/// exact_bsc_error_prob sums over 2^n noise vectors.
inline constexpr std::size_t kMaxEnumerationLength = 24;

/// Row i and column j of the standard array, both 0-based.
struct StandardArrayIndex {
  std::uint64_t coset = 0;
  std::uint64_t column = 0;
  friend bool operator==(const StandardArrayIndex&, const StandardArrayIndex&) = default;
};

// An (n, n-m) binary linear code given by a full-rank m x n parity-check
// matrix, with a systematic generator and a minimum-weight coset-leader
// table. Immutable after construction.
//
// Internally vectors are n-bit words using the BitVector big-endian
// convention (position 0 is bit n-1). Syndromes are m-bit words with
// parity row 0 as the most significant bit.
class LinearCode {
 public:
  using Word = std::uint64_t;

  explicit LinearCode(BitMatrix parity_check, std::string name = "custom")
      : name_(std::move(name)), parity_check_(std::move(parity_check)) {
    n_ = parity_check_.cols();
    m_ = parity_check_.rows();
    detail::require(n_ >= 1 && m_ >= 1, "parity-check matrix must be non-empty");
    detail::require(m_ < n_, "code dimension n-m must be positive (n=" + std::to_string(n_) +
                                 ", m=" + std::to_string(m_) + ")");
    if (n_ > kMaxBlockLength) {
      throw FeasibilityError("block length " + std::to_string(n_) + " exceeds the supported maximum of " +
                             std::to_string(kMaxBlockLength));
    }
    if (m_ > kMaxParityChecks) {
      throw FeasibilityError("coset-leader table needs 2^" + std::to_string(m_) + " entries; cap is m <= " +
                             std::to_string(kMaxParityChecks));
    }
    build_generator();
    build_columns();
    build_coset_leaders();
  }

  [[nodiscard]] const std::string& name() const noexcept { return name_; }
  [[nodiscard]] std::size_t length() const noexcept { return n_; }
  [[nodiscard]] std::size_t parity_checks() const noexcept { return m_; }
  [[nodiscard]] std::size_t dimension() const noexcept { return n_ - m_; }
  [[nodiscard]] double rate() const noexcept { return static_cast<double>(n_ - m_) / static_cast<double>(n_); }
  [[nodiscard]] std::uint64_t coset_count() const noexcept { return std::uint64_t{1} << m_; }
  [[nodiscard]] std::uint64_t codeword_count() const noexcept { return std::uint64_t{1} << (n_ - m_); }

  [[nodiscard]] const BitMatrix& parity_check() const noexcept { return parity_check_; }
  [[nodiscard]] const BitMatrix& generator() const noexcept { return generator_; }
  /// Positions carrying the message word, ascending.
  [[nodiscard]] const std::vector<std::size_t>& information_positions() const noexcept { return info_; }

  // Word-level primitives.

  [[nodiscard]] Word syndrome_word(Word x) const noexcept {
    Word s = 0;
    while (x != 0) {
      s ^= column_by_bit_[static_cast<std::size_t>(std::countr_zero(x))];
      x &= x - 1;
    }
    return s;
  }

  [[nodiscard]] Word leader_word(Word syndrome) const noexcept { return leaders_[syndrome]; }

  [[nodiscard]] Word encode_word(Word message) const noexcept {
    Word c = 0;
    const std::size_t k = dimension();
    for (std::size_t t = 0; t < k; ++t) {
      if ((message >> (k - 1 - t)) & 1U) c ^= generator_words_[t];
    }
    return c;
  }

  /// Message word read off the information positions (meaningful for codewords).
  [[nodiscard]] Word message_word(Word codeword) const noexcept {
    Word u = 0;
    for (std::size_t pos : info_) u = (u << 1) | ((codeword >> (n_ - 1 - pos)) & 1U);
    return u;
  }

  [[nodiscard]] StandardArrayIndex index_word(Word x) const noexcept {
    const Word s = syndrome_word(x);
    return {s, message_word(x ^ leaders_[s])};
  }

  [[nodiscard]] Word array_entry_word(StandardArrayIndex idx) const noexcept {
    return leaders_[idx.coset] ^ encode_word(idx.column);
  }

  // BitVector interface.

  [[nodiscard]] BitVector syndrome(const BitVector& x) const {
    check_length(x, n_, "syndrome input");
    return BitVector::from_uint(syndrome_word(x.to_uint()), m_);
  }

  [[nodiscard]] BitVector coset_leader(const BitVector& s) const {
    check_length(s, m_, "syndrome");
    return BitVector::from_uint(leaders_[s.to_uint()], n_);
  }

  [[nodiscard]] StandardArrayIndex standard_array_index(const BitVector& x) const {
    check_length(x, n_, "standard_array_index input");
    return index_word(x.to_uint());
  }

  [[nodiscard]] BitVector standard_array_entry(StandardArrayIndex idx) const {
    detail::require(idx.coset < coset_count() && idx.column < codeword_count(), "standard array index out of range");
    return BitVector::from_uint(array_entry_word(idx), n_);
  }

  [[nodiscard]] BitVector encode(const BitVector& message) const {
    check_length(message, dimension(), "message");
    return BitVector::from_uint(encode_word(message.to_uint()), n_);
  }

 private:
  static void check_length(const BitVector& v, std::size_t expected, const char* what) {
    if (v.size() != expected) {
      detail::fail(std::string(what) + " has length " + std::to_string(v.size()) + ", expected " +
                   std::to_string(expected));
    }
  }

  void build_generator() {
    BitMatrix reduced = parity_check_;
    const auto pivots = reduced.reduce_row_echelon();
    if (pivots.size() != m_) {
      throw ConstructionError("parity-check matrix has rank " + std::to_string(pivots.size()) + " < m = " +
                              std::to_string(m_) + "; rows are linearly dependent");
    }
    std::vector<bool> is_pivot(n_, false);
    for (auto c : pivots) is_pivot[c] = true;
    for (std::size_t c = 0; c < n_; ++c) {
      if (!is_pivot[c]) info_.push_back(c);
    }
    // With H in reduced form, setting information bit t forces pivot bit
    // c_r to H'[r][t]; every other information bit stays zero.
    generator_ = BitMatrix(info_.size(), n_);
    for (std::size_t t = 0; t < info_.size(); ++t) {
      generator_.set(t, info_[t], true);
      for (std::size_t r = 0; r < m_; ++r) {
        if (reduced(r, info_[t])) generator_.set(t, pivots[r], true);
      }
      generator_words_.push_back(generator_.row(t).to_uint());
    }
  }

  void build_columns() {
    column_by_bit_.assign(n_, 0);
    for (std::size_t pos = 0; pos < n_; ++pos) {
      Word col = 0;
      for (std::size_t r = 0; r < m_; ++r) col = (col << 1) | static_cast<Word>(parity_check_(r, pos));
      column_by_bit_[n_ - 1 - pos] = col;
    }
  }

  // Breadth-first by weight; within a weight, candidates come in increasing
  // numeric (= lexicographic) order, so the first hit for each syndrome is
  // the lexicographically smallest minimum-weight coset member.
  void build_coset_leaders() {
    constexpr Word kUnset = std::numeric_limits<Word>::max();
    const std::uint64_t total = coset_count();
    leaders_.assign(total, kUnset);
    leaders_[0] = 0;
    std::uint64_t filled = 1;
    const Word limit = Word{1} << n_;
    for (std::size_t w = 1; w <= n_ && filled < total; ++w) {
      Word v = (Word{1} << w) - 1;
      while (v < limit && filled < total) {
        const Word s = syndrome_word(v);
        if (leaders_[s] == kUnset) {
          leaders_[s] = v;
          ++filled;
        }
        // Gosper's hack: next word with the same popcount.
        const Word c = v & (~v + 1);
        const Word r = v + c;
        if (r == 0) break;
        v = (((r ^ v) >> 2) / c) | r;
      }
    }
    if (filled != total) throw ConstructionError("coset-leader search did not reach every syndrome");
  }

  std::string name_;
  BitMatrix parity_check_;
  BitMatrix generator_;
  std::size_t n_ = 0;
  std::size_t m_ = 0;
  std::vector<std::size_t> info_;
  std::vector<Word> generator_words_;
  std::vector<Word> column_by_bit_;
  std::vector<Word> leaders_;
};

// Free-function surface.

inline BitVector syndrome(const LinearCode& code, const BitVector& x) { return code.syndrome(x); }

/// f_P(s): minimum-weight coset member, lexicographically smallest on ties.
inline BitVector coset_leader(const LinearCode& code, const BitVector& s) { return code.coset_leader(s); }

/// Syndrome decoding with side information y: y xor f_P(s_target xor Py^T).
inline BitVector ml_reconstruct(const LinearCode& code, const BitVector& s_target, const BitVector& y) {
  detail::require(s_target.size() == code.parity_checks(), "target syndrome length mismatch");
  detail::require(y.size() == code.length(), "side-information length mismatch");
  const auto s = s_target.to_uint() ^ code.syndrome_word(y.to_uint());
  return BitVector::from_uint(y.to_uint() ^ code.leader_word(s), code.length());
}

inline StandardArrayIndex standard_array_index(const LinearCode& code, const BitVector& x) {
  return code.standard_array_index(x);
}

/// Word-error probability of coset-leader decoding on a BSC(p), by summing
/// p^w(v) (1-p)^(n-w(v)) over every noise vector v the decoder gets wrong.
inline double exact_bsc_error_prob(const LinearCode& code, double p) {
  detail::require(p > 0.0 && p < 0.5, "crossover probability must lie in (0, 1/2)");
  const std::size_t n = code.length();
  if (n > kMaxEnumerationLength) {
    throw FeasibilityError("exact error probability enumerates 2^" + std::to_string(n) +
                           " noise vectors; cap is n <= " + std::to_string(kMaxEnumerationLength) +
                           ". Use the Monte-Carlo path instead.");
  }
  std::vector<std::uint64_t> errors_by_weight(n + 1, 0);
  const std::uint64_t total = std::uint64_t{1} << n;
  for (std::uint64_t v = 0; v < total; ++v) {
    if (code.leader_word(code.syndrome_word(v)) != v) ++errors_by_weight[static_cast<std::size_t>(std::popcount(v))];
  }
  double sum = 0.0;
  for (std::size_t w = 0; w <= n; ++w) {
    if (errors_by_weight[w] == 0) continue;
    sum += static_cast<double>(errors_by_weight[w]) * std::pow(p, static_cast<double>(w)) *
           std::pow(1.0 - p, static_cast<double>(n - w));
  }
  return sum;
}

// --- code catalog ----------------------------------------------------------

struct CodeSpec {
  enum class Kind { hamming, repetition, random_linear, file };
  Kind kind = Kind::hamming;
  std::size_t n = 0;
  std::size_t m = 0;
  std::size_t r = 0;
  std::uint64_t seed = 0;
  std::string path;

  [[nodiscard]] std::string to_string() const {
    switch (kind) {
      case Kind::hamming: return "hamming(" + std::to_string(r) + ")";
      case Kind::repetition: return "repetition(" + std::to_string(n) + ")";
      case Kind::random_linear:
        return "random_linear(" + std::to_string(n) + "," + std::to_string(m) + "," + std::to_string(seed) + ")";
      case Kind::file: return "from_file(" + path + ")";
    }
    return {};
  }

  friend bool operator==(const CodeSpec&, const CodeSpec&) = default;
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

inline std::uint64_t parse_uint(std::string_view text, const std::string& what) {
  const auto t = trim(text);
  require(!t.empty() && t.find_first_not_of("0123456789") == std::string::npos,
          what + ": expected a non-negative integer, got \"" + t + "\"");
  try {
    return std::stoull(t);
  } catch (const std::exception&) {
    fail(what + ": integer out of range: \"" + t + "\"");
  }
}

}  // namespace detail

/// Parses "hamming(r)", "repetition(n)", "random_linear(n,m,seed)" or "from_file(path)"
/// (alias "file(path)").
inline CodeSpec parse_code_spec(std::string_view text) {
  const auto t = detail::trim(text);
  const auto open = t.find('(');
  detail::require(open != std::string::npos && !t.empty() && t.back() == ')',
                  "code specifier must look like name(args): \"" + t + "\"");
  const auto name = detail::trim(std::string_view(t).substr(0, open));
  const auto args_text = std::string_view(t).substr(open + 1, t.size() - open - 2);
  CodeSpec spec;
  if (name == "from_file" || name == "file") {
    spec.kind = CodeSpec::Kind::file;
    spec.path = detail::trim(args_text);
    detail::require(!spec.path.empty(), "from_file() needs a path");
    return spec;
  }
  std::vector<std::uint64_t> args;
  std::stringstream ss{std::string(args_text)};
  for (std::string item; std::getline(ss, item, ',');) args.push_back(detail::parse_uint(item, name + " argument"));
  if (name == "hamming") {
    detail::require(args.size() == 1, "hamming(r) takes one argument");
    spec.kind = CodeSpec::Kind::hamming;
    spec.r = args[0];
  } else if (name == "repetition") {
    detail::require(args.size() == 1, "repetition(n) takes one argument");
    spec.kind = CodeSpec::Kind::repetition;
    spec.n = args[0];
  } else if (name == "random_linear") {
    detail::require(args.size() == 3, "random_linear(n, m, seed) takes three arguments");
    spec.kind = CodeSpec::Kind::random_linear;
    spec.n = args[0];
    spec.m = args[1];
    spec.seed = args[2];
  } else {
    detail::fail("unknown code family \"" + name + "\"");
  }
  return spec;
}

/// (2^r - 1, 2^r - 1 - r) Hamming code; column i holds the binary expansion of i+1.
inline LinearCode make_hamming(std::size_t r) {
  detail::require(r >= 2 && r <= 6, "hamming(r) needs 2 <= r <= 6");
  const std::size_t n = (std::size_t{1} << r) - 1;
  BitMatrix h(r, n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    for (std::size_t row = 0; row < r; ++row) h.set(row, pos, ((pos + 1) >> (r - 1 - row)) & 1U);
  }
  return LinearCode(std::move(h), "hamming(" + std::to_string(r) + ")");
}

/// Odd-length repetition code; parity row k checks position 0 against position k+1.
inline LinearCode make_repetition(std::size_t n) {
  detail::require(n >= 3 && n % 2 == 1, "repetition(n) needs odd n >= 3");
  BitMatrix h(n - 1, n);
  for (std::size_t k = 0; k + 1 < n; ++k) {
    h.set(k, 0, true);
    h.set(k, k + 1, true);
  }
  return LinearCode(std::move(h), "repetition(" + std::to_string(n) + ")");
}

/// Seeded random code with parity check [A | I_m], A uniform m x (n-m).
inline LinearCode make_random_linear(std::size_t n, std::size_t m, std::uint64_t seed) {
  detail::require(m >= 1 && m < n, "random_linear(n, m, seed) needs 1 <= m < n");
  Rng rng(derive_seed(seed, 0x72616e646f6dULL));
  BitMatrix h(m, n);
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t c = 0; c < n - m; ++c) h.set(r, c, rng.bit());
    h.set(r, n - m + r, true);
  }
  return LinearCode(std::move(h), "random_linear(" + std::to_string(n) + "," + std::to_string(m) + "," +
                                      std::to_string(seed) + ")");
}

/// Reads the parity-check text format: "n m" then m rows of n characters in {0,1}.
inline BitMatrix read_parity_check(std::istream& in, const std::string& origin = "<stream>") {
  std::string header;
  if (!std::getline(in, header)) throw ConstructionError(origin + ": empty parity-check file");
  std::istringstream hs(header);
  long long n = 0;
  long long m = 0;
  if (!(hs >> n >> m) || n <= 0 || m <= 0) throw ConstructionError(origin + ": first line must be \"n m\"");
  std::string rest;
  if (hs >> rest) throw ConstructionError(origin + ": unexpected text after \"n m\" header");
  std::vector<std::string> rows;
  std::string line;
  while (static_cast<long long>(rows.size()) < m && std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (static_cast<long long>(line.size()) != n || line.find_first_not_of("01") != std::string::npos) {
      throw ConstructionError(origin + ": row " + std::to_string(rows.size() + 1) + " must be " +
                              std::to_string(n) + " characters from {0,1}");
    }
    rows.push_back(line);
  }
  if (static_cast<long long>(rows.size()) != m) {
    throw ConstructionError(origin + ": expected " + std::to_string(m) + " rows, found " +
                            std::to_string(rows.size()));
  }
  while (std::getline(in, line)) {
    if (detail::trim(line).size() != 0) throw ConstructionError(origin + ": trailing content after matrix rows");
  }
  return BitMatrix::from_rows(rows);
}

inline void write_parity_check(std::ostream& out, const BitMatrix& h) {
  out << h.cols() << ' ' << h.rows() << '\n' << h.to_string();
}

inline LinearCode make_code(const CodeSpec& spec) {
  switch (spec.kind) {
    case CodeSpec::Kind::hamming: return make_hamming(spec.r);
    case CodeSpec::Kind::repetition: return make_repetition(spec.n);
    case CodeSpec::Kind::random_linear: return make_random_linear(spec.n, spec.m, spec.seed);
    case CodeSpec::Kind::file: {
      std::ifstream in(spec.path);
      if (!in) throw ConstructionError("cannot open parity-check file \"" + spec.path + "\"");
      return LinearCode(read_parity_check(in, spec.path), spec.to_string());
    }
  }
  detail::fail("unhandled code specifier");
}

inline LinearCode make_code(std::string_view spec) { return make_code(parse_code_spec(spec)); }

}  // namespace sklab
