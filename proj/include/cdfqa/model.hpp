#pragma once
// Ising chain Hamiltonians, translation-sum control operators, and the
// layer-dependent additional drive term.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cdfqa/pauli.hpp"

namespace cdfqa {

// Configuration / domain failures surfaced to the CLI as distinct exit codes.
struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct domain_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Boundary { periodic, open };

struct SpinChainSpec {
  int n_sites = 6;
  double coupling_j = 1.0;
  double field_hz = 0.0;
  double field_hx = 0.0;
  Boundary boundary = Boundary::periodic;
};

inline void validate_chain(const SpinChainSpec& spec) {
  if (spec.n_sites < 2)
    throw domain_error("chain needs at least 2 sites");
  if (spec.n_sites > 12)
    throw domain_error("dense simulation is capped at 12 sites");
  if (spec.boundary == Boundary::periodic && spec.n_sites < 3)
    throw domain_error(
        "periodic chain needs at least 3 sites: at N=2 the wrap bond would "
        "double-count the single open bond");
  if (spec.coupling_j <= 0) throw domain_error("coupling J must be positive");
}

// A named translation-sum operator, possibly a weighted combination such as
// "Y+0.5*YZ". Tag "I" marks the degenerate no-second-control case.
struct OperatorTag {
  std::vector<std::pair<std::string, double>> parts;  // (word, weight)

  bool is_identity() const {
    return parts.empty() || (parts.size() == 1 && parts[0].first == "I");
  }

  std::string text() const {
    if (is_identity()) return "I";
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out += "+";
      if (parts[i].second != 1.0) {
        std::ostringstream os;
        os << parts[i].second;
        out += os.str() + "*";
      }
      out += parts[i].first;
    }
    return out;
  }
};

inline const std::vector<std::string>& allowed_tag_words() {
  static const std::vector<std::string> words{
      "I", "X", "Y", "Z", "ZZ", "YZ", "ZY", "YX", "XY", "XX", "YY", "XZ", "ZX"};
  return words;
}

// Parses "Y", "YZ", "Y+0.5*YZ", "I". Whitespace-insensitive.
inline OperatorTag parse_tag(const std::string& text) {
  std::string t;
  for (char c : text)
    if (!std::isspace(static_cast<unsigned char>(c))) t += c;
  if (t.empty()) throw config_error("empty operator tag");
  if (t.front() == '+' || t.back() == '+')
    throw config_error("dangling '+' in operator tag");
  OperatorTag tag;
  std::size_t pos = 0;
  while (pos < t.size()) {
    std::size_t next = t.find('+', pos);
    if (next == std::string::npos) next = t.size();
    std::string item = t.substr(pos, next - pos);
    if (item.empty()) throw config_error("dangling '+' in operator tag");
    double weight = 1.0;
    if (auto star = item.find('*'); star != std::string::npos) {
      try {
        std::size_t used = 0;
        weight = std::stod(item.substr(0, star), &used);
        if (used != star) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw config_error("bad weight in operator tag: " + item);
      }
      item = item.substr(star + 1);
    }
    const auto& words = allowed_tag_words();
    if (std::find(words.begin(), words.end(), item) == words.end())
      throw config_error("unknown operator tag word: " + item);
    tag.parts.push_back({item, weight});
    pos = next + 1;
  }
  if (tag.parts.size() > 1)
    for (const auto& [word, weight] : tag.parts)
      if (word == "I") throw config_error("tag I cannot be combined");
  return tag;
}

// Number of anchors a word of this width gets on the chain.
inline int word_anchor_count(std::size_t width, const SpinChainSpec& spec) {
  if (width <= 1 || spec.boundary == Boundary::periodic) return spec.n_sites;
  return spec.n_sites - static_cast<int>(width) + 1;
}

// Sum of the word over all its anchors, e.g. "YZ" -> sum_i Y_i Z_{i+1}.
inline PauliSum translation_sum(const std::string& word,
                                const SpinChainSpec& spec, double weight = 1.0) {
  PauliSum out(spec.n_sites);
  if (word == "I") return out;
  for (int i = 0; i < word_anchor_count(word.size(), spec); ++i)
    out.add_word(word, i, weight);
  return out;
}

inline PauliSum build_operator(const OperatorTag& tag, const SpinChainSpec& spec) {
  validate_chain(spec);
  PauliSum out(spec.n_sites);
  if (tag.is_identity()) return out;
  for (const auto& [word, weight] : tag.parts)
    out += translation_sum(word, spec, weight);
  return out;
}

// H_P = -J * sum ZZ - h_z * sum Z - h_x * sum X.
inline PauliSum build_ising(const SpinChainSpec& spec) {
  validate_chain(spec);
  PauliSum h(spec.n_sites);
  h += translation_sum("ZZ", spec, -spec.coupling_j);
  if (spec.field_hz != 0) h += translation_sum("Z", spec, -spec.field_hz);
  if (spec.field_hx != 0) h += translation_sum("X", spec, -spec.field_hx);
  return h;
}

inline double additional_term_coefficient(int layer_k) {
  if (layer_k < 1) throw std::invalid_argument("additional term: layer_k >= 1");
  return std::exp(-(layer_k - 1) / 5.0);
}

// Decaying extra drive exp(-(k-1)/5) * sum Z, folded into the problem
// unitary of layer k when enabled.
inline PauliSum additional_term(int layer_k, const SpinChainSpec& spec) {
  return translation_sum("Z", spec, additional_term_coefficient(layer_k));
}

}  // namespace cdfqa
