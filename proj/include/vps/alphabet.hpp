#pragma once

#include <cstddef>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace vps {

using DigitVec = std::vector<int>;

struct ParseError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Ordered set of the Z password characters; residue i maps to symbols[i]
// and all arithmetic happens mod size().
class Alphabet {
 public:
  explicit Alphabet(std::string symbols) : symbols_(std::move(symbols)) {
    if (symbols_.size() < 2) {
      throw std::invalid_argument("alphabet needs at least 2 symbols");
    }
    for (std::size_t i = 0; i < symbols_.size(); ++i) {
      char ch = symbols_[i];
      if (index_.count(ch)) {
        throw std::invalid_argument("alphabet symbols must be distinct");
      }
      index_[ch] = static_cast<int>(i);
    }
  }

  int size() const { return static_cast<int>(symbols_.size()); }
  const std::string& symbols() const { return symbols_; }

  char symbol_of(int residue) const { return symbols_.at(residue); }

  // -1 when the character is not in the alphabet.
  int residue_of(char ch) const {
    auto it = index_.find(ch);
    return it == index_.end() ? -1 : it->second;
  }

  DigitVec encode(const std::string& text) const {
    DigitVec out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
      int r = residue_of(text[i]);
      if (r < 0) {
        throw ParseError("character at position " + std::to_string(i + 1) +
                         " is not in the alphabet");
      }
      out.push_back(r);
    }
    return out;
  }

  std::string decode(const DigitVec& digits) const {
    std::string out;
    out.reserve(digits.size());
    for (int d : digits) out.push_back(symbol_of(d));
    return out;
  }

 private:
  std::string symbols_;
  std::map<char, int> index_;
};

inline Alphabet decimal_alphabet() { return Alphabet("0123456789"); }

inline Alphabet lower_digits_alphabet() {
  return Alphabet("abcdefghijklmnopqrstuvwxyz0123456789");
}

inline Alphabet printable_alphabet() {
  std::string s;
  for (char ch = 0x20; ch <= 0x7e; ++ch) s.push_back(ch);
  return Alphabet(std::move(s));
}

// Built-in alphabets by id; store files may add more.
inline const std::map<std::string, std::string>& builtin_alphabets() {
  static const std::map<std::string, std::string> kTable = {
      {"decimal", decimal_alphabet().symbols()},
      {"lower36", lower_digits_alphabet().symbols()},
      {"printable95", printable_alphabet().symbols()},
  };
  return kTable;
}

// Digit lists travel as comma-separated decimal residues, no whitespace.
inline std::string format_digits(const DigitVec& digits) {
  std::ostringstream oss;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i) oss << ',';
    oss << digits[i];
  }
  return oss.str();
}

inline DigitVec parse_digits(const std::string& text) {
  DigitVec out;
  if (text.empty()) throw ParseError("empty digit list");
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t comma = text.find(',', pos);
    std::string item = text.substr(
        pos, comma == std::string::npos ? std::string::npos : comma - pos);
    if (item.empty() || item.find_first_not_of("0123456789") != std::string::npos) {
      throw ParseError("bad digit list item '" + item + "'");
    }
    if (item.size() > 6) throw ParseError("digit out of range: " + item);
    out.push_back(std::stoi(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

}  // namespace vps
