#pragma once

#include "hsmrf/error.hpp"
#include "hsmrf/genealogy.hpp"

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

namespace hsmrf {

using DateMap = std::map<std::string, double>;

namespace detail {

class NewickReader {
public:
  explicit NewickReader(std::string_view text) : text_(text) {}

  Tree read() {
    Tree tree;
    skip();
    tree.root = subtree(tree, -1);
    skip();
    if (peek() == ':') { // root edge, ignored
      ++pos_;
      branch_length();
      skip();
    }
    expect(';');
    skip();
    if (pos_ != text_.size())
      throw NewickError("trailing characters after ';'", pos_);
    if (tree.nodes.size() < 3)
      throw NewickError("tree must have at least two tips");
    return tree;
  }

  /// Branch length of each node (root entry unused).
  const std::vector<double> &lengths() const { return lengths_; }

private:
  int subtree(Tree &tree, int parent) {
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    lengths_.push_back(std::numeric_limits<double>::quiet_NaN());
    tree.nodes[id].parent = parent;
    skip();
    if (peek() == '(') {
      ++pos_;
      while (true) {
        const int child = subtree(tree, id);
        tree.nodes[id].children.push_back(child);
        skip();
        if (peek() == ',') {
          ++pos_;
          continue;
        }
        expect(')');
        break;
      }
      if (tree.nodes[id].children.size() != 2)
        throw NewickError("node with " + std::to_string(tree.nodes[id].children.size()) +
                              " children; only bifurcating trees are supported",
                          pos_);
      skip();
      tree.nodes[id].label = label(); // internal labels are allowed and ignored
    } else {
      tree.nodes[id].label = label();
      if (tree.nodes[id].label.empty())
        throw NewickError("tip without a label", pos_);
    }
    skip();
    if (parent >= 0) {
      expect(':');
      lengths_[id] = branch_length();
    }
    return id;
  }

  std::string label() {
    std::string out;
    if (peek() == '\'') {
      ++pos_;
      while (true) {
        if (pos_ >= text_.size())
          throw NewickError("unterminated quoted label", pos_);
        char c = text_[pos_++];
        if (c == '\'') {
          if (peek() == '\'') {
            out.push_back('\'');
            ++pos_;
            continue;
          }
          break;
        }
        out.push_back(c);
      }
      return out;
    }
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isspace(static_cast<unsigned char>(c)) || c == '(' || c == ')' || c == ',' ||
          c == ':' || c == ';' || c == '[')
        break;
      out.push_back(c);
      ++pos_;
    }
    return out;
  }

  double branch_length() {
    skip();
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      char c = text_[pos_];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.' || c == '-' || c == '+' ||
          c == 'e' || c == 'E')
        ++pos_;
      else
        break;
    }
    if (start == pos_)
      throw NewickError("missing branch length", pos_);
    const std::string token(text_.substr(start, pos_ - start));
    char *end = nullptr;
    const double v = std::strtod(token.c_str(), &end);
    if (end != token.c_str() + token.size() || !std::isfinite(v))
      throw NewickError("malformed branch length '" + token + "'", start);
    if (v < 0.0)
      throw NewickError("negative branch length " + token, start);
    return v;
  }

  void skip() {
    while (pos_ < text_.size()) {
      if (std::isspace(static_cast<unsigned char>(text_[pos_]))) {
        ++pos_;
      } else if (text_[pos_] == '[') {
        const auto close = text_.find(']', pos_);
        if (close == std::string_view::npos)
          throw NewickError("unterminated comment", pos_);
        pos_ = close + 1;
      } else {
        break;
      }
    }
  }

  char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

  void expect(char c) {
    if (peek() != c)
      throw NewickError(std::string("expected '") + c + "'", pos_);
    ++pos_;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<double> lengths_;
};

} // namespace detail

/// Parses a rooted bifurcating Newick tree with branch lengths. Node ages are
/// measured backward from the tip furthest from the root.
inline Tree parse_newick_tree(std::string_view text) {
  detail::NewickReader reader(text);
  Tree tree = reader.read();
  const auto &len = reader.lengths();

  // Nodes are created in preorder, so parents precede children.
  std::vector<double> depth(tree.nodes.size(), 0.0);
  double max_depth = 0.0;
  for (std::size_t i = 1; i < tree.nodes.size(); ++i) {
    depth[i] = depth[tree.nodes[i].parent] + len[i];
    max_depth = std::max(max_depth, depth[i]);
  }
  std::set<std::string> seen;
  for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
    tree.nodes[i].age = max_depth - depth[i];
    if (tree.is_tip(static_cast<int>(i)) && !seen.insert(tree.nodes[i].label).second)
      throw NewickError("duplicate tip label '" + tree.nodes[i].label + "'");
  }
  return tree;
}

/// Tolerance for comparing tree-derived tip ages with supplied dates.
inline constexpr double kTipDateTolerance = 1e-8;

/// Parses `text` and builds the genealogy using `dates` (tip label to
/// sampling time, backward from the present) as the sampling schedule. Tip
/// ages implied by the branch lengths must agree with the supplied dates.
inline Genealogy parse_newick(std::string_view text, const DateMap &dates) {
  Tree tree = parse_newick_tree(text);
  const auto tips = tree.tips();

  std::vector<double> supplied;
  supplied.reserve(tips.size());
  for (int i : tips) {
    auto it = dates.find(tree.nodes[i].label);
    if (it == dates.end())
      throw MissingLabelError(tree.nodes[i].label);
    supplied.push_back(it->second);
  }
  const double origin = *std::min_element(supplied.begin(), supplied.end());
  const double height = tree.nodes[tree.root].age;
  const double tol = kTipDateTolerance * std::max(1.0, height);
  for (std::size_t j = 0; j < tips.size(); ++j) {
    const double from_tree = tree.nodes[tips[j]].age;
    if (std::abs(from_tree - (supplied[j] - origin)) > tol) {
      std::ostringstream msg;
      msg << std::setprecision(17) << "tip '" << tree.nodes[tips[j]].label
          << "': age from branch lengths " << from_tree << " disagrees with supplied date "
          << supplied[j] - origin;
      throw InputError(msg.str());
    }
  }

  std::vector<double> coal;
  for (int i = 0; i < static_cast<int>(tree.nodes.size()); ++i)
    if (!tree.is_tip(i)) coal.push_back(tree.nodes[i].age);
  std::sort(coal.begin(), coal.end());
  return Genealogy(SamplingSchedule::from_sample_times(supplied), std::move(coal));
}

namespace detail {
inline void write_newick(std::ostream &os, const Tree &t, int i) {
  const auto &nd = t.nodes[i];
  if (!nd.children.empty()) {
    os << '(';
    for (std::size_t c = 0; c < nd.children.size(); ++c) {
      if (c) os << ',';
      write_newick(os, t, nd.children[c]);
    }
    os << ')';
  } else {
    os << nd.label;
  }
  if (nd.parent >= 0) os << ':' << (t.nodes[nd.parent].age - nd.age);
}
} // namespace detail

inline std::string to_newick(const Tree &tree) {
  std::ostringstream os;
  os << std::setprecision(17);
  detail::write_newick(os, tree, tree.root);
  os << ';';
  return os.str();
}

/// Reads a `label,time` CSV (header required). Times are backward from the
/// present unless `forward` is set, in which case they are calendar times and
/// are converted to ages before the most recent sample.
inline DateMap read_dates_csv(std::istream &in, bool forward = false) {
  DateMap out;
  std::string line;
  if (!std::getline(in, line))
    throw InputError("dates CSV is empty");
  auto trim = [](std::string s) {
    const auto b = s.find_first_not_of(" \t\r");
    const auto e = s.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  };
  if (trim(line) != "label,time")
    throw InputError("dates CSV header must be 'label,time'");
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw InputError("dates CSV row " + std::to_string(row) + ": expected 'label,time'");
    const std::string label = trim(line.substr(0, comma));
    const std::string value = trim(line.substr(comma + 1));
    char *end = nullptr;
    const double t = std::strtod(value.c_str(), &end);
    if (value.empty() || end != value.c_str() + value.size() || !std::isfinite(t))
      throw InputError("dates CSV row " + std::to_string(row) + ": bad time '" + value + "'");
    if (!out.emplace(label, t).second)
      throw InputError("dates CSV: duplicate label '" + label + "'");
  }
  if (forward && !out.empty()) {
    double latest = -std::numeric_limits<double>::infinity();
    for (const auto &[_, t] : out) latest = std::max(latest, t);
    for (auto &[_, t] : out) t = latest - t;
  }
  return out;
}

} // namespace hsmrf
