#include "signembed/layout.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

#include "signembed/common.hpp"

namespace signembed {

KeypointLayout::KeypointLayout(
    std::string name, std::vector<LayoutComponent> components,
    std::map<std::string, std::vector<std::size_t>> tags,
    std::vector<std::pair<std::size_t, std::size_t>> left_right_pairs,
    std::map<std::string, std::size_t> anchors)
    : name_(std::move(name)),
      components_(std::move(components)),
      tags_(std::move(tags)),
      pairs_(std::move(left_right_pairs)),
      anchors_(std::move(anchors)) {
  total_ = 0;
  for (const auto& c : components_) total_ += c.size;
  validate();
}

void KeypointLayout::validate() const {
  for (const auto& c : components_) {
    if (c.size == 0) throw ValidationError("layout component '" + c.name + "' is empty");
  }
  for (const auto& [tag, idx] : tags_) {
    for (std::size_t i : idx) {
      if (i >= total_)
        throw ValidationError("layout tag '" + tag + "' index out of range");
    }
    if (!std::is_sorted(idx.begin(), idx.end()))
      throw ValidationError("layout tag '" + tag + "' indices not sorted");
  }
  if (has_tag("shoulders") && tag_indices("shoulders").size() != 2)
    throw ValidationError("layout 'shoulders' tag must select exactly 2 indices");
  for (const char* hand : {"left_hand", "right_hand"}) {
    if (has_tag(hand) && tag_indices(hand).size() != 21)
      throw ValidationError(std::string("layout '") + hand +
                            "' tag must select exactly 21 indices");
  }
  std::set<std::size_t> seen;
  for (const auto& [a, b] : pairs_) {
    if (a >= total_ || b >= total_ || a == b)
      throw ValidationError("layout left/right pair invalid");
    if (!seen.insert(a).second || !seen.insert(b).second)
      throw ValidationError("layout index appears in more than one left/right pair");
  }
  for (const auto& [name, idx] : anchors_) {
    if (idx >= total_) throw ValidationError("layout anchor '" + name + "' out of range");
  }
}

const std::vector<std::size_t>& KeypointLayout::tag_indices(const std::string& tag) const {
  auto it = tags_.find(tag);
  if (it == tags_.end())
    throw ValidationError("unknown layout tag '" + tag + "' in layout '" + name_ + "'");
  return it->second;
}

std::optional<std::size_t> KeypointLayout::anchor(const std::string& name) const {
  auto it = anchors_.find(name);
  if (it == anchors_.end()) return std::nullopt;
  return it->second;
}

namespace {

struct SelectorToken {
  enum Kind { Term, Plus, Minus } kind;
  std::string text;
};

std::vector<SelectorToken> lex_selector(const std::string& selector) {
  std::vector<SelectorToken> out;
  std::size_t i = 0;
  while (i < selector.size()) {
    char c = selector[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '+') {
      out.push_back({SelectorToken::Plus, "+"});
      ++i;
    } else if (c == '-') {
      out.push_back({SelectorToken::Minus, "-"});
      ++i;
    } else if (std::isalnum(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t j = i;
      while (j < selector.size() &&
             (std::isalnum(static_cast<unsigned char>(selector[j])) || selector[j] == '_'))
        ++j;
      std::string word = selector.substr(i, j - i);
      if (word == "plus")
        out.push_back({SelectorToken::Plus, "+"});
      else if (word == "minus")
        out.push_back({SelectorToken::Minus, "-"});
      else
        out.push_back({SelectorToken::Term, word});
      i = j;
    } else {
      throw ValidationError(std::string("bad character in selector: '") + c + "'");
    }
  }
  return out;
}

}  // namespace

std::vector<std::size_t> KeypointLayout::selection_indices(const std::string& selector) const {
  auto tokens = lex_selector(selector);
  if (tokens.empty() || tokens[0].kind != SelectorToken::Term)
    throw ValidationError("selector must start with 'all' or a tag name");

  auto term_indices = [&](const std::string& term) -> std::vector<std::size_t> {
    if (term == "all" || term == "everything") {
      std::vector<std::size_t> all(total_);
      for (std::size_t i = 0; i < total_; ++i) all[i] = i;
      return all;
    }
    return tag_indices(term);
  };

  std::set<std::size_t> current;
  {
    auto first = term_indices(tokens[0].text);
    current.insert(first.begin(), first.end());
  }
  std::size_t i = 1;
  while (i < tokens.size()) {
    if (tokens[i].kind == SelectorToken::Term)
      throw ValidationError("expected '+' or '-' in selector before '" + tokens[i].text + "'");
    if (i + 1 >= tokens.size() || tokens[i + 1].kind != SelectorToken::Term)
      throw ValidationError("dangling operator in selector");
    auto ops = term_indices(tokens[i + 1].text);
    if (tokens[i].kind == SelectorToken::Plus) {
      current.insert(ops.begin(), ops.end());
    } else {
      for (std::size_t v : ops) current.erase(v);
    }
    i += 2;
  }
  if (current.empty()) throw ValidationError("selector selects no keypoints");
  return {current.begin(), current.end()};
}

std::string canonical_selector(const std::string& selector) {
  auto tokens = lex_selector(selector);
  std::string out;
  for (const auto& t : tokens) out += t.text;
  return out;
}

KeypointLayout KeypointLayout::subset(const std::vector<std::size_t>& kept,
                                      const std::string& derived_name) const {
  if (kept.empty()) throw ValidationError("cannot build an empty layout subset");
  if (!std::is_sorted(kept.begin(), kept.end()))
    throw ValidationError("subset indices must be ascending");

  std::vector<std::ptrdiff_t> remap(total_, -1);
  for (std::size_t new_i = 0; new_i < kept.size(); ++new_i) {
    if (kept[new_i] >= total_) throw ValidationError("subset index out of range");
    remap[kept[new_i]] = static_cast<std::ptrdiff_t>(new_i);
  }

  std::vector<LayoutComponent> comps;
  std::size_t offset = 0;
  for (const auto& c : components_) {
    std::size_t kept_in = 0;
    for (std::size_t i = offset; i < offset + c.size; ++i)
      if (remap[i] >= 0) ++kept_in;
    if (kept_in > 0) comps.push_back({c.name, kept_in});
    offset += c.size;
  }

  std::map<std::string, std::vector<std::size_t>> tags;
  for (const auto& [tag, idx] : tags_) {
    std::vector<std::size_t> mapped;
    for (std::size_t i : idx)
      if (remap[i] >= 0) mapped.push_back(static_cast<std::size_t>(remap[i]));
    if (!mapped.empty()) tags[tag] = std::move(mapped);
  }
  // A partially-kept hand or shoulder set no longer satisfies the tag's
  // size contract; drop the tag rather than ship a broken one.
  for (const char* sized : {"left_hand", "right_hand", "shoulders"}) {
    auto it = tags.find(sized);
    if (it == tags.end()) continue;
    std::size_t want = std::string(sized) == "shoulders" ? 2 : 21;
    if (it->second.size() != want) tags.erase(it);
  }

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (const auto& [a, b] : pairs_) {
    if (remap[a] >= 0 && remap[b] >= 0)
      pairs.emplace_back(static_cast<std::size_t>(remap[a]),
                         static_cast<std::size_t>(remap[b]));
  }

  std::map<std::string, std::size_t> anchors;
  for (const auto& [name, idx] : anchors_) {
    if (remap[idx] >= 0) anchors[name] = static_cast<std::size_t>(remap[idx]);
  }

  return KeypointLayout(derived_name, std::move(comps), std::move(tags), std::move(pairs),
                        std::move(anchors));
}

// ---------------------------------------------------------------------------
// Built-in layout table, version 1.
//
// Point order and component structure follow the MediaPipe Holistic
// convention: POSE (33), FACE (468), LEFT_HAND (21), RIGHT_HAND (21).
// Leg points are defined as the pose landmarks from the knees down
// (25..32); hips are kept. Mirror pairs cover the pose body points and
// corresponding left/right hand points; face points are mirrored by
// coordinate negation only (no index swap).
// ---------------------------------------------------------------------------

namespace {

constexpr std::size_t kPosePoints = 33;
constexpr std::size_t kFacePoints = 468;
constexpr std::size_t kHandPoints = 21;

// MediaPipe face-mesh contour landmarks: lips, left/right eyes and
// eyebrows, face oval. 128 unique indices in [0, 468).
const std::array<std::size_t, 128> kFaceContour = {
    // lips
    0, 13, 14, 17, 37, 39, 40, 61, 78, 80, 81, 82, 84, 87, 88, 91, 95, 146, 178, 181,
    185, 191, 267, 269, 270, 291, 308, 310, 311, 312, 314, 317, 318, 321, 324, 375,
    402, 405, 409, 415,
    // right eye
    7, 33, 133, 144, 145, 153, 154, 155, 157, 158, 159, 160, 161, 163, 173, 246,
    // right eyebrow
    46, 52, 53, 55, 63, 65, 66, 70, 105, 107,
    // left eye
    249, 263, 362, 373, 374, 380, 381, 382, 384, 385, 386, 387, 388, 390, 398, 466,
    // left eyebrow
    276, 282, 283, 285, 293, 295, 296, 300, 334, 336,
    // face oval
    10, 21, 54, 58, 67, 93, 103, 109, 127, 132, 136, 148, 149, 150, 152, 162, 172,
    176, 234, 251, 284, 288, 297, 323, 332, 338, 356, 361, 365, 377, 378, 379, 389,
    397, 400, 454};

// Pose-model left/right landmark pairs (local indices within POSE).
const std::array<std::pair<std::size_t, std::size_t>, 16> kPosePairs = {{
    {1, 4},   {2, 5},   {3, 6},   {7, 8},   {9, 10},  {11, 12}, {13, 14}, {15, 16},
    {17, 18}, {19, 20}, {21, 22}, {23, 24}, {25, 26}, {27, 28}, {29, 30}, {31, 32},
}};

std::vector<std::size_t> range_vec(std::size_t begin, std::size_t count) {
  std::vector<std::size_t> v(count);
  for (std::size_t i = 0; i < count; ++i) v[i] = begin + i;
  return v;
}

KeypointLayout build_holistic_543() {
  std::vector<LayoutComponent> comps = {
      {"POSE", kPosePoints},
      {"FACE", kFacePoints},
      {"LEFT_HAND", kHandPoints},
      {"RIGHT_HAND", kHandPoints},
  };
  const std::size_t face0 = kPosePoints;
  const std::size_t lh0 = kPosePoints + kFacePoints;
  const std::size_t rh0 = lh0 + kHandPoints;

  std::map<std::string, std::vector<std::size_t>> tags;
  tags["body"] = range_vec(0, kPosePoints);
  tags["face"] = range_vec(face0, kFacePoints);
  {
    std::vector<std::size_t> contour(kFaceContour.begin(), kFaceContour.end());
    std::sort(contour.begin(), contour.end());
    for (auto& i : contour) i += face0;
    tags["face_contour"] = std::move(contour);
  }
  tags["left_hand"] = range_vec(lh0, kHandPoints);
  tags["right_hand"] = range_vec(rh0, kHandPoints);
  tags["legs"] = range_vec(25, 8);
  tags["shoulders"] = {11, 12};
  // Body landmarks that duplicate the dedicated hand model (pinky, index,
  // thumb of both sides); dropped by keypoint reduction.
  tags["body_hand_duplicates"] = range_vec(17, 6);

  std::vector<std::pair<std::size_t, std::size_t>> pairs(kPosePairs.begin(),
                                                         kPosePairs.end());
  for (std::size_t i = 0; i < kHandPoints; ++i) pairs.emplace_back(lh0 + i, rh0 + i);

  std::map<std::string, std::size_t> anchors = {
      {"left_shoulder", 11},      {"right_shoulder", 12},
      {"left_wrist_body", 15},    {"right_wrist_body", 16},
      {"left_wrist_hand", lh0},   {"right_wrist_hand", rh0},
  };

  return KeypointLayout("holistic_543", std::move(comps), std::move(tags), std::move(pairs),
                        std::move(anchors));
}

KeypointLayout build_canonical(const std::string& name) {
  KeypointLayout full = build_holistic_543();
  if (name == "holistic_543") return full;
  if (name == "holistic_203")
    return full.subset(full.selection_indices("all-face+face_contour"), "holistic_203");
  if (name == "body_hands_75")
    return full.subset(full.selection_indices("all-face"), "body_hands_75");
  if (name == "hand_21")
    return full.subset(full.selection_indices("right_hand"), "hand_21");
  throw ValidationError("unknown layout '" + name + "'");
}

}  // namespace

std::string layout_table_version() { return "1"; }

std::vector<std::string> layout_names() {
  return {"holistic_543", "holistic_203", "body_hands_75", "hand_21"};
}

const std::vector<std::size_t>& face_contour_indices() {
  static const std::vector<std::size_t> sorted = [] {
    std::vector<std::size_t> v(kFaceContour.begin(), kFaceContour.end());
    std::sort(v.begin(), v.end());
    return v;
  }();
  return sorted;
}

KeypointLayout resolve_layout(const std::string& name) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (true) {
    std::size_t bar = name.find('|', start);
    if (bar == std::string::npos) {
      parts.push_back(name.substr(start));
      break;
    }
    parts.push_back(name.substr(start, bar - start));
    start = bar + 1;
  }
  KeypointLayout layout = build_canonical(parts[0]);
  std::string built = parts[0];
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const std::string& op = parts[p];
    if (op.rfind("sel(", 0) == 0 && op.back() == ')') {
      std::string expr = op.substr(4, op.size() - 5);
      built += "|sel(" + canonical_selector(expr) + ")";
      layout = layout.subset(layout.selection_indices(expr), built);
    } else if (op == "reduced") {
      built += "|reduced";
      layout = layout.subset(reduction_kept_indices(layout), built);
    } else {
      throw ValidationError("unknown layout derivation '" + op + "' in '" + name + "'");
    }
  }
  return layout;
}

// Indices kept by keypoint reduction: everything except body landmarks that
// duplicate the hand model.
std::vector<std::size_t> reduction_kept_indices(const KeypointLayout& layout) {
  std::set<std::size_t> drop;
  if (layout.has_tag("body_hand_duplicates")) {
    const auto& dups = layout.tag_indices("body_hand_duplicates");
    drop.insert(dups.begin(), dups.end());
  }
  std::vector<std::size_t> kept;
  kept.reserve(layout.total() - drop.size());
  for (std::size_t i = 0; i < layout.total(); ++i)
    if (!drop.count(i)) kept.push_back(i);
  return kept;
}

}  // namespace signembed
