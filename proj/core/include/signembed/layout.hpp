#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace signembed {

struct LayoutComponent {
  std::string name;
  std::size_t size = 0;
};

// Keypoint layout: ordered components over a global point index space,
// semantic subset tags (body, face, face_contour, left_hand, right_hand,
// legs, shoulders), left/right mirror pairs, and named anchor points
// (wrists, shoulders) used by geometric operations.
//
// Canonical layouts live in a versioned in-repo table (see layouts() /
// layout_table_version()). Layouts derived by selection or reduction carry
// a structured name ("<base>|sel(<expr>)" or "<base>|reduced") that
// resolve_layout() can rebuild, so pose files referencing derived layouts
// stay loadable.
class KeypointLayout {
 public:
  KeypointLayout() = default;
  KeypointLayout(std::string name, std::vector<LayoutComponent> components,
                 std::map<std::string, std::vector<std::size_t>> tags,
                 std::vector<std::pair<std::size_t, std::size_t>> left_right_pairs,
                 std::map<std::string, std::size_t> anchors);

  const std::string& name() const { return name_; }
  std::size_t total() const { return total_; }
  const std::vector<LayoutComponent>& components() const { return components_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& left_right_pairs() const {
    return pairs_;
  }

  bool has_tag(const std::string& tag) const { return tags_.count(tag) != 0; }
  const std::vector<std::size_t>& tag_indices(const std::string& tag) const;
  const std::map<std::string, std::vector<std::size_t>>& tags() const { return tags_; }

  std::optional<std::size_t> anchor(const std::string& name) const;
  const std::map<std::string, std::size_t>& anchors() const { return anchors_; }

  // Selector expressions: a first term ("all" or a tag), then "+tag"/"-tag"
  // set operations, evaluated left to right. Examples:
  //   "right_hand"              -> the 21 right-hand points
  //   "all - legs"              -> everything except leg points
  //   "all - face + face_contour" -> the 203-point contour-face layout
  // Returns the kept global indices in ascending (layout) order.
  std::vector<std::size_t> selection_indices(const std::string& selector) const;

  // Rebuilds the layout for a subset of kept indices (ascending). Components
  // shrink or disappear; tags, pairs and anchors are remapped; pairs with a
  // dropped endpoint are removed.
  KeypointLayout subset(const std::vector<std::size_t>& kept,
                        const std::string& derived_name) const;

  void validate() const;

 private:
  std::string name_;
  std::vector<LayoutComponent> components_;
  std::map<std::string, std::vector<std::size_t>> tags_;
  std::vector<std::pair<std::size_t, std::size_t>> pairs_;
  std::map<std::string, std::size_t> anchors_;
  std::size_t total_ = 0;
};

// Canonicalizes a selector expression (whitespace-insensitive form used in
// derived layout names).
std::string canonical_selector(const std::string& selector);

// Version tag of the built-in layout table.
std::string layout_table_version();

// Names of the canonical layouts in the table.
std::vector<std::string> layout_names();

// Resolves a canonical layout name, or a derived name of the form
// base{|sel(expr)|reduced}*. Throws ValidationError for unknown names.
KeypointLayout resolve_layout(const std::string& name);

// The 128 MediaPipe face-mesh contour landmark indices (eyes, eyebrows,
// lips, face oval) within the 468-point face component.
const std::vector<std::size_t>& face_contour_indices();

// Indices kept by keypoint reduction (drops body landmarks duplicating the
// hand model). Used by reduce_and_reposition and by derived-name resolution.
std::vector<std::size_t> reduction_kept_indices(const KeypointLayout& layout);

}  // namespace signembed
