#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace gvhoi {

struct TimelineRow {
  std::string label;        // e.g. "human0 GT"
  std::vector<int> frames;  // class per frame, -1 blank
};

// Static SVG of stacked per-frame class bars with a class legend. Header
// comment carries the provenance string.
void write_timeline_svg(std::ostream& os, const std::string& title, const std::vector<TimelineRow>& rows,
                        const std::vector<std::string>& class_names, const std::string& provenance);

}  // namespace gvhoi
