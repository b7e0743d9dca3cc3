#pragma once

#include <string>

#include "chartagent/common.hpp"
#include "chartagent/image.hpp"

namespace chartagent::font {

inline constexpr int kGlyphWidth = 5;
inline constexpr int kGlyphHeight = 7;
inline constexpr int kAdvance = 6;  // glyph width plus one blank column

// Ink width of a string at the given integer scale (no trailing gap).
int text_width(const std::string& text, int scale = 1);
inline int text_height(int scale = 1) { return kGlyphHeight * scale; }

// Draws with the top-left corner at (x, y). Unknown characters render as
// '?'. Pixels outside the canvas are clipped.
void draw_text(ChartImage& img, int x, int y, const std::string& text,
               const Rgb& color, int scale = 1);

}  // namespace chartagent::font
