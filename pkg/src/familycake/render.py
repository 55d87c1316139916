"""SVG strip chart of an allocation: one horizontal band per family.

Output bytes depend only on the input.  Rectangle coordinates are rounded
to four decimals for drawing, and every rectangle carries its exact
endpoints as text.
"""

from __future__ import annotations

from fractions import Fraction
from xml.sax.saxutils import escape

from .core import Allocation, Interval
from .io import format_rational

WIDTH = 800
BAND = 36
GAP = 12
MARGIN_LEFT = 90
MARGIN = 16
PALETTE = ("#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#edc948", "#b07aa1", "#ff9da7")


def _num(x: Fraction) -> str:
    return f"{float(x):.4f}".rstrip("0").rstrip(".")


def render_svg(allocation: Allocation, cake: Interval, family_ids=None, title: str | None = None) -> str:
    family_ids = list(family_ids or [f"F{j + 1}" for j in range(len(allocation))])
    scale = Fraction(WIDTH) / cake.length
    height = MARGIN * 2 + len(allocation) * (BAND + GAP) + 20
    total_w = MARGIN_LEFT + WIDTH + MARGIN
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{total_w}" height="{height}" '
           f'viewBox="0 0 {total_w} {height}">']
    if title:
        out.append(f'  <title>{escape(title)}</title>')
    for j, (fid, piece) in enumerate(zip(family_ids, allocation.pieces)):
        y = MARGIN + j * (BAND + GAP)
        color = PALETTE[j % len(PALETTE)]
        out.append(f'  <g id="band-{escape(str(fid))}">')
        out.append(f'    <text x="{MARGIN}" y="{y + BAND // 2 + 5}" font-family="monospace" '
                   f'font-size="13">{escape(str(fid))}</text>')
        out.append(f'    <rect x="{MARGIN_LEFT}" y="{y}" width="{WIDTH}" height="{BAND}" fill="none" '
                   f'stroke="#999999"/>')
        for iv in piece:
            x0 = MARGIN_LEFT + (iv.left - cake.left) * scale
            w = iv.length * scale
            label = f"[{format_rational(iv.left)}, {format_rational(iv.right)}]"
            out.append(f'    <rect x="{_num(x0)}" y="{y}" width="{_num(w)}" height="{BAND}" fill="{color}" '
                       f'data-left="{format_rational(iv.left)}" data-right="{format_rational(iv.right)}">'
                       f'<title>{escape(label)}</title></rect>')
            out.append(f'    <text x="{_num(x0 + w / 2)}" y="{y + BAND + 10}" font-family="monospace" '
                       f'font-size="9" text-anchor="middle">{escape(label)}</text>')
        out.append('  </g>')
    axis_y = MARGIN + len(allocation) * (BAND + GAP) + 8
    out.append(f'  <text x="{MARGIN_LEFT}" y="{axis_y}" font-family="monospace" font-size="10">'
               f'{format_rational(cake.left)}</text>')
    out.append(f'  <text x="{MARGIN_LEFT + WIDTH}" y="{axis_y}" font-family="monospace" font-size="10" '
               f'text-anchor="end">{format_rational(cake.right)}</text>')
    out.append('</svg>')
    return "\n".join(out) + "\n"
