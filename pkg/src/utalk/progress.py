"""Per-frame console monitor for long renders.

The default display is deliberately substantial: it paints a live color
preview of the face region (ANSI 24-bit half-block cells) plus a counter
line, repainting in place every frame. That is the per-frame console
overhead the progress_callbacks toggle removes.
"""
from __future__ import annotations

import sys

import cv2
import numpy as np

#: Preview raster: 96 columns x 56 pixel rows = 28 half-block text rows.
PREVIEW_COLS = 96
PREVIEW_PIXEL_ROWS = 56

_RESET = "\x1b[0m"


class ProgressDisplay:
    """Callable progress monitor: display(index, total, pixels).

    pixels is the current face region as an (h, w, 3) uint8 array; it is
    downsampled to a fixed preview raster and written to the stream with
    cursor-up repositioning so the preview animates in place.
    """

    def __init__(self, stream=None):
        self._stream = stream if stream is not None else sys.stderr
        self._painted = False

    def __call__(self, index: int, total: int, pixels: np.ndarray) -> None:
        small = cv2.resize(np.ascontiguousarray(pixels),
                           (PREVIEW_COLS, PREVIEW_PIXEL_ROWS),
                           interpolation=cv2.INTER_AREA)
        text_rows = PREVIEW_PIXEL_ROWS // 2
        out = []
        if self._painted:
            out.append("\x1b[%dA" % (text_rows + 1))
        out.append("\r")
        for r in range(text_rows):
            top = small[2 * r]
            bottom = small[2 * r + 1]
            cells = ["\x1b[38;2;%d;%d;%dm\x1b[48;2;%d;%d;%dm▀"
                     % (t[0], t[1], t[2], b[0], b[1], b[2])
                     for t, b in zip(top, bottom)]
            out.append("".join(cells))
            out.append(_RESET + "\n")
        done = index + 1
        out.append("frame %d/%d (%3.0f%%)" % (done, total, 100.0 * done / total))
        if done == total:
            out.append("\n")
        try:
            self._stream.write("".join(out))
            self._stream.flush()
        except (ValueError, OSError):
            return  # closed or broken stream: monitoring is best-effort
        self._painted = True
