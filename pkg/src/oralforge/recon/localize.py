"""Tooth localization: binarize each category plane, keep the largest island."""
from __future__ import annotations

import numpy as np
from scipy import ndimage

from .types import SegmentationMask, ToothBox

__all__ = ["localize", "largest_island"]

# 4-connectivity structuring element
_FOUR = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=bool)


def largest_island(plane: np.ndarray) -> np.ndarray | None:
    """Boolean mask of the largest 4-connected component, or None if empty."""
    labels, count = ndimage.label(plane, structure=_FOUR)
    if count == 0:
        return None
    sizes = np.bincount(labels.reshape(-1))[1:]
    return labels == (int(np.argmax(sizes)) + 1)


def localize(mask: SegmentationMask | np.ndarray, threshold: float = 0.5) -> list[ToothBox]:
    """Per-category boxes around the largest island above threshold.

    Categories with nothing above threshold come back with present=False.
    """
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold must lie in (0, 1)")
    probs = mask.probs if isinstance(mask, SegmentationMask) else np.asarray(mask)
    boxes: list[ToothBox] = []
    for k in range(probs.shape[-1]):
        island = largest_island(probs[:, :, k] >= threshold)
        if island is None:
            boxes.append(ToothBox(k, present=False))
            continue
        rows = np.any(island, axis=1)
        cols = np.any(island, axis=0)
        ymin, ymax = np.nonzero(rows)[0][[0, -1]]
        xmin, xmax = np.nonzero(cols)[0][[0, -1]]
        boxes.append(ToothBox(k, True, int(xmin), int(ymin), int(xmax), int(ymax)))
    return boxes
