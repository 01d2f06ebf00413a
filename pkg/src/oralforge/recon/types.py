"""Value types of the reconstruction pipeline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "K_CATEGORIES", "fdi_from_index", "index_from_fdi", "ALL_FDI",
    "XRayImage", "FeatureMap", "SegmentationMask", "ToothBox", "ToothVolume",
    "LossReport", "ReconConfig",
]

K_CATEGORIES = 32


def fdi_from_index(i: int) -> int:
    """Category index 0..31 -> FDI two-digit code (11..18, 21..28, 31..38, 41..48)."""
    if not 0 <= i < K_CATEGORIES:
        raise ValueError("category index out of range")
    return (i // 8 + 1) * 10 + i % 8 + 1


def index_from_fdi(fdi: int) -> int:
    q, p = divmod(fdi, 10)
    if not (1 <= q <= 4 and 1 <= p <= 8):
        raise ValueError(f"not a valid FDI code: {fdi}")
    return (q - 1) * 8 + (p - 1)


ALL_FDI = tuple(fdi_from_index(i) for i in range(K_CATEGORIES))


@dataclass(frozen=True)
class XRayImage:
    intensity: np.ndarray      # (H, W) in [0, 1]

    def __post_init__(self):
        a = np.asarray(self.intensity, dtype=np.float32)
        if a.ndim != 2 or min(a.shape) < 32:
            raise ValueError("X-ray must be 2D with both dims >= 32")
        if a.min() < 0 or a.max() > 1:
            raise ValueError("intensities must lie in [0, 1]")
        object.__setattr__(self, "intensity", a)

    @property
    def shape(self) -> tuple[int, int]:
        return self.intensity.shape


@dataclass(frozen=True)
class FeatureMap:
    data: np.ndarray           # (H, W, C)


@dataclass(frozen=True)
class SegmentationMask:
    """Per-category probabilities (H, W, K), independent sigmoids."""
    probs: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.probs)
        if a.ndim != 3 or a.shape[2] != K_CATEGORIES:
            raise ValueError(f"mask must be (H, W, {K_CATEGORIES})")
        if a.min() < -1e-6 or a.max() > 1 + 1e-6:
            raise ValueError("mask probabilities must lie in [0, 1]")
        object.__setattr__(self, "probs", a)


@dataclass(frozen=True)
class ToothBox:
    category_index: int
    present: bool
    xmin: int = 0
    ymin: int = 0
    xmax: int = 0
    ymax: int = 0

    @property
    def fdi(self) -> int:
        return fdi_from_index(self.category_index)

    @property
    def center(self) -> tuple[float, float]:
        return (0.5 * (self.xmin + self.xmax), 0.5 * (self.ymin + self.ymax))

    @property
    def size(self) -> tuple[int, int]:
        return (self.xmax - self.xmin + 1, self.ymax - self.ymin + 1)


@dataclass(frozen=True)
class ToothVolume:
    """(D, D, D) occupancy probabilities for one tooth category."""
    occupancy: np.ndarray
    category_index: int

    def __post_init__(self):
        a = np.asarray(self.occupancy)
        if a.ndim != 3 or len(set(a.shape)) != 1:
            raise ValueError("tooth volume must be a cube")
        if a.min() < -1e-6 or a.max() > 1 + 1e-6:
            raise ValueError("occupancy must lie in [0, 1]")
        object.__setattr__(self, "occupancy", a)

    @property
    def resolution(self) -> int:
        return self.occupancy.shape[0]


@dataclass(frozen=True)
class LossReport:
    seg_loss: float
    recon_loss: float = 0.0

    @property
    def total(self) -> float:
        return self.seg_loss + self.recon_loss


@dataclass(frozen=True)
class ReconConfig:
    """Architecture and training knobs; defaults are the desk-scale config."""
    height: int = 128
    width: int = 256
    feat_channels: int = 16
    enc_channels: tuple[int, int, int] = (16, 32, 64)
    volume_dim: int = 32           # D
    patch_size: int = 48
    seg_head_channels: int = 32
    recon_enc_channels: tuple[int, int, int] = (32, 64, 64)
    recon_seed_grid: int = 4
    recon_seed_channels: int = 64
    recon_dec_channels: tuple[int, int, int] = (32, 16, 8)
    init_seed: int = 7
    # training
    lr: float = 1e-3
    batch_size: int = 2
    patience: int = 10
    max_epochs: int = 60
    val_fraction: float = 0.15
    max_teeth_per_step: int = 6
    localize_threshold: float = 0.5
    dice_eps: float = 1.0

    def __post_init__(self):
        if self.height % 8 or self.width % 8:
            raise ValueError("input dims must be multiples of 8 (depth-3 encoder)")
        if self.patch_size % 8:
            raise ValueError("patch size must be a multiple of 8")
        if self.recon_seed_grid * 2 ** len(self.recon_dec_channels) != self.volume_dim:
            raise ValueError("decoder stages do not reach the volume resolution")
