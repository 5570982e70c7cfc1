"""Distribution distance and segmentation agreement metrics.

The distribution distance follows the standard formulation
||mu_r - mu_f||^2 + tr(S_r + S_f - 2 (S_r S_f)^(1/2)) over features from a
pluggable extractor; tests and desk-scale runs use a seeded random projection
so results are hermetic, while production can plug in a pretrained embedding.
Segmentation metrics are aggregated over a whole evaluation set; the
background class is always excluded from reports, buses optionally.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
import torch
from PIL import Image

from .dataset import NUM_SEGMAP_CLASSES, SEGMAP_CLASS_NAMES, DataPoint
from .errors import DomainError
from .pipeline import GeneratorBundle, to_uint8_image

FOREGROUND_CLASS_IDS = tuple(range(1, NUM_SEGMAP_CLASSES))
BUS_CLASS_ID = SEGMAP_CLASS_NAMES.index("bus")


def _symmetric_psd_sqrt(mat: np.ndarray) -> np.ndarray:
    """Square root of a (nearly) PSD symmetric matrix via eigendecomposition.

    The input is projected to its symmetric part and negative eigenvalues
    (numerical noise) are clipped to zero.
    """
    sym = (mat + mat.T) / 2.0
    vals, vecs = np.linalg.eigh(sym)
    return (vecs * np.sqrt(np.clip(vals, 0.0, None))) @ vecs.T


@dataclass(frozen=True)
class FidResult:
    value: float
    regularization_epsilon: float

    def __float__(self) -> float:
        return self.value


def compute_fid(real_features: np.ndarray, fake_features: np.ndarray) -> FidResult:
    """Frechet distance between Gaussians fitted to two feature sets."""
    real = np.asarray(real_features, dtype=np.float64)
    fake = np.asarray(fake_features, dtype=np.float64)
    if real.ndim != 2 or fake.ndim != 2 or real.shape[1] != fake.shape[1]:
        raise DomainError(
            f"feature sets must be (N, D) with matching D, got "
            f"{real.shape} and {fake.shape}"
        )
    if real.shape[0] < 2 or fake.shape[0] < 2:
        raise DomainError("need at least 2 samples per side to fit a covariance")

    mu_r, mu_f = real.mean(axis=0), fake.mean(axis=0)
    sigma_r = np.cov(real, rowvar=False)
    sigma_f = np.cov(fake, rowvar=False)
    diff = float(((mu_r - mu_f) ** 2).sum())

    eps = 0.0
    while True:
        sr = sigma_r + eps * np.eye(sigma_r.shape[0])
        sf = sigma_f + eps * np.eye(sigma_f.shape[0])
        root_r = _symmetric_psd_sqrt(sr)
        cross = _symmetric_psd_sqrt(root_r @ sf @ root_r)
        value = diff + float(np.trace(sr) + np.trace(sf) - 2.0 * np.trace(cross))
        if np.isfinite(value):
            break
        if eps >= 1e-2:
            raise DomainError("covariance too degenerate even after regularization")
        eps = 1e-6 if eps == 0.0 else eps * 10.0
    if value < -1e-6:
        raise DomainError(f"distance came out negative ({value}); inputs degenerate")
    return FidResult(value=max(value, 0.0), regularization_epsilon=eps)


def compute_miou(
    preds: Sequence[np.ndarray],
    trues: Sequence[np.ndarray],
    classes: Sequence[int] = FOREGROUND_CLASS_IDS,
) -> dict[int, float | None]:
    """Per-class intersection-over-union aggregated over the whole set.

    Classes absent from both predictions and truth map to None (not
    applicable) rather than a score.
    """
    inter = {c: 0 for c in classes}
    union = {c: 0 for c in classes}
    for pred, true in zip(preds, trues, strict=True):
        pred = np.asarray(pred)
        true = np.asarray(true)
        if pred.shape != true.shape:
            raise DomainError(f"shape mismatch: {pred.shape} vs {true.shape}")
        for c in classes:
            p = pred == c
            t = true == c
            inter[c] += int(np.logical_and(p, t).sum())
            union[c] += int(np.logical_or(p, t).sum())
    return {c: (inter[c] / union[c] if union[c] > 0 else None) for c in classes}


def compute_pixel_accuracy(
    preds: Sequence[np.ndarray],
    trues: Sequence[np.ndarray],
    classes: Sequence[int] = FOREGROUND_CLASS_IDS,
) -> dict[int, float | None]:
    """Per-class recall: correctly labeled pixels of c / true pixels of c."""
    correct = {c: 0 for c in classes}
    total = {c: 0 for c in classes}
    for pred, true in zip(preds, trues, strict=True):
        pred = np.asarray(pred)
        true = np.asarray(true)
        if pred.shape != true.shape:
            raise DomainError(f"shape mismatch: {pred.shape} vs {true.shape}")
        for c in classes:
            t = true == c
            correct[c] += int(np.logical_and(pred == c, t).sum())
            total[c] += int(t.sum())
    return {c: (correct[c] / total[c] if total[c] > 0 else None) for c in classes}


class RandomProjectionExtractor:
    """Seeded random-projection image embedding.

    Images are resized to a fixed grid, normalized, and projected with a
    frozen Gaussian matrix. Deterministic given (seed, dims); hermetic (no
    pretrained weights), so distribution-distance identities are testable.
    """

    def __init__(self, dims: int = 8, seed: int = 0, grid: int = 16):
        self.dims = dims
        self.seed = seed
        self.grid = grid
        rng = np.random.default_rng(seed)
        self._proj = rng.standard_normal((grid * grid * 3, dims)) / np.sqrt(grid * grid * 3)

    def __call__(self, images: Sequence[np.ndarray]) -> np.ndarray:
        feats = []
        for img in images:
            arr = np.asarray(img)
            if arr.ndim != 3 or arr.shape[2] != 3:
                raise DomainError(f"expected (H, W, 3) images, got {arr.shape}")
            small = np.asarray(
                Image.fromarray(arr.astype(np.uint8)).resize(
                    (self.grid, self.grid), Image.BILINEAR
                ),
                dtype=np.float64,
            )
            feats.append((small.reshape(-1) / 127.5 - 1.0) @ self._proj)
        return np.stack(feats)


def ground_truth_segmenter(image: np.ndarray, point: DataPoint) -> np.ndarray:
    """Placeholder segmenter: echoes the true labels (upper-bound agreement).

    Real evaluations should plug in a segmentation model applied to the
    generated image.
    """
    return point.segmap.labels


@dataclass
class EvalReport:
    fid: float
    fid_regularization_epsilon: float
    miou: dict[str, float]
    accuracy: dict[str, float]
    miou_mean: float | None
    accuracy_mean: float | None
    num_images: int
    num_failed: int
    excluded_classes: list[str] = field(default_factory=list)

    def __post_init__(self) -> None:
        for name, scores in (("miou", self.miou), ("accuracy", self.accuracy)):
            if "background" in scores:
                raise DomainError(f"background must be excluded from {name}")
            for cls, v in scores.items():
                if not 0.0 <= v <= 1.0:
                    raise DomainError(f"{name}[{cls}] = {v} out of [0, 1]")
        if self.fid < 0:
            raise DomainError(f"distribution distance must be nonnegative, got {self.fid}")

    def to_dict(self) -> dict:
        return {
            "fid": self.fid,
            "fid_regularization_epsilon": self.fid_regularization_epsilon,
            "miou": self.miou,
            "accuracy": self.accuracy,
            "miou_mean": self.miou_mean,
            "accuracy_mean": self.accuracy_mean,
            "num_images": self.num_images,
            "num_failed": self.num_failed,
            "excluded_classes": self.excluded_classes,
        }

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))


def _generate_for_point(
    bundle: GeneratorBundle, point: DataPoint, seed: int
) -> np.ndarray:
    """Regenerate an image from a data point's stored graph and segmap."""
    p = next(bundle.generator.parameters())
    with torch.no_grad():
        omega, _ = bundle.condition.forward_graphs([point.graph])
        z = None
        if bundle.config.generator.use_noise:
            rng = torch.Generator()
            rng.manual_seed(seed)
            z = torch.randn(1, bundle.config.generator.z_dim, generator=rng).to(
                device=p.device, dtype=p.dtype
            )
        onehot = torch.from_numpy(point.segmap.one_hot()).unsqueeze(0).to(
            device=p.device, dtype=p.dtype
        )
        out = bundle.generator(onehot, omega, z)[0]
    return to_uint8_image(out)


def evaluate_model(
    bundle: GeneratorBundle,
    points: Sequence[DataPoint],
    extractor: Callable[[Sequence[np.ndarray]], np.ndarray] | None = None,
    segmenter: Callable[[np.ndarray, DataPoint], np.ndarray] = ground_truth_segmenter,
    exclude_bus: bool = False,
    seed: int = 0,
) -> EvalReport:
    """Generate one image per point and score all metrics with exclusions."""
    if extractor is None:
        extractor = RandomProjectionExtractor()
    class_ids = [c for c in FOREGROUND_CLASS_IDS if not (exclude_bus and c == BUS_CLASS_ID)]
    excluded = ["background"] + (["bus"] if exclude_bus else [])

    reals, fakes, preds, trues = [], [], [], []
    failed = 0
    for i, point in enumerate(points):
        try:
            generated = _generate_for_point(bundle, point, seed=seed + i)
            preds.append(np.asarray(segmenter(generated, point)))
            trues.append(point.segmap.labels)
            reals.append(point.image)
            fakes.append(generated)
        except DomainError:
            failed += 1
    if len(reals) < 2:
        raise DomainError(
            f"too few successfully evaluated images ({len(reals)}) to fit statistics"
        )

    fid = compute_fid(extractor(reals), extractor(fakes))
    miou = compute_miou(preds, trues, class_ids)
    accuracy = compute_pixel_accuracy(preds, trues, class_ids)
    miou_named = {SEGMAP_CLASS_NAMES[c]: v for c, v in miou.items() if v is not None}
    acc_named = {SEGMAP_CLASS_NAMES[c]: v for c, v in accuracy.items() if v is not None}
    return EvalReport(
        fid=fid.value,
        fid_regularization_epsilon=fid.regularization_epsilon,
        miou=miou_named,
        accuracy=acc_named,
        miou_mean=(sum(miou_named.values()) / len(miou_named)) if miou_named else None,
        accuracy_mean=(sum(acc_named.values()) / len(acc_named)) if acc_named else None,
        num_images=len(reals),
        num_failed=failed,
        excluded_classes=excluded,
    )
