"""Identification attack and utility metrics on phantom subjects.

The attacker is a deterministic matcher: render the head surface as a depth
image, downsample, zero-mean, and compare by Euclidean distance.  Trials
follow the 5-option protocol (match an original rendering against
de-identified gallery renderings); rank retrieval ranks a whole gallery and
summarizes the correct subject's relative rank against the uniform
distribution.  Utility is measured as segmentation overlap before and after
de-identification.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats

from .errors import DimMismatch, EmptyInput, InvalidGallery
from .phantom import Phantom
from .pipeline import DeidMethod, DeidParams, deidentify
from .surface import SurfaceParams
from .transform import _derived_seed
from .volume import MASK, Volume, rng_from

RENDER_DELTA = 0.25  # head tissue sits well above, background noise well below
VIEWS = ("frontal", "left", "right")

_TISSUE_SPLIT = 0.60  # intensity boundary between tissue and ventricle classes
_SEG_CLASSES = ("tissue", "ventricle")


@dataclass(frozen=True, eq=False)
class Rendering:
    pixels: np.ndarray  # (W, W), background exactly 0
    view: str

    def __post_init__(self):
        px = np.array(self.pixels, dtype=np.float32)
        if px.ndim != 2 or px.shape[0] != px.shape[1]:
            raise ValueError(f"rendering must be square, got {px.shape}")
        if self.view not in VIEWS:
            raise ValueError(f"unknown view {self.view!r}")
        px.setflags(write=False)
        object.__setattr__(self, "pixels", px)


def render_face(x: Volume, delta: float = RENDER_DELTA,
                view: str = "frontal") -> Rendering:
    """Orthographic depth rendering: first voxel >= delta along the view ray.

    Pixels shade by 1 - depth/S, so nearer surfaces are brighter and rays
    that never hit anything stay exactly 0.
    """
    if view not in VIEWS:
        raise ValueError(f"unknown view {view!r}")
    side = x.side
    mask = x.data >= delta
    if view == "frontal":  # looking along -k1 at the face
        mask = mask[:, ::-1, :]
        axis = 1
    elif view == "left":  # looking along +k2
        axis = 2
    else:  # right: looking along -k2
        mask = mask[:, :, ::-1]
        axis = 2
    depth = mask.argmax(axis=axis)
    hit = mask.any(axis=axis)
    img = np.where(hit, 1.0 - depth / side, 0.0)
    return Rendering(pixels=img.astype(np.float32), view=view)


def match_distance(a: Rendering, b: Rendering) -> float:
    """Distance between two renderings under the attacker's embedding."""
    if a.view != b.view:
        raise ValueError(f"views differ: {a.view} vs {b.view}")
    if a.pixels.shape != b.pixels.shape:
        raise DimMismatch(f"rendering sizes {a.pixels.shape} != {b.pixels.shape}")

    def embed(px):
        w = px.shape[0] // 4
        pooled = px[:w * 4, :w * 4].reshape(w, 4, w, 4).mean(axis=(1, 3))
        return pooled - pooled.mean()

    return float(np.linalg.norm(embed(a.pixels) - embed(b.pixels)))


@dataclass(frozen=True)
class TrialResult:
    method: DeidMethod
    chosen: int  # gallery index
    correct: bool


@dataclass(frozen=True, eq=False)
class RankCurve:
    alphas: np.ndarray  # sorted relative ranks in [0, 1]
    ks_stat: float
    ks_pvalue: float

    def cdf(self, points: int = 101) -> np.ndarray:
        """Empirical CDF of the ranks on an even alpha grid."""
        grid = np.linspace(0.0, 1.0, points)
        return (self.alphas[None, :] <= grid[:, None]).mean(axis=1)


def harness_params() -> DeidParams:
    """Default de-identification settings for evaluation runs."""
    return DeidParams(surface=SurfaceParams(num_rotations=16, delta=RENDER_DELTA))


def _member_seed(seed: int, subject_id: int, method: DeidMethod) -> int:
    return _derived_seed(seed, 17, subject_id, list(DeidMethod).index(method))


def _deid_render(p: Phantom, method: DeidMethod, seed: int,
                 params: DeidParams) -> Rendering:
    y = deidentify(p.scan, p.brain, method, params,
                   seed=_member_seed(seed, p.subject_id, method))
    return render_face(y, RENDER_DELTA, "frontal")


def _check_distinct(phantoms: Sequence[Phantom]) -> None:
    ids = [p.subject_id for p in phantoms]
    if len(set(ids)) != len(ids):
        raise InvalidGallery("duplicate subjects in gallery")


def identification_trial(query: Phantom, gallery: Sequence[Phantom],
                         method: DeidMethod, seed: int = 0,
                         params: DeidParams | None = None) -> TrialResult:
    """One attack trial: pick the gallery member whose de-identified rendering
    best matches the query's original rendering.  Ties go to the lowest index.
    """
    if params is None:
        params = harness_params()
    if len(gallery) < 2:
        raise InvalidGallery("gallery needs at least two subjects")
    _check_distinct(gallery)
    if query.subject_id not in {p.subject_id for p in gallery}:
        raise InvalidGallery("query subject missing from gallery")
    qr = render_face(query.scan, RENDER_DELTA, "frontal")
    dists = [match_distance(qr, _deid_render(p, method, seed, params))
             for p in gallery]
    chosen = int(np.argmin(dists))
    return TrialResult(method=method, chosen=chosen,
                       correct=gallery[chosen].subject_id == query.subject_id)


def rank_retrieval(queries: Sequence[Phantom], gallery: Sequence[Phantom],
                   method: DeidMethod, seed: int = 0,
                   params: DeidParams | None = None,
                   renders: Mapping[int, Rendering] | None = None) -> RankCurve:
    """Relative rank of the correct subject when ranking the whole gallery.

    renders may carry precomputed de-identified renderings keyed by subject
    id (matching _member_seed seeding) so sweeps don't re-run the pipeline.
    """
    if params is None:
        params = harness_params()
    if len(gallery) < 10:
        raise InvalidGallery(f"gallery of {len(gallery)} is below the minimum of 10")
    _check_distinct(gallery)
    by_id = {p.subject_id: i for i, p in enumerate(gallery)}
    if renders is None:
        renders = {p.subject_id: _deid_render(p, method, seed, params)
                   for p in gallery}
    n = len(gallery)
    alphas = []
    for q in queries:
        if q.subject_id not in by_id:
            raise InvalidGallery(f"query subject {q.subject_id} not in gallery")
        qr = render_face(q.scan, RENDER_DELTA, "frontal")
        dists = np.array([match_distance(qr, renders[p.subject_id])
                          for p in gallery])
        dists += rng_jitter(seed, q.subject_id, n)
        rank = int(np.argsort(dists, kind="stable").tolist().index(by_id[q.subject_id]))
        alphas.append(rank / (n - 1))
    alphas = np.sort(np.array(alphas))
    ks = stats.kstest(alphas, "uniform")
    return RankCurve(alphas=alphas, ks_stat=float(ks.statistic),
                     ks_pvalue=float(ks.pvalue))


def rng_jitter(seed: int, subject_id: int, n: int) -> np.ndarray:
    """Tiny tie-breaking noise, deterministic per (seed, query)."""
    return rng_from(seed, 29, subject_id).uniform(0.0, 1e-9, n)


def dice(a: Volume, b: Volume) -> float:
    if a.kind != MASK or b.kind != MASK:
        raise ValueError("dice compares mask volumes")
    if a.dims != b.dims:
        raise DimMismatch(f"dims {a.dims} != {b.dims}")
    am, bm = a.data > 0, b.data > 0
    total = int(am.sum()) + int(bm.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((am & bm).sum()) / total


def iou(a: Volume, b: Volume) -> float:
    if a.kind != MASK or b.kind != MASK:
        raise ValueError("iou compares mask volumes")
    if a.dims != b.dims:
        raise DimMismatch(f"dims {a.dims} != {b.dims}")
    am, bm = a.data > 0, b.data > 0
    union = int((am | bm).sum())
    if union == 0:
        return 1.0
    return int((am & bm).sum()) / union


def _segment(scan: Volume, region: np.ndarray) -> dict[str, Volume]:
    """Two-class threshold segmentation inside the region mask."""
    tissue = region & (scan.data >= _TISSUE_SPLIT)
    ventricle = region & (scan.data >= RENDER_DELTA) & (scan.data < _TISSUE_SPLIT)
    return {"tissue": Volume(tissue.astype(np.float32), kind=MASK),
            "ventricle": Volume(ventricle.astype(np.float32), kind=MASK)}


def segmentation_impact(x: Volume, y: Volume, b: Volume, method: DeidMethod,
                        region: str = "brain") -> dict:
    """Per-class dice/iou between segmentations of x and of y.

    region "brain" restricts both segmentations to the brain mask; "head"
    segments each scan's own bright region, so removal methods lose voxels.
    """
    if b.kind != MASK:
        raise ValueError("brain channel must be a mask volume")
    if x.dims != b.dims or y.dims != b.dims:
        raise DimMismatch(f"dims differ: x {x.dims}, y {y.dims}, b {b.dims}")
    if region == "brain":
        seg_x = _segment(x, b.data > 0)
        seg_y = _segment(y, b.data > 0)
    elif region == "head":
        seg_x = _segment(x, x.data >= RENDER_DELTA)
        seg_y = _segment(y, y.data >= RENDER_DELTA)
    else:
        raise ValueError(f"unknown region {region!r}")
    table = {"method": method.value, "region": region, "classes": {}}
    for cls in _SEG_CLASSES:
        table["classes"][cls] = {"dice": dice(seg_x[cls], seg_y[cls]),
                                 "iou": iou(seg_x[cls], seg_y[cls])}
    return table


def bootstrap_ci(rates: Sequence[float], resamples: int = 1000,
                 seed: int = 0) -> tuple[float, float]:
    """Bootstrap mean and standard deviation of the mean."""
    data = np.asarray(rates, dtype=np.float64)
    if data.size == 0:
        raise EmptyInput("no rates to resample")
    rng = rng_from(seed, 37)
    idx = rng.integers(0, data.size, size=(resamples, data.size))
    means = data[idx].mean(axis=1)
    return float(means.mean()), float(means.std())


def run_identification(pool: Sequence[Phantom], methods: Sequence[DeidMethod],
                       n_trials: int, seed: int = 0,
                       params: DeidParams | None = None,
                       gallery_size: int = 5) -> dict:
    """Full attack sweep: per-method identification rates over 5-option
    trials plus rank-retrieval curves over the whole pool.

    De-identified renderings are computed once per (subject, method) and
    shared between trials and ranking; results match running the single
    trial operation with the same master seed.
    """
    if params is None:
        params = harness_params()
    _check_distinct(pool)
    n = len(pool)
    if n < max(gallery_size, 10):
        raise InvalidGallery(f"pool of {n} too small")
    originals = [render_face(p.scan, RENDER_DELTA, "frontal") for p in pool]
    report = {"subjects": n, "trials": n_trials, "gallery_size": gallery_size,
              "seed": seed, "methods": {}}
    trial_rng_base = _derived_seed(seed, 31)
    for method in methods:
        renders = {p.subject_id: _deid_render(p, method, seed, params)
                   for p in pool}
        trng = np.random.default_rng(trial_rng_base)
        hits = []
        for _ in range(n_trials):
            members = trng.choice(n, size=gallery_size, replace=False)
            query = int(members[trng.integers(gallery_size)])
            dists = [match_distance(originals[query],
                                    renders[pool[i].subject_id])
                     for i in members]
            hits.append(bool(members[int(np.argmin(dists))] == query))
        rate = float(np.mean(hits))
        ci_mean, ci_sd = bootstrap_ci([float(h) for h in hits], seed=seed)
        binom_p = float(stats.binomtest(int(np.sum(hits)), n_trials,
                                        1.0 / gallery_size).pvalue)
        curve = rank_retrieval(pool, pool, method, seed, params, renders=renders)
        report["methods"][method.value] = {
            "rate": rate,
            "ci_mean": ci_mean,
            "ci_sd": ci_sd,
            "binomial_p": binom_p,
            "ks_stat": curve.ks_stat,
            "ks_pvalue": curve.ks_pvalue,
            "rank_cdf": curve.cdf(101).tolist(),
        }
    return report
