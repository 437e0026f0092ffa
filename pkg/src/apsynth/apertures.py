"""Fourier-plane aperture layouts: circular pupils, the ten distribution
strategies, the dense ptychography benchmark grid, and multi-snapshot shift
schedules with coverage accounting.

Coordinates are pixel offsets (u = columns, v = rows) from the DC pixel of
the DC-centered Fourier plane; see :mod:`apsynth.fields` for the grid
convention.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

__all__ = [
    "ApertureSpec",
    "StrategyLayout",
    "SnapshotSchedule",
    "LayoutError",
    "disk_mask",
    "window_slices",
    "local_passband_mask",
    "build_strategy",
    "build_mini_layout",
    "build_fp_grid",
    "build_snapshot_schedule",
    "coverage",
    "measured_pixels",
    "layout_to_json",
    "layout_from_json",
    "save_layout",
    "load_layout",
]


class LayoutError(ValueError):
    """Infeasible aperture placement or malformed layout."""


@dataclass(frozen=True)
class ApertureSpec:
    """One circular pupil: center offset (pixels, from DC) and diameter."""

    center_u: float
    center_v: float
    diameter: int

    def __post_init__(self):
        if self.diameter < 2:
            raise LayoutError(f"aperture diameter must be >= 2, got {self.diameter}")

    @property
    def radius(self) -> float:
        return self.diameter / 2.0

    def shifted(self, du: float, dv: float) -> "ApertureSpec":
        return ApertureSpec(self.center_u + du, self.center_v + dv, self.diameter)

    def in_field(self, field_size: int) -> bool:
        half = field_size / 2.0
        return (
            abs(self.center_u) + self.radius <= half
            and abs(self.center_v) + self.radius <= half
        )


@dataclass(frozen=True)
class StrategyLayout:
    """A named set of apertures on a square Fourier plane."""

    strategy_id: str
    apertures: tuple[ApertureSpec, ...]
    seed: int
    field_size: int

    def __post_init__(self):
        for ap in self.apertures:
            if not ap.in_field(self.field_size):
                raise LayoutError(
                    f"aperture {ap} exceeds field of size {self.field_size}"
                )


@dataclass(frozen=True)
class SnapshotSchedule:
    """A base layout plus one whole-layout shift per snapshot.

    shifts[0] is always (0, 0). Shifted disks may overhang the field edge
    (their masks clip there); that overhang is what lets six snapshots reach
    the plane's corners and 100% coverage.
    """

    base: StrategyLayout
    shifts: tuple[tuple[int, int], ...]

    def __post_init__(self):
        if not self.shifts or tuple(self.shifts[0]) != (0, 0):
            raise LayoutError("schedule must start with the unshifted snapshot (0, 0)")

    @property
    def k(self) -> int:
        return len(self.shifts)

    def snapshot_apertures(self, snapshot: int) -> tuple[ApertureSpec, ...]:
        du, dv = self.shifts[snapshot]
        return tuple(ap.shifted(du, dv) for ap in self.base.apertures)


# Masks -----------------------------------------------------------------------


def disk_mask(spec: ApertureSpec, field_size: int, allow_partial: bool = False) -> np.ndarray:
    """Boolean pupil mask on the DC-centered field_size^2 grid.

    A pixel at offset (u, v) belongs to the disk iff
    (u - center_u)^2 + (v - center_v)^2 <= (d/2)^2. Offsets run over
    [-n//2, n - 1 - n//2]; a boundary point at exactly +n/2 has no grid index
    and is not rasterized.
    """
    if not allow_partial and not spec.in_field(field_size):
        raise LayoutError(f"aperture {spec} exceeds field of size {field_size}")
    c = field_size // 2
    v = np.arange(field_size) - c
    u = np.arange(field_size) - c
    du = u[None, :] - spec.center_u
    dv = v[:, None] - spec.center_v
    return du * du + dv * dv <= spec.radius**2


def local_passband_mask(diameter: int) -> np.ndarray:
    """Disk support within its own d x d crop window.

    The window spans offsets [-d//2, d-1-d//2] around the aperture center, so
    for even d the two on-axis boundary points at +d/2 fall outside it; the
    measurement passband is this intersection, identical for the full-res,
    spatial and decimated paths (which is what makes their energies agree
    exactly).
    """
    c = diameter // 2
    x = np.arange(diameter) - c
    return x[None, :] ** 2 + x[:, None] ** 2 <= (diameter / 2.0) ** 2


def window_slices(spec: ApertureSpec, field_size: int):
    """Field and window index ranges for the d x d crop around an aperture.

    Returns ((r0, r1, c0, c1), (lr0, lr1, lc0, lc1)): the clipped slice in the
    field and the matching slice inside the d x d window. For a fully in-field
    aperture the window slice is the whole window.
    """
    if spec.center_u != int(spec.center_u) or spec.center_v != int(spec.center_v):
        raise LayoutError(f"integer aperture center required, got {spec}")
    d = spec.diameter
    c = field_size // 2
    r0 = c + int(spec.center_v) - d // 2
    c0 = c + int(spec.center_u) - d // 2
    r0c, r1c = max(r0, 0), min(r0 + d, field_size)
    c0c, c1c = max(c0, 0), min(c0 + d, field_size)
    if r1c <= r0c or c1c <= c0c:
        # Entirely outside the field (a far-shifted snapshot): empty window,
        # the camera measures nothing.
        return (0, 0, 0, 0), (0, 0, 0, 0)
    return (r0c, r1c, c0c, c1c), (r0c - r0, r1c - r0, c0c - c0, c1c - c0)


# Strategy construction -------------------------------------------------------

_JITTER = 20          # strategy-4 per-aperture shift bound (px)
_GRID9_PITCH = 170    # strategies 2-4: 3x3 grid pitch on the 512 field


def _grid_centers(n_side: int, pitch: float) -> list[tuple[int, int]]:
    offs = [round((i - (n_side - 1) / 2.0) * pitch) for i in range(n_side)]
    return [(u, v) for v in offs for u in offs]


def _disjoint(c, d, placed) -> bool:
    return all(
        math.hypot(c[0] - p.center_u, c[1] - p.center_v) > (d + p.diameter) / 2.0
        for p in placed
    )


def _place_random(diams, field_size, seed, fixed=None, restarts=200, batch=4000):
    """Rejection-sample disjoint in-field centers, largest disks first.

    Packing runs near 45% of the field, so sequential sampling can dead-end;
    each dead end restarts the whole placement from a derived seed stream.
    """
    diams = sorted(diams, reverse=True)
    fixed = list(fixed or [])
    for restart in range(restarts):
        rng = np.random.default_rng([seed, restart])
        placed = list(fixed)
        centers = np.array([[p.center_u, p.center_v] for p in placed], dtype=float).reshape(-1, 2)
        radii = np.array([p.radius for p in placed], dtype=float)
        ok = True
        for d in diams:
            lim = field_size // 2 - d // 2
            cand = rng.integers(-lim, lim + 1, size=(batch, 2)).astype(float)
            if len(centers):
                dist = np.hypot(
                    cand[:, None, 0] - centers[None, :, 0],
                    cand[:, None, 1] - centers[None, :, 1],
                )
                fits = (dist > radii[None, :] + d / 2.0).all(axis=1)
            else:
                fits = np.ones(batch, dtype=bool)
            hit = np.flatnonzero(fits)
            if not len(hit):
                ok = False
                break
            u, v = (int(x) for x in cand[hit[0]])
            placed.append(ApertureSpec(u, v, d))
            centers = np.vstack([centers, [float(u), float(v)]])
            radii = np.append(radii, d / 2.0)
        if ok:
            return placed
    raise LayoutError(
        f"could not place diameters {diams} disjointly in field {field_size} "
        f"after {restarts} restarts"
    )


def build_strategy(strategy_id: int, field_size: int = 512, seed: int = 0) -> StrategyLayout:
    """Construct one of the ten aperture distribution strategies.

    1: 9 x d=128 densely overlapping at center         6: 36 x d=64 uniform grid
    2: 9 x d=128 uniform symmetric 3x3 grid            7: 4 each of d=128/96/64
    3: strategy 2 with a global offset                 8: 5 each of d=128/96/64
    4: strategy 2 with per-aperture random shifts      9: 1 x d=128 + 14 x d=96
    5: 16 x d=96 uniform grid                         10: 1 x d=128 + 32 x d=64

    Randomized strategies (4, 7-10) are deterministic per seed.
    """
    if strategy_id not in range(1, 11):
        raise LayoutError(f"strategy_id must be 1..10, got {strategy_id}")
    if field_size < 128:
        raise LayoutError("field_size must be >= the largest aperture diameter (128)")
    scale = field_size / 512.0
    rng = np.random.default_rng(seed)
    aps: list[ApertureSpec] = []

    if strategy_id == 1:
        # Densely packed: one central disk ringed by 8 at radius 0.55*d.
        ring = 0.55 * 128
        aps.append(ApertureSpec(0, 0, 128))
        for k in range(8):
            ang = 2.0 * math.pi * k / 8.0
            aps.append(ApertureSpec(round(ring * math.cos(ang)), round(ring * math.sin(ang)), 128))
    elif strategy_id in (2, 3, 4):
        pitch = round(_GRID9_PITCH * scale)
        centers = _grid_centers(3, pitch)
        if strategy_id == 3:
            off = round(21 * scale)
            centers = [(u + off, v + off) for u, v in centers]
        if strategy_id == 4:
            jit = rng.integers(-_JITTER, _JITTER + 1, size=(9, 2))
            centers = [(u + int(j[0]), v + int(j[1])) for (u, v), j in zip(centers, jit)]
        aps = [ApertureSpec(u, v, 128) for u, v in centers]
    elif strategy_id == 5:
        aps = [ApertureSpec(u, v, 96) for u, v in _grid_centers(4, 138 * scale)]
    elif strategy_id == 6:
        aps = [ApertureSpec(u, v, 64) for u, v in _grid_centers(6, 88 * scale)]
    elif strategy_id in (7, 8):
        count = 4 if strategy_id == 7 else 5
        aps = _place_random([128] * count + [96] * count + [64] * count, field_size, seed)
    elif strategy_id == 9:
        aps = _place_random([96] * 14, field_size, seed, fixed=[ApertureSpec(0, 0, 128)])
    elif strategy_id == 10:
        aps = _place_random([64] * 32, field_size, seed, fixed=[ApertureSpec(0, 0, 128)])

    layout = StrategyLayout(str(strategy_id), tuple(aps), seed, field_size)
    if strategy_id in (2, 3, 4):
        # Pitch 170 with |jitter| <= 20 keeps neighbors > 130 px apart (> d).
        for i, a in enumerate(layout.apertures):
            for b in layout.apertures[i + 1 :]:
                if not _disjoint((a.center_u, a.center_v), a.diameter, [b]):
                    raise LayoutError(f"strategy {strategy_id}: overlapping disks {a}, {b}")
    return layout


def build_mini_layout(field_size: int = 64, diameter: int = 16, seed: int = 0) -> StrategyLayout:
    """Desk-scale strategy-4 analogue: 9 jittered small disks on a small field."""
    pitch = round(_GRID9_PITCH * field_size / 512.0)
    jit = max(1, round(_JITTER * field_size / 512.0))
    rng = np.random.default_rng(seed)
    centers = _grid_centers(3, pitch)
    jitter = rng.integers(-jit, jit + 1, size=(9, 2))
    aps = tuple(
        ApertureSpec(u + int(j[0]), v + int(j[1]), diameter)
        for (u, v), j in zip(centers, jitter)
    )
    return StrategyLayout("custom", aps, seed, field_size)


def _lens_overlap_fraction(t: float) -> float:
    # Area-overlap fraction of two unit-diameter disks at center distance t.
    return (2.0 / math.pi) * (math.acos(t) - t * math.sqrt(1.0 - t * t))


def solve_overlap_spacing(overlap: float) -> float:
    """Center spacing (in units of the diameter) giving the requested
    adjacent-disk area-overlap fraction; bisection on the lens-area equation."""
    if not 0.0 <= overlap < 1.0:
        raise LayoutError(f"overlap fraction must be in [0, 1), got {overlap}")
    if overlap == 0.0:
        return 1.0
    lo, hi = 0.0, 1.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _lens_overlap_fraction(mid) > overlap:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def build_fp_grid(
    field_size: int = 512,
    d: int = 128,
    count: int = 100,
    overlap: float = 0.61,
    seed: int = 0,
) -> StrategyLayout:
    """Square grid of equal apertures with a chosen adjacent-pair area overlap
    (the scanning-ptychography benchmark; 61% overlap, 100 apertures)."""
    n_side = math.isqrt(count)
    if n_side * n_side != count:
        raise LayoutError(f"count must be a perfect square, got {count}")
    spacing = solve_overlap_spacing(overlap) * d
    offs = [round((i - (n_side - 1) / 2.0) * spacing) for i in range(n_side)]
    if offs and (abs(offs[0]) + d / 2.0 > field_size / 2.0 or abs(offs[-1]) + d / 2.0 > field_size / 2.0):
        raise LayoutError(
            f"{n_side}x{n_side} grid of d={d} at spacing {spacing:.1f} exceeds field {field_size}"
        )
    aps = tuple(ApertureSpec(u, v, d) for v in offs for u in offs)
    return StrategyLayout("fp_grid", aps, seed, field_size)


# Coverage and snapshot schedules ---------------------------------------------


def _layout_union(layout: StrategyLayout) -> np.ndarray:
    union = np.zeros((layout.field_size, layout.field_size), dtype=bool)
    for ap in layout.apertures:
        union |= disk_mask(ap, layout.field_size, allow_partial=True)
    return union


def _shift_bool(mask: np.ndarray, du: int, dv: int) -> np.ndarray:
    """Translate a boolean mask by (du, dv) pixels with zero fill (no wrap)."""
    n0, n1 = mask.shape
    out = np.zeros_like(mask)
    r0, r1 = max(dv, 0), min(n0 + dv, n0)
    c0, c1 = max(du, 0), min(n1 + du, n1)
    if r1 > r0 and c1 > c0:
        out[r0:r1, c0:c1] = mask[r0 - dv : r1 - dv, c0 - du : c1 - du]
    return out


def coverage(layout_or_schedule, field_size: int | None = None) -> float:
    """Fraction of Fourier-plane pixels inside the union of all disk masks."""
    if isinstance(layout_or_schedule, SnapshotSchedule):
        sched = layout_or_schedule
        base = _layout_union(sched.base)
        union = np.zeros_like(base)
        for du, dv in sched.shifts:
            union |= _shift_bool(base, du, dv)
        n = sched.base.field_size
    else:
        layout = layout_or_schedule
        union = _layout_union(layout)
        n = layout.field_size
    if field_size is not None and field_size != n:
        raise LayoutError(f"field_size {field_size} does not match layout ({n})")
    return float(union.sum()) / float(n * n)


def measured_pixels(layout: StrategyLayout) -> int:
    """Total sensor pixels: sum of diameter^2 over all apertures."""
    return int(sum(ap.diameter**2 for ap in layout.apertures))


def _corr_gain(uncovered: np.ndarray, bu_fft: np.ndarray, n: int) -> np.ndarray:
    """Newly-covered-pixel count for every layout shift in [-n/2, n/2]^2.

    gain[s] = sum_p uncovered[p] * base_union[p - s] is a cross-correlation,
    evaluated for all integer shifts at once on a zero-padded 2n grid. Counts
    are exact integers (float64 FFT error << 0.5), so the argmax is stable.
    """
    m = 2 * n
    a = np.zeros((m, m))
    a[:n, :n] = uncovered
    corr = np.fft.irfft2(np.fft.rfft2(a) * bu_fft, s=(m, m))
    h = n // 2
    idx = np.arange(-h, h + 1) % m
    return np.round(corr[np.ix_(idx, idx)]).astype(np.int64)


def _argmax_shift(gain: np.ndarray, h: int) -> tuple[tuple[int, int], int]:
    i = int(np.argmax(gain))
    dv, du = divmod(i, gain.shape[1])
    return (du - h, dv - h), int(gain[dv, du])


def _positions_covering(holes_rc: np.ndarray, base_union: np.ndarray, n: int) -> np.ndarray:
    """Boolean grid over shifts s: shifted(base_union, s) contains every hole.

    Each hole pixel constrains s to a translated copy of the (flipped) base
    union; the valid set is their intersection, built by pure slicing.
    """
    h = n // 2
    flipped = np.pad(base_union[::-1, ::-1], ((0, 1), (0, 1)))
    valid = np.ones((n + 1, n + 1), dtype=bool)
    rng_idx = np.arange(-h, h + 1)
    for r0, c0 in holes_rc:
        rs = n - 1 - int(r0) + rng_idx
        cs = n - 1 - int(c0) + rng_idx
        rv = (rs >= 0) & (rs <= n)
        cv = (cs >= 0) & (cs <= n)
        window = np.zeros((n + 1, n + 1), dtype=bool)
        window[np.ix_(rv, cv)] = flipped[np.ix_(rs[rv], cs[cv])]
        valid &= window
        if not valid.any():
            break
    return valid


def _hole_clusters(holes_rc: np.ndarray, merge_dist: int = 2) -> list[np.ndarray]:
    """Group hole pixels into near-connected clusters, largest first."""
    pts = [tuple(map(int, p)) for p in holes_rc]
    parent = list(range(len(pts)))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            if (
                abs(pts[i][0] - pts[j][0]) <= merge_dist
                and abs(pts[i][1] - pts[j][1]) <= merge_dist
            ):
                ra, rb = find(i), find(j)
                if ra != rb:
                    parent[ra] = rb
    groups: dict[int, list] = {}
    for i, p in enumerate(pts):
        groups.setdefault(find(i), []).append(p)
    return [np.array(g) for g in sorted(groups.values(), key=len, reverse=True)]


def _union_without(base_union, shifts, skip):
    u = base_union.copy()
    for j, s in enumerate(shifts):
        if j == 0 or j == skip:
            continue
        u |= _shift_bool(base_union, *s)
    return u


def _ascend(shifts, base_union, bu_fft, n, k, order, passes=12):
    """Exact coordinate ascent: re-optimize one snapshot's shift at a time."""
    h = n // 2
    covered = _union_without(base_union, shifts, -1)
    for _ in range(passes):
        improved = False
        for i in order:
            others = _union_without(base_union, shifts, i)
            if others.all():
                continue
            s, g = _argmax_shift(_corr_gain(~others, bu_fft, n), h)
            current = int((_shift_bool(base_union, *shifts[i]) & ~others).sum())
            if g > current:
                shifts[i] = s
                improved = True
        covered = _union_without(base_union, shifts, -1)
        if covered.all() or not improved:
            break
    return shifts, covered


def build_snapshot_schedule(
    base: StrategyLayout, k: int, seed: int = 0, max_iterations: int = 40
) -> SnapshotSchedule:
    """Build a k-snapshot shift schedule maximizing cumulative coverage.

    Snapshot 1 is the unshifted base. Further shifts start from greedy
    selection (each new shift covers the most still-uncovered pixels; the
    candidate set is every integer shift, enumerated exactly by FFT
    cross-correlation) and are then refined by exact per-snapshot
    re-optimization with hole-targeted restarts until coverage stops
    improving. For k = 6 and the 9 x d=128 layouts this reaches 100%;
    if it cannot, a LayoutError is raised.

    Deterministic per (base, k, seed); the seed only drives tie-breaking
    perturbations in the restart phase.
    """
    if k < 1:
        raise LayoutError(f"snapshot count must be >= 1, got {k}")
    if k == 1:
        return SnapshotSchedule(base, ((0, 0),))
    n = base.field_size
    h = n // 2
    base_union = _layout_union(base)
    m = 2 * n
    b = np.zeros((m, m))
    b[:n, :n] = base_union
    bu_fft = np.conj(np.fft.rfft2(b))
    rng = np.random.default_rng(seed)

    covered = base_union.copy()
    shifts: list[tuple[int, int]] = [(0, 0)]
    for _ in range(1, k):
        if covered.all():
            raise LayoutError("coverage complete before the requested snapshot count")
        s, g = _argmax_shift(_corr_gain(~covered, bu_fft, n), h)
        if g <= 0:
            raise LayoutError("no shift adds coverage")
        shifts.append(s)
        covered |= _shift_bool(base_union, *s)

    forward = list(range(1, k))
    orders = (forward, forward[::-1])
    shifts, covered = _ascend(shifts, base_union, bu_fft, n, k, forward)
    tabu = {tuple(shifts)}
    best_state = (int(covered.sum()), list(shifts))

    for _ in range(max_iterations):
        if covered.all():
            break
        holes = np.argwhere(~covered)
        if len(holes) > 4096:
            holes = holes[:: len(holes) // 4096 + 1]
        # Positions that would cover every hole (or the largest cluster, or
        # at least one hole) in a single snapshot move.
        targets = [holes]
        if len(holes) <= 1500:
            targets.append(None)  # placeholder: largest cluster
        targets.append(holes[:1])
        for target in targets:
            if target is None:
                target = _hole_clusters(holes)[0]
            valid = _positions_covering(target, base_union, n)
            if valid.any():
                break
        kicks = []
        for i in range(1, k):
            others = _union_without(base_union, shifts, i)
            gain = np.where(valid, _corr_gain(~others, bu_fft, n), -1)
            s, g = _argmax_shift(gain, h)
            if g < 0:
                continue
            cov = int((others | _shift_bool(base_union, *s)).sum())
            kicks.append((cov, i, s))
        kicks.sort(key=lambda t: (-t[0], t[1]))
        applied = False
        for _, i, s in kicks:
            trial = list(shifts)
            trial[i] = s
            for order in orders:
                cand, cand_cov = _ascend(list(trial), base_union, bu_fft, n, k, order)
                key = tuple(cand)
                if key not in tabu:
                    tabu.add(key)
                    shifts, covered = cand, cand_cov
                    applied = True
                    break
            if applied:
                break
        if not applied:
            # Seeded random restart of one snapshot to escape the tabu set.
            i = int(rng.integers(1, k))
            shifts[i] = (int(rng.integers(-h, h + 1)), int(rng.integers(-h, h + 1)))
            shifts, covered = _ascend(shifts, base_union, bu_fft, n, k, forward)
            tabu.add(tuple(shifts))
        if int(covered.sum()) > best_state[0]:
            best_state = (int(covered.sum()), list(shifts))

    if not covered.all():
        count, shifts = best_state
        if k >= 6 and count < n * n:
            raise LayoutError(
                f"could not reach full coverage with k={k} "
                f"(best {count / (n * n):.4%} after {max_iterations} restarts)"
            )
    return SnapshotSchedule(base, tuple(tuple(s) for s in shifts))


# Serialization ---------------------------------------------------------------


def layout_to_json(obj) -> dict:
    """Layout/schedule -> plain JSON document (the on-disk interchange form)."""
    if isinstance(obj, SnapshotSchedule):
        doc = layout_to_json(obj.base)
        doc["shifts"] = [list(s) for s in obj.shifts]
        return doc
    return {
        "strategy_id": obj.strategy_id,
        "seed": obj.seed,
        "field_size": obj.field_size,
        "apertures": [
            {"u": ap.center_u, "v": ap.center_v, "d": ap.diameter} for ap in obj.apertures
        ],
    }


def layout_from_json(doc: dict):
    aps = tuple(ApertureSpec(a["u"], a["v"], a["d"]) for a in doc["apertures"])
    layout = StrategyLayout(str(doc["strategy_id"]), aps, int(doc.get("seed", 0)), int(doc["field_size"]))
    shifts = doc.get("shifts")
    if shifts and len(shifts) > 1:
        return SnapshotSchedule(layout, tuple((int(a), int(b)) for a, b in shifts))
    return layout


def save_layout(obj, path) -> None:
    Path(path).write_text(json.dumps(layout_to_json(obj), indent=2) + "\n")


def load_layout(path):
    return layout_from_json(json.loads(Path(path).read_text()))
