"""Lagrange polynomials, poisedness estimates and geometry improvement.

For interpolation systems the Lagrange polynomial of a point is one at
that point and zero at the others.  For regression and min-Frobenius
systems the analogous polynomials come from solving the system against
unit right-hand sides (least squares or exact, matching how the model
itself is solved), and the incumbent's polynomial is the complement
``1 - sum(others)`` so that constants are reproduced.

The poisedness constant of a family over a region is estimated as the
maximum absolute polynomial value over a deterministic sample of the
region, refined by a few steps of projected ascent.  It is a lower bound
on the true constant.
"""

from __future__ import annotations

from dataclasses import dataclass, replace as dc_replace

import numpy as np

from .basis import MonomialBasis
from .exceptions import RankDeficient
from .models import (
    AssembledSystem,
    ModelKind,
    QuadraticModel,
    RANK_TOLERANCE,
    recover_model,
)
from .problem import Bounds

LAMBDA_SAMPLE_CAP = 10_000
POLISH_STEPS = 5


@dataclass(frozen=True)
class Region:
    """Intersection of a trust ball with the box constraints."""

    center: np.ndarray
    radius: float
    bounds: Bounds

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))

    @property
    def box(self) -> tuple[np.ndarray, np.ndarray]:
        lo = np.maximum(self.center - self.radius, self.bounds.lower)
        hi = np.minimum(self.center + self.radius, self.bounds.upper)
        return lo, hi

    def contains(self, x: np.ndarray, tol: float = 1e-12) -> bool:
        lo, hi = self.box
        if np.any(x < lo - tol) or np.any(x > hi + tol):
            return False
        return float(np.linalg.norm(x - self.center)) <= self.radius * (1 + tol)

    def project(self, x: np.ndarray) -> np.ndarray:
        """Feasible retraction: clip into the box, then shrink into the ball."""
        lo, hi = self.box
        y = np.minimum(hi, np.maximum(lo, x))
        d = y - self.center
        norm = float(np.linalg.norm(d))
        if norm > self.radius:
            y = self.center + d * (self.radius / norm)
        return y

    def sample(self, per_axis: int | None = None, cap: int = LAMBDA_SAMPLE_CAP) -> np.ndarray:
        """Deterministic sample of the region, always containing the center.

        A tensor grid of ``per_axis`` points per dimension is used while it
        fits under ``cap``; otherwise a fixed-seed uniform sample of the
        ball-box intersection stands in.
        """
        n = self.center.size
        lo, hi = self.box
        if per_axis is None:
            per_axis = max(3, min(2 * n + 1, int(cap ** (1.0 / n))))
            if per_axis % 2 == 0:
                per_axis -= 1
        if per_axis**n <= cap:
            axes = [np.linspace(lo[i], hi[i], per_axis) for i in range(n)]
            mesh = np.meshgrid(*axes, indexing="ij")
            pts = np.stack([m.ravel() for m in mesh], axis=1)
        else:
            # high dimensions: a tensor grid cannot fit under the cap, so
            # sample the ball directly (uniform via normal directions and
            # a radial power law) and keep what lands in the box
            rng = np.random.default_rng(0)
            raw = rng.standard_normal((2 * cap, n))
            directions = raw / np.linalg.norm(raw, axis=1, keepdims=True)
            radii = self.radius * rng.uniform(0.0, 1.0, size=(2 * cap, 1)) ** (1.0 / n)
            pts = self.center + directions * radii
        keep = (
            np.all(pts >= lo, axis=1)
            & np.all(pts <= hi, axis=1)
            & (np.linalg.norm(pts - self.center, axis=1) <= self.radius * (1 + 1e-9))
        )
        pts = pts[keep][:cap]
        return np.vstack([self.center, pts])


@dataclass(frozen=True)
class PoisednessEstimate:
    lam: float
    region: Region
    samples: int


@dataclass(frozen=True)
class LagrangeFamily:
    """One polynomial per training point plus, for Hermite kinds, one per
    derivative row.  ``point_polys`` is aligned with training indices."""

    kind: ModelKind
    center: np.ndarray
    point_polys: tuple[QuadraticModel, ...]
    incumbent_index: int
    row_polys: tuple[tuple[tuple, QuadraticModel], ...] = ()

    @property
    def all_polys(self) -> tuple[QuadraticModel, ...]:
        return self.point_polys + tuple(p for _, p in self.row_polys)


def lagrange_family(sys: AssembledSystem) -> LagrangeFamily:
    """Solve the system against every data-row unit vector.

    The solves reuse one SVD.  On an unscaled system the columns are
    equilibrated first, which leaves exact and least-squares solutions
    unchanged but keeps the rank check meaningful.  On a scaled system
    the stored row and column scalings map the unit vectors in and the
    coefficients back out; for square kinds the polynomials agree with
    the unscaled solve exactly, for regression kinds they belong to the
    same row-weighted fit the model itself uses.
    """
    M = sys.matrix
    if sys.scaled:
        col_norm = 1.0 / sys.col_scale
        Ms = M
    else:
        col_norm = np.max(np.abs(M), axis=0)
        col_norm[col_norm == 0.0] = 1.0
        Ms = M / col_norm
    U, s, Vt = np.linalg.svd(Ms, full_matrices=False)
    if M.shape[0] < M.shape[1] or s[0] == 0.0 or s[-1] <= RANK_TOLERANCE * s[0]:
        raise RankDeficient("Lagrange system is rank deficient")
    pinv = Vt.T @ ((U.T / s[:, None]))  # cols x rows
    coeff = pinv / col_norm[:, None]
    if sys.scaled:
        coeff = coeff * sys.row_scale[None, :]

    n = sys.dimension
    neutral = dc_replace(
        sys,
        f_opt=0.0,
        h_prev=None if sys.h_prev is None else np.zeros((n, n)),
    )

    by_index: dict[int, QuadraticModel] = {}
    row_polys = []
    for r, tag in enumerate(sys.row_tags):
        if tag[0] == "mfn":
            continue
        poly = recover_model(neutral, coeff[:, r])
        if tag[0] == "value":
            by_index[tag[1]] = poly
        else:
            row_polys.append((tag, poly))

    # the incumbent polynomial is the complement, which reproduces constants
    others = [by_index[i] for i in sys.value_order]
    comp = QuadraticModel(
        center=sys.shift,
        c=1.0 - sum(p.c for p in others),
        g=-sum((p.g for p in others), start=np.zeros(n)),
        H=-sum((p.H for p in others), start=np.zeros((n, n))),
    )
    incumbent = next(i for i in range(sys.point_count) if i not in by_index)
    polys = tuple(
        comp if i == incumbent else by_index[i] for i in range(sys.point_count)
    )
    return LagrangeFamily(
        kind=sys.kind,
        center=sys.shift,
        point_polys=polys,
        incumbent_index=incumbent,
        row_polys=tuple(row_polys),
    )


def _polish_abs(poly: QuadraticModel, x0: np.ndarray, region: Region, steps: int) -> tuple[np.ndarray, float]:
    """Projected ascent on |poly| from a seed point; deterministic."""
    x = np.array(x0, dtype=float)
    best = abs(poly.value(x))
    step = region.radius / 4.0
    for _ in range(steps):
        grad = poly.gradient(x)
        sign = 1.0 if poly.value(x) >= 0 else -1.0
        norm = float(np.linalg.norm(grad))
        if norm == 0.0:
            break
        cand = region.project(x + step * sign * grad / norm)
        val = abs(poly.value(cand))
        if val > best:
            x, best = cand, val
        else:
            step *= 0.5
    return x, best


def estimate_lambda(
    family: LagrangeFamily,
    region: Region,
    per_axis: int | None = None,
    polish_steps: int = POLISH_STEPS,
) -> PoisednessEstimate:
    """Grid lower bound on the poisedness constant over the region."""
    pts = region.sample(per_axis)
    lam = 0.0
    best_poly = None
    best_pt = None
    for poly in family.all_polys:
        vals = np.abs(poly.value_at(pts))
        k = int(np.argmax(vals))
        if vals[k] > lam:
            lam = float(vals[k])
            best_poly, best_pt = poly, pts[k]
    if polish_steps and best_poly is not None:
        _, val = _polish_abs(best_poly, best_pt, region, polish_steps)
        lam = max(lam, val)
    return PoisednessEstimate(lam=lam, region=region, samples=len(pts))


def select_outgoing(family: LagrangeFamily, y_add: np.ndarray) -> int:
    """Index of the point whose Lagrange polynomial is largest (in absolute
    value) at the candidate point; the incumbent is protected."""
    vals = np.array([abs(p.value(y_add)) for p in family.point_polys])
    vals[family.incumbent_index] = -np.inf
    return int(np.argmax(vals))


def propose_geometry_point(
    family: LagrangeFamily,
    index: int,
    region: Region,
    per_axis: int | None = None,
    polish_steps: int = POLISH_STEPS,
) -> np.ndarray:
    """Point extremizing |l_index| over the region (grid seed plus ascent)."""
    poly = family.point_polys[index]
    pts = region.sample(per_axis)
    vals = np.abs(poly.value_at(pts))
    seed = pts[int(np.argmax(vals))]
    x, _ = _polish_abs(poly, seed, region, polish_steps)
    return region.project(x)


# --- unreduced representation used for the interpolation-vs-regression
# --- poisedness comparison


def phi_matrix(points: np.ndarray, center: np.ndarray, basis: MonomialBasis) -> np.ndarray:
    """Full basis rows (constant included) at shifted points."""
    rows = [np.concatenate([[1.0], basis.value_row(p - center)]) for p in np.atleast_2d(points)]
    return np.array(rows)


def derivative_phi_matrix(
    points: np.ndarray,
    directions,
    center: np.ndarray,
    basis: MonomialBasis,
) -> np.ndarray:
    """Full-basis derivative rows, point-major over the given 1-based
    directions; the constant column differentiates to zero."""
    rows = []
    for p in np.atleast_2d(points):
        z = p - center
        for direction in directions:
            rows.append(np.concatenate([[0.0], basis.derivative_row(z, direction - 1)]))
    return np.array(rows)


def lambda_from_matrix(matrix: np.ndarray, phi_grid: np.ndarray) -> float:
    """Poisedness estimate of the family defined by a full-basis system.

    Solves the system against the identity (exactly when square, least
    squares otherwise) and maximizes the stacked polynomial values over
    the supplied grid of basis rows.
    """
    m, q1 = matrix.shape
    if m == q1:
        coeff = np.linalg.solve(matrix, np.eye(m))
    else:
        coeff, *_ = np.linalg.lstsq(matrix, np.eye(m), rcond=None)
    values = phi_grid @ coeff  # grid x rows
    return float(np.max(np.abs(values)))


def theorem1_check(
    interp_matrix: np.ndarray,
    augmented_matrix: np.ndarray,
    phi_grid: np.ndarray,
) -> tuple[float, float]:
    """Poisedness of a square interpolation system and of the same system
    augmented with extra rows, over a shared grid.

    Appending rows can only relax the poisedness constant, so the second
    estimate should not exceed the first beyond grid tolerance.
    """
    k = interp_matrix.shape[0]
    if augmented_matrix.shape[0] < k or not np.array_equal(augmented_matrix[:k], interp_matrix):
        raise ValueError("augmented system must contain the interpolation rows first")
    lam_interp = lambda_from_matrix(interp_matrix, phi_grid)
    lam_regress = lambda_from_matrix(augmented_matrix, phi_grid)
    return lam_interp, lam_regress
