"""Trust-region driver: initialization, iteration loop and termination.

Each iteration builds a quadratic model of the configured kind from the
current training set (scaled, optionally weighted), minimizes it over the
trust ball intersected with the box, and accepts or rejects the trial
point by the ratio of actual to predicted decrease.  Accepted points
replace the training point whose Lagrange polynomial is largest at the
trial; rejected steps shrink the radius and may trigger a geometry
improvement evaluation when the poisedness estimate is poor.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .exceptions import (
    BudgetExhausted,
    DegenerateModelDecrease,
    DuplicatePoint,
    OutOfBounds,
    RankDeficient,
)
from .models import (
    FROBENIUS_KINDS,
    HERMITE_KINDS,
    ModelKind,
    QuadraticModel,
    WeightScheme,
    apply_scaling,
    apply_weighting,
    assemble_full_interp,
    assemble_hermite_bobyqa,
    assemble_hermite_ls,
    assemble_min_frob,
    solve_system,
)
from .poisedness import (
    Region,
    estimate_lambda,
    lagrange_family,
    propose_geometry_point,
    select_outgoing,
)
from .problem import (
    EvaluationBudget,
    ObjectiveSpec,
    TaylorReference,
    TrainingSet,
    evaluate,
    incumbent,
    points_equal,
)
from .subproblem import solve_subproblem


class TerminationReason(Enum):
    RADIUS_BELOW_MIN = "radius-below-min"
    BUDGET_EXHAUSTED = "budget-exhausted"
    STEP_SIZE_TINY = "step-size-tiny"


@dataclass
class SolverConfig:
    """Trust-region parameters; defaults are conventional values."""

    kind: ModelKind = ModelKind.BOBYQA
    point_count: int | None = None
    initial_radius: float | None = None
    min_radius: float = 1e-8
    eta1: float = 0.05
    eta2: float = 0.7
    gamma_dec: float = 0.5
    gamma_inc: float = 2.0
    max_radius_factor: float = 1e3
    max_evaluations: int = 500
    weighting: bool = False
    weight_scale: float = 5.0
    second_order: bool = False
    seed: int = 0
    lambda_threshold: float = 100.0
    stale_factor: float = 8.0
    model_error_diagnostic: bool = False
    diagnostic_halfwidth: float = 0.01
    step_tiny: float = 1e-14

    def __post_init__(self):
        if not 0 < self.eta1 < self.eta2 < 1:
            raise ValueError("need 0 < eta1 < eta2 < 1")
        if not 0 < self.gamma_dec < 1 < self.gamma_inc:
            raise ValueError("need 0 < gamma_dec < 1 < gamma_inc")
        if self.initial_radius is not None and self.initial_radius <= self.min_radius:
            raise ValueError("initial radius must exceed the minimum radius")


@dataclass
class TraceRow:
    iteration: int
    evaluations: int
    radius: float
    f_best: float
    accepted: bool
    model_error: float = float("nan")


@dataclass
class RunResult:
    x_best: np.ndarray
    f_best: float
    evaluations: int
    iterations: int
    reason: TerminationReason
    trace: list[TraceRow] = field(default_factory=list)


@dataclass
class IterationState:
    iteration: int
    ts: TrainingSet
    radius: float
    h_prev: np.ndarray
    initial_radius: float


class Evaluator:
    """Bills evaluations and tracks the best recorded value."""

    def __init__(self, spec: ObjectiveSpec, budget: EvaluationBudget):
        self.spec = spec
        self.budget = budget
        self.best_value = math.inf
        self.best_point: np.ndarray | None = None

    def __call__(self, x: np.ndarray):
        rec = evaluate(self.spec, x, self.budget)
        if rec.value < self.best_value:
            self.best_value = rec.value
            self.best_point = rec.point
        return rec

    @property
    def used(self) -> int:
        return self.budget.evaluations_used


def _unreachable_columns(n: int, directions, pairs) -> int:
    """Count basis columns no derivative row can touch: linear columns of
    unknown directions and pair columns with both indices unknown (minus
    any pair supplied directly by second-order rows)."""
    known = set(directions)
    count = n - len(known)
    for i in range(1, n + 1):
        for j in range(i, n + 1):
            if i not in known and j not in known and (i, j) not in set(pairs):
                count += 1
    return count


def default_point_count(
    kind: ModelKind,
    n: int,
    directions=(),
    pairs=(),
    second_order: bool = False,
) -> int:
    """Training-set size used when the configuration does not override it.

    Full interpolation needs the complete quadratic count and the
    Frobenius kinds default to 2n+1.  Hermite least squares starts from
    max(2n+1-k_d, ceil(q1/(rows per point))) and is floored at one more
    than the number of basis columns the derivative rows cannot reach,
    since value rows alone must determine those; below that floor the
    regression is rank deficient for every point geometry.
    """
    q1 = (n + 1) * (n + 2) // 2
    if kind is ModelKind.FULL_INTERP:
        return q1
    if kind in FROBENIUS_KINDS:
        return 2 * n + 1
    k_d = len(directions)
    pairs = tuple(pairs) if second_order else ()
    if k_d == 0 and not pairs:
        return q1  # no derivative rows: the driver runs full interpolation
    per_point = 1 + k_d + len(pairs)
    p1 = max(2 * n + 1 - k_d, math.ceil(q1 / per_point), 2)
    structural = 1 + _unreachable_columns(n, directions, pairs)
    if structural >= p1:
        # at the bare structural minimum every point replacement re-breaks
        # the rank; a small margin keeps the value-row block overdetermined
        p1 = structural + math.ceil((n - k_d) / 2)
    return min(p1, q1)


def resolved_point_count(spec: ObjectiveSpec, config: SolverConfig) -> int:
    avail = spec.availability
    return config.point_count or default_point_count(
        config.kind,
        spec.dimension,
        avail.directions,
        avail.pairs,
        config.second_order,
    )


def ratio_test(f_old: float, f_new: float, m_old: float, m_new: float) -> float:
    """Actual decrease over model-predicted decrease."""
    decrease = m_old - m_new
    if decrease <= 1e-15 * max(1.0, abs(f_old)):
        raise DegenerateModelDecrease(
            f"model decrease {decrease:.3e} is below resolution"
        )
    return (f_old - f_new) / decrease


def _is_distinct(point: np.ndarray, ts: TrainingSet) -> bool:
    return all(not points_equal(point, rec.point) for rec in ts.records)


def _coordinate_point(x0, delta, axis, sign, bounds, existing):
    lo, hi = bounds.lower[axis], bounds.upper[axis]
    base = x0[axis]
    # a blocked step flips to a double step on the other side, then the
    # chain falls back to shorter steps until one fits the box
    offsets = [
        sign * delta,
        -sign * 2.0 * delta,
        sign * 0.5 * delta,
        -sign * delta,
        sign * 0.25 * delta,
        -sign * 0.5 * delta,
        (hi - base) * 0.5 if sign > 0 else (lo - base) * 0.5,
        (lo - base) * 0.5 if sign > 0 else (hi - base) * 0.5,
    ]
    for off in offsets:
        value = base + off
        if not lo <= value <= hi or not np.isfinite(value):
            continue
        cand = x0.copy()
        cand[axis] = value
        if all(not points_equal(cand, q) for q in existing):
            return cand
    raise ValueError(f"cannot place a distinct initial point along axis {axis}")


def _diagonal_point(x0, delta, i, j, bounds, existing):
    off = np.zeros(x0.size)
    off[i] = off[j] = delta / math.sqrt(2.0)
    for direction in (off, -off, off * 0.5, -off * 0.5):
        cand = bounds.clip(x0 + direction)
        if all(not points_equal(cand, q) for q in existing):
            return cand
    raise ValueError("cannot place a distinct diagonal initial point")


def initial_points(
    x0: np.ndarray,
    delta: float,
    bounds,
    p1: int,
    known_axes=(),
) -> list[np.ndarray]:
    """Coordinate-cross pattern: x0, positive steps, negative steps, then
    scaled diagonal points, truncated to p1 points.

    Diagonal pairs between unknown-derivative axes come first: those are
    the cross terms no derivative row informs, so they are the ones worth
    spending value rows on.
    """
    n = x0.size
    known = set(known_axes)
    pts = [x0.copy()]
    for axis in range(n):
        if len(pts) >= p1:
            break
        pts.append(_coordinate_point(x0, delta, axis, +1, bounds, pts))
    # when negatives are truncated, unknown axes go first: value rows are
    # the only source of curvature information along those
    for axis in sorted(range(n), key=lambda a: (a in known, a)):
        if len(pts) >= p1:
            break
        pts.append(_coordinate_point(x0, delta, axis, -1, bounds, pts))
    pairs = [(i, j) for i in range(n) for j in range(i + 1, n)]
    pairs.sort(key=lambda ij: (len(known & set(ij)), ij))
    for i, j in pairs:
        if len(pts) >= p1:
            break
        pts.append(_diagonal_point(x0, delta, i, j, bounds, pts))
    if len(pts) < p1:
        raise ValueError(f"cannot build {p1} initial points in dimension {n}")
    return pts[:p1]


def initialize(
    spec: ObjectiveSpec,
    x0: np.ndarray,
    config: SolverConfig,
    evaluator: Evaluator,
) -> IterationState:
    x0 = np.asarray(x0, dtype=float)
    if not spec.bounds.contains(x0):
        raise OutOfBounds("starting point violates bounds")
    p1 = resolved_point_count(spec, config)
    delta0 = config.initial_radius
    if delta0 is None:
        delta0 = 0.1 * max(1.0, float(np.max(np.abs(x0))))
    known_axes = tuple(d - 1 for d in spec.availability.directions)
    records = [
        evaluator(p)
        for p in initial_points(x0, delta0, spec.bounds, p1, known_axes)
    ]
    n = spec.dimension
    return IterationState(
        iteration=0,
        ts=TrainingSet.from_records(records),
        radius=delta0,
        h_prev=np.zeros((n, n)),
        initial_radius=delta0,
    )


def _assemble(ts: TrainingSet, spec: ObjectiveSpec, config: SolverConfig, state: IterationState):
    avail = spec.availability
    kind = config.kind
    second = config.second_order and bool(avail.pairs)
    if kind is ModelKind.HERMITE_LS and avail.k_d == 0 and not second:
        kind = ModelKind.FULL_INTERP
    if kind is ModelKind.HERMITE_BOBYQA and avail.k_d == 0:
        kind = ModelKind.BOBYQA
    if kind is ModelKind.FULL_INTERP:
        return assemble_full_interp(ts)
    if kind is ModelKind.BOBYQA:
        return assemble_min_frob(ts, state.h_prev)
    if kind is ModelKind.HERMITE_LS:
        return assemble_hermite_ls(ts, avail, include_second_order=second)
    return assemble_hermite_bobyqa(ts, avail, state.h_prev)


def _farthest_index(ts: TrainingSet) -> int:
    d = np.linalg.norm(ts.points - ts.incumbent_record.point, axis=1)
    return int(np.argmax(d))


def _repair_candidates(n: int, direction: np.ndarray):
    """Repair directions: the least-covered direction of the point cloud
    first, then diagonal pair directions, which fill the cross-term
    columns a coordinate cross leaves empty."""
    yield direction
    yield -direction
    root2 = math.sqrt(2.0)
    for i in range(n):
        for j in range(i + 1, n):
            off = np.zeros(n)
            off[i] = off[j] = 1.0 / root2
            yield off
            yield -off
            flipped = off.copy()
            flipped[j] = -flipped[j]
            yield flipped
            yield -flipped


def _null_basis(matrix: np.ndarray) -> np.ndarray:
    _, s, Vt = np.linalg.svd(matrix, full_matrices=False)
    null = Vt[s <= max(1e-10 * s[0], np.finfo(float).tiny)]
    return null if null.size else Vt[-1:]


def _null_space_score(sys, null: np.ndarray, cand: np.ndarray, delta: float) -> float:
    """How strongly the rows a candidate point would contribute overlap
    the null space of the (scaled) system; larger lifts the rank more."""
    z = cand - sys.shift
    rows = [sys.basis.value_row(z) * sys.col_scale]
    directions = sorted({tag[2] for tag in sys.row_tags if tag[0] == "grad"})
    for d in directions:
        rows.append(sys.basis.derivative_row(z, d - 1) * sys.col_scale * delta)
    score = 0.0
    for row in rows:
        norm = float(np.linalg.norm(row))
        if norm > 0:
            score += float(np.linalg.norm(null @ (row / norm)) ** 2)
    return score


def _redundancy_order(sys, point_count: int, incumbent_index: int):
    """Training indices sorted from most to least redundant, judged by the
    total leverage of each point's rows in the non-null row space."""
    U, s, _ = np.linalg.svd(sys.matrix, full_matrices=False)
    keep = s > 1e-10 * s[0]
    leverage_rows = np.sum(U[:, keep] ** 2, axis=1)
    totals = np.zeros(point_count)
    for r, tag in enumerate(sys.row_tags):
        if tag[0] == "mfn":
            continue
        totals[tag[1]] += leverage_rows[r]
    order = np.argsort(totals, kind="stable")
    return [int(i) for i in order if i != incumbent_index]


def _repair_rank_deficiency(ts, spec, evaluator, delta, sys_scaled, skip=(), stale_factor=8.0):
    """Swap one point for a fresh geometry point near the incumbent.

    A rank-deficient system has no Lagrange polynomials, so the repair
    point comes from candidate directions instead of a polynomial
    extremizer; the candidate whose rows best cover the system's null
    space wins.  A stale set (points far outside the trust ball, which
    wrecks the scaled system's conditioning) loses its farthest point;
    otherwise the most redundant point goes, keeping the information the
    set does have.  Returns the updated set and the replaced index, or
    (ts, None) when no distinct feasible candidate exists.
    """
    x_opt = ts.incumbent_record.point
    D = ts.points - x_opt
    _, _, Vt = np.linalg.svd(D, full_matrices=True)
    dist = np.linalg.norm(D, axis=1)
    if float(np.max(dist)) > stale_factor * delta:
        order = [int(i) for i in np.argsort(-dist) if i != ts.incumbent_index]
    else:
        order = _redundancy_order(sys_scaled, ts.size, ts.incumbent_index)
    target = next((i for i in order if i not in skip), None)
    if target is None:
        return ts, None
    points = ts.points
    point_scale = np.maximum(1.0, np.max(np.abs(points), axis=1))

    def distinct(cand):
        tol = 1e-14 * np.maximum(point_scale, np.max(np.abs(cand)))
        return bool(np.all(np.max(np.abs(points - cand), axis=1) >= tol))

    candidates = []
    for scale in (1.0, 0.5, 0.25):
        for direction in _repair_candidates(ts.dimension, Vt[-1]):
            cand = spec.bounds.clip(x_opt + scale * delta * direction)
            if distinct(cand):
                candidates.append(cand)
        if candidates:
            break
    if not candidates:
        return ts, None
    if sys_scaled.kind in (ModelKind.FULL_INTERP, ModelKind.HERMITE_LS):
        null = _null_basis(sys_scaled.matrix)
        scores = [_null_space_score(sys_scaled, null, c, delta) for c in candidates]
        pick = candidates[int(np.argmax(scores))]
    else:
        pick = candidates[0]
    return ts.replace(target, evaluator(pick)), target


def model_error_diagnostic(
    model: QuadraticModel,
    reference: TaylorReference,
    center: np.ndarray,
    halfwidth: float = 0.01,
    per_axis: int = 11,
) -> float:
    """Squared L2 distance between the model and the second-order Taylor
    expansion of the reference function, over the box center +- halfwidth,
    approximated with a midpoint tensor grid."""
    center = np.asarray(center, dtype=float)
    n = center.size
    if per_axis**n > 2_000_000:
        raise ValueError("diagnostic grid too large for this dimension")
    h = 2.0 * halfwidth / per_axis
    axes = [center[i] - halfwidth + h * (np.arange(per_axis) + 0.5) for i in range(n)]
    mesh = np.meshgrid(*axes, indexing="ij")
    pts = np.stack([m.ravel() for m in mesh], axis=1)
    f0 = reference.value(center)
    g0 = np.asarray(reference.gradient(center), dtype=float)
    H0 = np.asarray(reference.hessian(center), dtype=float)
    D = pts - center
    taylor = f0 + D @ g0 + 0.5 * np.einsum("ij,jk,ik->i", D, H0, D)
    diff = model.value_at(pts) - taylor
    return float(np.sum(diff**2) * h**n)


def _improve_geometry_if_poor(state, spec, config, evaluator, delta):
    """One geometry-improvement evaluation when the set is badly poised on
    the current ball or has gone stale (points far outside it).

    Works from the current training set, which may already contain the
    just-accepted trial point.
    """
    try:
        x_opt = state.ts.incumbent_record.point
        sys_now = apply_scaling(_assemble(state.ts, spec, config, state), delta)
        family = lagrange_family(sys_now)
        far = _farthest_index(state.ts)
        far_dist = float(np.linalg.norm(state.ts.records[far].point - x_opt))
        region = Region(x_opt, max(state.radius, config.min_radius), spec.bounds)
        stale = far_dist > config.stale_factor * delta
        if stale or estimate_lambda(family, region).lam > config.lambda_threshold:
            proposal = propose_geometry_point(family, far, region)
            if _is_distinct(proposal, state.ts):
                state.ts = state.ts.replace(far, evaluator(proposal))
    except RankDeficient:
        pass


def step_iteration(
    state: IterationState,
    spec: ObjectiveSpec,
    config: SolverConfig,
    evaluator: Evaluator,
    trace: list[TraceRow],
) -> TerminationReason | None:
    """Advance one trust-region iteration; returns a termination reason
    when the run should stop, else None."""
    state.iteration += 1
    delta = state.radius

    sys_scaled = None
    model = None
    repaired: set[int] = set()
    max_repairs = spec.dimension + 2
    for attempt in range(max_repairs + 1):
        sys_scaled = apply_scaling(_assemble(state.ts, spec, config, state), delta)
        solvable = sys_scaled
        if config.weighting and solvable.kind in HERMITE_KINDS:
            solvable = apply_weighting(
                solvable, WeightScheme(True, config.weight_scale), state.ts
            )
        try:
            model = solve_system(solvable)
            break
        except RankDeficient:
            if attempt == max_repairs:
                break
            state.ts, replaced = _repair_rank_deficiency(
                state.ts,
                spec,
                evaluator,
                delta,
                sys_scaled,
                skip=repaired,
                stale_factor=config.stale_factor,
            )
            if replaced is None:
                break
            repaired.add(replaced)
    if model is None:
        # geometry repair failed to restore rank; shrink and try again
        state.radius = config.gamma_dec * delta
        if state.radius < config.min_radius:
            return TerminationReason.RADIUS_BELOW_MIN
        return None

    if config.kind in FROBENIUS_KINDS:
        state.h_prev = model.H

    diag_value = float("nan")
    x_opt, f_opt = incumbent(state.ts)
    if config.model_error_diagnostic and spec.taylor_reference is not None:
        diag_value = model_error_diagnostic(
            model, spec.taylor_reference, x_opt, config.diagnostic_halfwidth
        )

    step = solve_subproblem(model, x_opt, delta, spec.bounds)
    if float(np.linalg.norm(step)) < config.step_tiny:
        return TerminationReason.STEP_SIZE_TINY

    m_old = model.value(x_opt)
    m_new = model.value(x_opt + step)
    if m_old - m_new <= 1e-15 * max(1.0, abs(f_opt)):
        # degenerate predicted decrease: reject without spending the budget
        state.radius = config.gamma_dec * delta
        if state.radius < config.min_radius:
            return TerminationReason.RADIUS_BELOW_MIN
        return None

    trial = spec.bounds.clip(x_opt + step)
    rec = evaluator(trial)
    r = ratio_test(f_opt, rec.value, m_old, m_new)
    accepted = r >= config.eta1

    step_norm = float(np.linalg.norm(step))
    if accepted:
        try:
            outgoing = select_outgoing(lagrange_family(sys_scaled), trial)
        except RankDeficient:
            outgoing = _farthest_index(state.ts)
        try:
            state.ts = state.ts.replace(outgoing, rec)
        except DuplicatePoint:
            pass
        # grow only when the step actually used the radius, otherwise the
        # radius runs away on tiny near-convergence steps
        if r >= config.eta2 and step_norm >= 0.5 * delta:
            state.radius = min(
                config.gamma_inc * delta,
                config.max_radius_factor * state.initial_radius,
            )
        # a crawl of tiny accepted steps never rejects, so it would never
        # reach the geometry check below; bad geometry sustains exactly
        # that pattern by freezing the model transverse to the crawl
        if step_norm < 0.1 * delta:
            _improve_geometry_if_poor(state, spec, config, evaluator, delta)
    else:
        state.radius = config.gamma_dec * delta
        # a trial that changed nothing means the function is flat at this
        # resolution; fresh geometry points would all repeat that value
        if rec.value != f_opt:
            _improve_geometry_if_poor(state, spec, config, evaluator, delta)

    trace.append(
        TraceRow(
            iteration=state.iteration,
            evaluations=evaluator.used,
            radius=state.radius,
            f_best=evaluator.best_value,
            accepted=accepted,
            model_error=diag_value,
        )
    )
    if state.radius < config.min_radius:
        return TerminationReason.RADIUS_BELOW_MIN
    return None


def run(spec: ObjectiveSpec, x0: np.ndarray, config: SolverConfig | None = None) -> RunResult:
    """Minimize the objective from x0 under the given configuration."""
    config = config or SolverConfig()
    p1 = resolved_point_count(spec, config)
    if config.max_evaluations < p1:
        raise ValueError(
            f"budget {config.max_evaluations} cannot cover the {p1} initialization points"
        )
    budget = EvaluationBudget(config.max_evaluations)
    evaluator = Evaluator(spec, budget)
    trace: list[TraceRow] = []
    reason = None
    state = None
    try:
        state = initialize(spec, x0, config, evaluator)
    except BudgetExhausted:
        reason = TerminationReason.BUDGET_EXHAUSTED
    if state is not None:
        while reason is None:
            try:
                reason = step_iteration(state, spec, config, evaluator, trace)
            except BudgetExhausted:
                reason = TerminationReason.BUDGET_EXHAUSTED
    return RunResult(
        x_best=evaluator.best_point,
        f_best=evaluator.best_value,
        evaluations=evaluator.used,
        iterations=state.iteration if state is not None else 0,
        reason=reason,
        trace=trace,
    )
