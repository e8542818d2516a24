# Lagrange polynomials measure training-set quality: their maximum over a
# region is the poisedness constant.  A nearly collinear set has a huge
# constant; replacing its worst point by the extremizer of that point's
# polynomial repairs the geometry.
import numpy as np

from hermiteopt import (
    Bounds,
    EvaluationRecord,
    Region,
    TrainingSet,
    assemble_full_interp,
    estimate_lambda,
    lagrange_family,
    propose_geometry_point,
    select_outgoing,
)


def f(x):
    return float(x @ x)


def make_set(points):
    return TrainingSet.from_records(
        [EvaluationRecord(point=np.asarray(p, float), value=f(np.asarray(p))) for p in points]
    )


good = make_set([[0, 0], [1, 0], [0, 1], [1, 1], [0.5, -0.4], [-0.6, 0.5]])
# squash the same set towards the diagonal: almost collinear
bad = make_set([[0, 0], [1, 1.01], [0.5, 0.49], [0.25, 0.26], [0.75, 0.74], [-0.5, -0.51]])

region = Region(np.zeros(2), 1.2, Bounds(np.full(2, -2.0), np.full(2, 2.0)))
for label, ts in (("well spread", good), ("nearly collinear", bad)):
    family = lagrange_family(assemble_full_interp(ts))
    lam = estimate_lambda(family, region).lam
    print(f"{label:17s} poisedness constant ~ {lam:10.1f}")

family = lagrange_family(assemble_full_interp(bad))
worst = max(
    (i for i in range(bad.size) if i != family.incumbent_index),
    key=lambda i: abs(family.point_polys[i].value(np.array([0.3, -0.3]))),
)
proposal = propose_geometry_point(family, worst, region)
repaired = bad.replace(worst, EvaluationRecord(point=proposal, value=f(proposal)))
lam2 = estimate_lambda(lagrange_family(assemble_full_interp(repaired)), region).lam
print(f"\nreplace point {worst} by {np.round(proposal, 3)} -> constant ~ {lam2:.1f}")

# the outgoing-point rule: a candidate evicts the point whose polynomial
# is largest there, so re-inserting an existing point evicts itself
print("\neviction choice for a candidate at an existing point:",
      select_outgoing(family, bad.points[2]))
