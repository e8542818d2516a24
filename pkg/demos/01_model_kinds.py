# Build the four quadratic-model kinds on one training set and compare
# the recovered gradients and Hessians against the truth.
#
# The function is a known quadratic, so full interpolation recovers it
# exactly, the min-Frobenius update recovers it once the previous Hessian
# is right, and the two Hermite kinds recover it from fewer points by
# spending derivative rows.
import numpy as np

from hermiteopt import (
    DerivativeAvailability,
    EvaluationRecord,
    TrainingSet,
    apply_scaling,
    assemble_full_interp,
    assemble_hermite_bobyqa,
    assemble_hermite_ls,
    assemble_min_frob,
    solve_system,
)

rng = np.random.default_rng(3)
n = 2
g_true = np.array([1.0, -2.0])
H_true = np.array([[4.0, 1.0], [1.0, 3.0]])


def f(x):
    return float(g_true @ x + 0.5 * x @ H_true @ x)


def grad(x):
    return g_true + H_true @ x


def training_set(count, with_gradients=False):
    points = rng.uniform(-1, 1, size=(count, n))
    records = []
    for p in points:
        gradient = {i + 1: float(grad(p)[i]) for i in range(n)} if with_gradients else {}
        records.append(EvaluationRecord(point=p, value=f(p), gradient=gradient))
    return TrainingSet.from_records(records)


def show(label, system):
    model = solve_system(apply_scaling(system, 0.5))
    x_opt = system.shift
    print(f"{label:16s} rows x cols = {system.rows}x{system.cols}")
    print(f"{'':16s} g error {np.linalg.norm(model.g - grad(x_opt)):.2e}, "
          f"H error {np.linalg.norm(model.H - H_true):.2e}")


avail = DerivativeAvailability(first_order=frozenset({1, 2}))

show("full interp", assemble_full_interp(training_set(6)))
show("min-Frobenius", assemble_min_frob(training_set(5), H_true))
show("hermite l.s.", assemble_hermite_ls(training_set(4, True), avail))
show("hermite bobyqa", assemble_hermite_bobyqa(training_set(5, True), avail, H_true))
