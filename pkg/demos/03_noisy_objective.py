# Multiplicative noise breaks interpolation but not regression: with a
# 1% relative perturbation on every value and derivative, plain
# interpolation stalls far from the optimum while the overdetermined
# Hermite fit keeps converging.
import hermiteopt as ho
from hermiteopt.models import ModelKind

problem = ho.get_problem("rosenbrock2")

print(f"{'seed':>4s} {'hermite l.s. true f':>20s} {'bobyqa true f':>15s}")
for seed in range(5):
    noisy_hermite = ho.add_noise(ho.mask_availability(problem, {2}), 1e-2, seed)
    hermite = ho.run(
        noisy_hermite,
        problem.x_start,
        ho.SolverConfig(kind=ModelKind.HERMITE_LS, max_evaluations=80),
    )
    noisy_plain = ho.add_noise(ho.mask_availability(problem, set()), 1e-2, seed)
    plain = ho.run(
        noisy_plain,
        problem.x_start,
        ho.SolverConfig(kind=ModelKind.BOBYQA, max_evaluations=500),
    )
    print(
        f"{seed:4d} {problem.value(hermite.x_best):20.2e} "
        f"{problem.value(plain.x_best):15.2e}"
    )
print("\n(true f means the noise-free objective at the returned point)")
