# Weyl matrix models: build the Pauli case, check it is magic, then test T_p^2 = T_p.
import numpy as np

from qgmodels import weyl_matrix, weyl_model, stationarity_defect, transfer_matrix
from qgmodels.algebra import FiniteAbelianGroup
from qgmodels.magic import validate_magic, is_flat

H = FiniteAbelianGroup.parse("Z2")
for ia in [(0, 0), (1, 0), (1, 1), (0, 1)]:
    print("W", ia, "\n", weyl_matrix(H, *ia).real)

# exact integration over the 4 Weyl matrices modulo phase
model = weyl_model(H)
print(len(model.backend.points), "exact points, N =", model.N)

u = model.evaluate(model.backend.points[1])
r = validate_magic(u)
print("magic residuals", r.projection_residual, r.row_residual, r.column_residual, "flat:", is_flat(u))

T2 = transfer_matrix(model, 2)
print("T_2 is", T2.values.shape, "rank", np.linalg.matrix_rank(T2.values))

rep = stationarity_defect(model, 4)
for d in rep.depths:
    print(f"p={d.p}  max|T^2 - T| = {d.defect:.2e}")
print(rep.verdict)

# same thing with Haar-random U, now a Monte Carlo estimate with error bars
mc = weyl_model(H, "haar", samples=50_000, seed=1)
rep = stationarity_defect(mc, 2)
for d in rep.depths:
    print(f"p={d.p}  defect {d.defect:.2e}  max SE {d.se:.2e}  worst ratio {d.ratio:.2f}")
print(rep.verdict)
