# Cesaro means on a group dual where T is not idempotent.
import numpy as np

from qgmodels import abelian_dual_model, transfer_matrix, cesaro, stationarity_defect
from qgmodels.integration import geometric_cesaro_bound

# one character of Z3 evaluated at the generator gives the scalar omega
model = abelian_dual_model("Z3", [1], characters=[1])
T = transfer_matrix(model, 1)
print("T =", T.values[0, 0])
print(stationarity_defect(model, 1).verdict)

omega = T.values[0, 0]
hist = cesaro(T, 12).history
for k, h in enumerate(hist, 1):
    print(f"k={k:2d}  |mean| = {abs(h):.3e}   bound {geometric_cesaro_bound(omega, k):.3f}")

# averaging over every character instead recovers an idempotent T
full = abelian_dual_model("Z3", [1])
print("all characters:", np.round(transfer_matrix(full, "1").values, 12), stationarity_defect(full, 3).passed)
