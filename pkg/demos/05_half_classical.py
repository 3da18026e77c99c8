# Half-classical model over the 8-element group generated by diag(i, -i) and the flip.
import numpy as np

from qgmodels import dihedral_example, half_classical_model, transfer_matrix, halfclassical_transfer
from qgmodels.integration import idempotence_defect

H = dihedral_example()
print(len(H), "elements")
model = half_classical_model(H)

for p in range(1, 5):
    T = transfer_matrix(model, p)
    fast = halfclassical_transfer(model, p)
    D, _ = idempotence_defect(T)
    print(f"p={p}  max|T| {np.abs(T.values).max():.3f}  max|T^2-T| {np.abs(D).max():.1e}"
          f"  fast path gap {np.abs(fast.values - T.values).max():.1e}")
