# The main character of the Pauli model with Haar U: its moments follow 1, 2, 5, 14, 42.
from qgmodels import weyl_model, character_moment
from qgmodels.integration import catalan
from qgmodels.linalg import haar_unitaries, stream
import numpy as np

model = weyl_model("Z2", "haar", samples=100_000, seed=7)
for p in range(1, 6):
    m = character_moment(model, p, "streaming")
    print(f"p={p}  moment {m.value:8.4f} +- {m.se:.4f}   Catalan {catalan(p)}")

# compare with |Tr U|^2 for U Haar in U_2 directly
us = haar_unitaries(2, 100_000, stream(99))
t = np.abs(np.trace(us, axis1=1, axis2=2)) ** 2
print("E|Tr U|^2p:", [round(float((t**p).mean()), 3) for p in range(1, 6)])
