# Latin squares and the flat model they give with a fixed orthonormal basis.
from qgmodels.magic import latin_count, latin_enumerate, latin_flat_model, validate_magic, is_flat
from qgmodels import latin_fiber_model, classical_permutation_model, stationarity_defect, character_moment
from qgmodels.linalg import haar_unitary, stream

for N in range(1, 6):
    print(N, "half-normalized:", latin_count(N, "half"), " all:", latin_count(N, "all"))

squares = latin_enumerate(4)
print("first square:", squares[0].entries)

# any orthonormal basis works; take the columns of a random unitary
V = haar_unitary(4, stream(3))
u = latin_flat_model(V.T, squares[5])
print("magic:", validate_magic(u).passed, " flat:", is_flat(u))

# uniform over the 24 half-normalized squares, standard basis
model = latin_fiber_model(4)
print(stationarity_defect(model, 4).verdict)

classical = classical_permutation_model(4)
for p in range(1, 5):
    print(p, "fiber", round(character_moment(model, p).value, 10), " S4", round(character_moment(classical, p).value, 10))
