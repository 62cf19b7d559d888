import numpy as np


def random_state(n, rng, rank=None):
    d = 1 << n
    k = d if rank is None else rank
    a = rng.normal(size=(d, k)) + 1j * rng.normal(size=(d, k))
    rho = a @ a.conj().T
    return rho / np.trace(rho)


# one status line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES: dict[int, str] = {}
