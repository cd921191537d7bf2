"""Symmetric tridiagonal operators and a batched Thomas solver for ADI sweeps."""
import numpy as np


def tridiagonal_apply(diagonal, off_diagonal, psi):
    """(D + O) psi along axis 0; ``diagonal`` broadcasts against ``psi``, ``off_diagonal``
    is a scalar or has one entry fewer than axis 0."""
    result = (diagonal * psi).astype(np.result_type(diagonal, off_diagonal, psi), copy=False)
    if np.ndim(off_diagonal) == 0:
        result[:-1] += off_diagonal * psi[1:]
        result[1:] += off_diagonal * psi[:-1]
    else:
        off = np.asarray(off_diagonal).reshape((-1,) + (1,) * (psi.ndim - 1))
        result[:-1] += off * psi[1:]
        result[1:] += off * psi[:-1]
    return result


class BatchedThomas:
    """Factorized solves of (D + s L + s U) x = r for many independent lines at once.

    ``diagonal`` has shape (n, batch): column b is the diagonal of line b. The
    off-diagonal ``s`` is one scalar shared by every line. Elimination runs along
    axis 0 and is vectorized across the batch axis.
    """

    def __init__(self, diagonal: np.ndarray, off_diagonal):
        n = diagonal.shape[0]
        self.off = off_diagonal
        self.inverse_pivots = np.empty_like(diagonal)
        self.upper = np.empty_like(diagonal)

        pivot = diagonal[0]
        self.inverse_pivots[0] = 1.0 / pivot
        self.upper[0] = off_diagonal * self.inverse_pivots[0]
        for i in range(1, n):
            pivot = diagonal[i] - off_diagonal * self.upper[i - 1]
            self.inverse_pivots[i] = 1.0 / pivot
            self.upper[i] = off_diagonal * self.inverse_pivots[i]

        if not np.all(np.isfinite(self.inverse_pivots)):
            raise np.linalg.LinAlgError("Zero pivot in tridiagonal elimination")

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        n = rhs.shape[0]
        s = self.off
        y = np.empty(rhs.shape, dtype=np.result_type(rhs, self.inverse_pivots))
        y[0] = rhs[0] * self.inverse_pivots[0]
        for i in range(1, n):
            y[i] = (rhs[i] - s * y[i - 1]) * self.inverse_pivots[i]
        for i in range(n - 2, -1, -1):
            y[i] -= self.upper[i] * y[i + 1]
        return y
