"""Quadratic monomial basis and its derivative rows.

The basis is ordered as: constant, the n linear monomials, then the
quadratic block in lexicographic pair order with a factor 1/2 on squares,

    {1, x_1, ..., x_n, x_1^2/2, x_1 x_2, ..., x_{n-1} x_n, x_n^2/2}.

With this convention a quadratic ``c + g.x + x.H.x/2`` has coefficient
``g_l`` on the linear monomial ``x_l`` and coefficient ``H_ij`` on the
quadratic monomial for the pair ``(i, j)``, so packing and unpacking the
Hessian is index bookkeeping only.

Axis arguments in this module are 0-based; the 1-based direction labels of
the problem layer are converted by the assembly code.
"""

from __future__ import annotations

import numpy as np


class MonomialBasis:
    def __init__(self, dimension: int):
        if dimension < 1:
            raise ValueError("dimension must be positive")
        self.n = int(dimension)
        self.q1 = (self.n + 1) * (self.n + 2) // 2
        # upper-triangle pair order (0,0), (0,1), ..., (0,n-1), (1,1), ...
        self._ii, self._jj = np.triu_indices(self.n)
        self._diag = self._ii == self._jj

    @property
    def size(self) -> int:
        """Number of basis functions including the constant."""
        return self.q1

    @property
    def n_quadratic(self) -> int:
        return self.q1 - 1 - self.n

    def pair_index(self, i: int, j: int) -> int:
        """Column offset of pair ``(i, j)`` within the quadratic block."""
        if not 0 <= i <= j < self.n:
            raise ValueError("pair must satisfy 0 <= i <= j < n")
        return i * self.n - i * (i - 1) // 2 + (j - i)

    def value_row(self, z: np.ndarray) -> np.ndarray:
        """Basis values at a shifted point, constant excluded."""
        z = np.asarray(z, dtype=float)
        quad = z[self._ii] * z[self._jj]
        quad[self._diag] *= 0.5
        return np.concatenate([z, quad])

    def derivative_row(self, z: np.ndarray, axis: int) -> np.ndarray:
        """First partial derivative of every basis function along ``axis``."""
        z = np.asarray(z, dtype=float)
        lin = np.zeros(self.n)
        lin[axis] = 1.0
        quad = (self._ii == axis) * z[self._jj] + (self._jj == axis) * z[self._ii]
        # the 1/2 on squares turns the doubled diagonal term back into z_axis
        quad[self._diag] *= 0.5
        return np.concatenate([lin, quad])

    def second_derivative_row(self, pair: tuple[int, int]) -> np.ndarray:
        """Second derivative row for ``pair``; constant in the point.

        For this basis the quadratic block of second derivatives is the
        identity: the row is zero except for a single 1 on the quadratic
        column belonging to ``pair``.
        """
        i, j = pair
        row = np.zeros(self.q1 - 1)
        row[self.n + self.pair_index(i, j)] = 1.0
        return row

    def pack_hessian(self, H: np.ndarray) -> np.ndarray:
        """Hessian to quadratic-block coefficients (upper triangle by rows)."""
        return np.asarray(H, dtype=float)[self._ii, self._jj]

    def unpack_hessian(self, coeffs: np.ndarray) -> np.ndarray:
        """Quadratic-block coefficients back to a symmetric Hessian."""
        H = np.zeros((self.n, self.n))
        H[self._ii, self._jj] = coeffs
        H[self._jj, self._ii] = coeffs
        return H
