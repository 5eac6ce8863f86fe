"""Complex-float views of cubic forms: coefficient vectors and symmetric tensors."""

from __future__ import annotations

import numpy as np

from .algebra import MONOMIAL_INDEX, CubicForm


def _index_tables():
    idx = np.zeros((4, 4, 4), dtype=int)
    for i in range(4):
        for j in range(4):
            for k in range(4):
                e = [0, 0, 0, 0]
                for a in (i, j, k):
                    e[a] += 1
                idx[i, j, k] = MONOMIAL_INDEX[tuple(e)]
    return idx, np.bincount(idx.ravel(), minlength=20)


TENSOR_INDEX, MULTIPLICITY = _index_tables()


def coeff_vector(f) -> np.ndarray:
    if isinstance(f, CubicForm):
        return np.array([complex(c) for c in f.coeffs])
    return np.asarray(f, dtype=complex)


def cubic_tensor(f) -> np.ndarray:
    """Symmetric F with f(x) = sum F_ijk x_i x_j x_k."""
    c = coeff_vector(f)
    return c[TENSOR_INDEX] / MULTIPLICITY[TENSOR_INDEX]


def tensor_coeffs(F: np.ndarray) -> np.ndarray:
    flat = TENSOR_INDEX.ravel()
    return (np.bincount(flat, weights=F.real.ravel(), minlength=20)
            + 1j * np.bincount(flat, weights=F.imag.ravel(), minlength=20))


def numeric_act(f, T) -> np.ndarray:
    """Coefficients of x -> f(T x) for a complex matrix T."""
    F = cubic_tensor(f)
    T = np.asarray(T, dtype=complex)
    return tensor_coeffs(np.einsum("abc,ai,bj,ck->ijk", F, T, T, T, optimize=True))


def product_coeffs(l1, l2, l3) -> np.ndarray:
    """Coefficient vector of the product of three linear forms."""
    return tensor_coeffs(np.einsum("i,j,k->ijk", *(np.asarray(l, dtype=complex)
                                                   for l in (l1, l2, l3))))


def relative_residual(approx, target) -> float:
    target = np.asarray(target, dtype=complex)
    return float(np.max(np.abs(np.asarray(approx) - target)) / np.max(np.abs(target)))
