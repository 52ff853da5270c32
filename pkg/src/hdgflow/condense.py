"""Static condensation of element unknowns and the global trace solve.

For each element the linear system

    [A_ZZ  A_ZH] [Z]   [f_Z]
    [A_HZ  A_HH] [H] = [f_H]

is reduced to ``K_e H = F_e`` with ``K_e = A_HH - A_HZ A_ZZ^-1 A_ZH`` and
``F_e = f_H - A_HZ A_ZZ^-1 f_Z``.  Element contributions are summed into a
sparse matrix on the trace dofs, which is factorised directly; element
unknowns are then recovered from ``Z = A_ZZ^-1 (f_Z - A_ZH H)``.
"""

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import SingularGlobalMatrix, SingularLocalMatrix


def _local_solve(A, B):
    try:
        X = np.linalg.solve(A, B)
    except np.linalg.LinAlgError as exc:
        raise SingularLocalMatrix(str(exc)) from None
    if not np.all(np.isfinite(X)):
        raise SingularLocalMatrix("non-finite local solution")
    return X


def condense(A_ZZ, A_ZH, A_HZ, A_HH, f_Z, f_H):
    """Schur complement of the element blocks (batched over a leading axis).

    Returns ``(K, F, X, y)`` with ``X = A_ZZ^-1 A_ZH`` and ``y = A_ZZ^-1 f_Z``
    kept for recovery.
    """
    nh = A_ZH.shape[-1]
    rhs = np.concatenate([A_ZH, f_Z[..., None]], axis=-1)
    sol = _local_solve(A_ZZ, rhs)
    X, y = sol[..., :nh], sol[..., nh]
    K = A_HH - A_HZ @ X
    F = f_H - np.einsum("...ij,...j->...i", A_HZ, y)
    return K, F, X, y


def recover_local(X, y, H_loc):
    """Element unknowns from the condensed factors and the local trace values."""
    return y - np.einsum("...ij,...j->...i", X, H_loc)


def assemble(K, F, gdof, ndof):
    """Sum element matrices ``K (E, nh, nh)`` and vectors ``F (E, nh)`` into global ones."""
    rows = np.broadcast_to(gdof[:, :, None], K.shape).ravel()
    cols = np.broadcast_to(gdof[:, None, :], K.shape).ravel()
    Kg = sp.csc_matrix((K.ravel(), (rows, cols)), shape=(ndof, ndof))
    Fg = np.bincount(gdof.ravel(), weights=F.ravel(), minlength=ndof)
    return Kg, Fg


def solve_global(Kg, Fg):
    """Direct sparse solve; returns ``(x, relative_residual)``."""
    try:
        lu = spla.splu(Kg.tocsc())
    except RuntimeError as exc:
        raise SingularGlobalMatrix(str(exc)) from None
    x = lu.solve(Fg)
    if not np.all(np.isfinite(x)):
        raise SingularGlobalMatrix("non-finite trace solution")
    nf = np.linalg.norm(Fg)
    rel = np.linalg.norm(Kg @ x - Fg) / nf if nf > 0 else float(np.linalg.norm(Kg @ x))
    return x, float(rel)


def assemble_and_solve(K, F, gdof, ndof):
    Kg, Fg = assemble(K, F, gdof, ndof)
    return solve_global(Kg, Fg)


def condensed_solve(A_ZZ, A_ZH, A_HZ, A_HH, f_Z, f_H, gdof, ndof):
    """Full condensed path: condense, assemble, solve, recover.

    Returns ``(Z (E, nz), H (ndof,), relative_residual)``.
    """
    K, F, X, y = condense(A_ZZ, A_ZH, A_HZ, A_HH, f_Z, f_H)
    H, rel = assemble_and_solve(K, F, gdof, ndof)
    Z = recover_local(X, y, H[gdof])
    return Z, H, rel


def monolithic_solve(A_ZZ, A_ZH, A_HZ, A_HH, f_Z, f_H, gdof, ndof):
    """Solve the coupled element/trace system without condensation (test oracle)."""
    E, nz = f_Z.shape
    nzt = E * nz
    n = nzt + ndof
    zidx = np.arange(nzt).reshape(E, nz)
    hidx = nzt + gdof
    rows, cols, vals = [], [], []

    def add(block, r, c):
        rows.append(np.broadcast_to(r[:, :, None], block.shape).ravel())
        cols.append(np.broadcast_to(c[:, None, :], block.shape).ravel())
        vals.append(block.ravel())

    add(A_ZZ, zidx, zidx)
    add(A_ZH, zidx, hidx)
    add(A_HZ, hidx, zidx)
    add(A_HH, hidx, hidx)
    A = sp.csc_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(n, n))
    b = np.zeros(n)
    b[:nzt] = f_Z.ravel()
    b += np.bincount(hidx.ravel(), weights=f_H.ravel(), minlength=n)
    x = spla.spsolve(A, b)
    return x[:nzt].reshape(E, nz), x[nzt:]
