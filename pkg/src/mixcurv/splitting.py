"""Orthogonal projectors and adapted orthonormal frames.

The distribution D~ is spanned by user fields, D is its g-orthogonal
complement.  A model may instead hand over fields spanning D (``perp``
mode); this is how the roles of the two distributions are swapped.

Projectors are jets, so anything built from them can be differentiated.
Frames are plain values, used only inside traces and frame sums.
"""

import numpy as np

from . import jets


class FrameError(np.linalg.LinAlgError):
    pass


def projector(G, V):
    """g-orthogonal projector onto the column span of ``V``.

    P^i_j = V^i_a (M^-1)^{ab} V^k_b g_kj with M = V^T g V.  Works on jets or
    plain arrays.
    """
    GV = jets.einsum("nkj,nka->nja", G, V)            # (V^T g)^T  [j, a]
    M = jets.einsum("nka,nkb->nab", V, GV)            # V^T g V
    try:
        Minv = jets.inv(M)
    except np.linalg.LinAlgError:
        raise FrameError("spanning fields are linearly dependent") from None
    VM = jets.einsum("nia,nab->nib", V, Minv)
    return jets.einsum("nib,njb->nij", VM, GV)


def projectors(G, V, mode="top"):
    """Return (P, Q): projectors onto D~ and D."""
    d = G.v.shape[-1] if isinstance(G, jets.Jet) else G.shape[-1]
    eye = np.eye(d)
    R = projector(G, V)
    if mode == "top":
        return R, eye - R
    if mode == "perp":
        return eye - R, R
    raise ValueError(f"unknown distribution mode {mode!r}")


def _gs(cands, g, basis, rank, tol=1e-10):
    """Gram-Schmidt with largest-residual pivoting, pointwise over the batch."""
    n = g.shape[0]
    out = []
    cands = list(cands)
    for _ in range(rank):
        resid = []
        for c in cands:
            r = c.copy()
            for e in basis + out:
                r = r - np.einsum("ni,nij,nj->n", r, g, e)[:, None] * e
            nr = np.sqrt(np.maximum(np.einsum("ni,nij,nj->n", r, g, r), 0.0))
            resid.append((r, nr))
        # per point: first candidate whose residual is within a factor of the best
        norms = np.stack([nr for _, nr in resid], axis=1)
        best_norm = norms.max(axis=1)
        if np.any(best_norm < tol):
            raise np.linalg.LinAlgError("rank deficient spanning set")
        pick = np.argmax(norms >= best_norm[:, None] * (1 - 1e-12), axis=1)
        R = np.stack([r for r, _ in resid], axis=1)
        best = R[np.arange(n), pick] / norms[np.arange(n), pick][:, None]
        out.append(best)
    return out


def adapted_frame(G, V, mode="top", P=None):
    """Orthonormal frame U[n, A, i] with rows E_1..E_n (in D~) then D.

    ``G`` and ``V`` are value arrays.  The D~ part is Gram-Schmidt of the
    D~ spanning fields in declaration order; the D part comes from the
    projected coordinate basis with largest-residual pivoting.
    """
    G = np.asarray(G)
    V = np.asarray(V)
    N, d, k = V.shape
    if P is None:
        P, _ = projectors(G, V, mode)
    fields = [V[:, :, a] for a in range(k)]
    try:
        if mode == "top":
            E = _gs_ordered(fields, G)
            coords = [np.broadcast_to(np.eye(d)[i], (N, d)).copy() for i in range(d)]
            Qc = [c - np.einsum("nij,nj->ni", P, c) for c in coords]
            F = _gs(Qc, G, [], d - k)
        else:
            F = _gs_ordered(fields, G)
            coords = [np.broadcast_to(np.eye(d)[i], (N, d)).copy() for i in range(d)]
            Pc = [np.einsum("nij,nj->ni", P, c) for c in coords]
            E = _gs(Pc, G, [], d - k)
    except np.linalg.LinAlgError as exc:
        raise FrameError(str(exc)) from None
    return np.stack(E + F, axis=1)


def _gs_ordered(fields, g, tol=1e-10):
    out = []
    for c in fields:
        r = c.copy()
        for e in out:
            r = r - np.einsum("ni,nij,nj->n", r, g, e)[:, None] * e
        nr = np.sqrt(np.maximum(np.einsum("ni,nij,nj->n", r, g, r), 0.0))
        if np.any(nr < tol):
            raise np.linalg.LinAlgError("spanning fields are linearly dependent")
        out.append(r / nr[:, None])
    return out


def project(G, V, v, side="top", mode="top"):
    """Component of vectors ``v`` along D~ (``top``) or D (``perp``)."""
    P, Q = projectors(np.asarray(G), np.asarray(V), mode)
    M = P if side == "top" else Q
    return np.einsum("nij,nj->ni", M, v)
