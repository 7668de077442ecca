"""Dense labeled tensors: contraction, bipartitions, Gram and defect analysis.

A LabeledTensor is an immutable dense complex array whose axes carry spin
labels (twice-spin integers). Leg indices in the public API are 1-based.
"""

import json
from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple

import numpy as np

from . import su2
from .errors import (
    BadBipartition, NotInvariant, SpinMismatch, ZeroTensor,
)

__all__ = [
    "LabeledTensor", "Bipartition", "SchurSpectrum", "contract",
    "permute_legs", "bipartitions", "gram", "isometry_defect",
    "reduced_density", "invariance_defect", "schur_spectrum",
    "invariant_basis", "random_invariant", "to_json_dict", "from_json_dict",
    "dumps_tensor", "loads_tensor",
]


@dataclass(frozen=True)
class LabeledTensor:
    """Dense complex tensor with one spin label per leg."""

    legs: tuple
    data: np.ndarray

    def __post_init__(self):
        legs = tuple(int(t) for t in self.legs)
        shape = tuple(su2.dim(t) for t in legs)
        data = np.asarray(self.data, dtype=complex)
        if data.shape != shape:
            data = data.reshape(shape)
        if not np.all(np.isfinite(data)):
            raise ValueError("tensor entries must be finite")
        data = data.copy()
        data.setflags(write=False)
        object.__setattr__(self, "legs", legs)
        object.__setattr__(self, "data", data)

    @property
    def valence(self):
        return len(self.legs)

    def norm_squared(self):
        return float(np.vdot(self.data, self.data).real)

    def norm(self):
        return float(np.linalg.norm(self.data))

    def scaled(self, factor):
        return LabeledTensor(self.legs, self.data * factor)

    def overlap(self, other):
        """Hermitian inner product <self|other> over all legs."""
        if self.legs != other.legs:
            raise SpinMismatch(f"legs {self.legs} vs {other.legs}")
        return complex(np.vdot(self.data, other.data))


class Bipartition(NamedTuple):
    """Ordered disjoint leg index tuples (a, b) covering 1..n."""

    a: tuple
    b: tuple


class SchurSpectrum(NamedTuple):
    """Per-total-spin block moduli: entries of (twice_J, modulus, multiplicity)."""

    entries: tuple


def contract(t1, t2, pairs):
    """Contract t1 with t2 over the given 1-based leg index pairs.

    Remaining legs are ordered t1-then-t2 in their original order.
    """
    ax1, ax2 = [], []
    for i, j in pairs:
        if not (1 <= i <= t1.valence and 1 <= j <= t2.valence):
            raise IndexError(f"contraction pair ({i}, {j}) out of range")
        if t1.legs[i - 1] != t2.legs[j - 1]:
            raise SpinMismatch(
                f"leg {i} (spin {su2.format_spin(t1.legs[i - 1])}) vs "
                f"leg {j} (spin {su2.format_spin(t2.legs[j - 1])})")
        ax1.append(i - 1)
        ax2.append(j - 1)
    data = np.tensordot(t1.data, t2.data, axes=(ax1, ax2))
    legs = tuple(t for k, t in enumerate(t1.legs) if k not in ax1)
    legs += tuple(t for k, t in enumerate(t2.legs) if k not in ax2)
    return LabeledTensor(legs, data)


def permute_legs(t, new_order):
    """Rearrange legs so position p of the result holds leg new_order[p]."""
    if sorted(new_order) != list(range(1, t.valence + 1)):
        raise ValueError(f"{new_order} is not a permutation of 1..{t.valence}")
    axes = [i - 1 for i in new_order]
    return LabeledTensor(tuple(t.legs[i] for i in axes), np.transpose(t.data, axes))


def bipartitions(n, balance="all_half_or_less"):
    """Canonical A-side enumerations: |A| <= floor(n/2), or exactly balanced.

    A-sets are lexicographic; when |A| = |B| only the representative with
    leg 1 on the A side is kept.
    """
    if n < 2:
        raise ValueError("need at least two legs")
    half = n // 2
    sizes = [half] if balance == "balanced_only" else list(range(1, half + 1))
    if balance not in ("all_half_or_less", "balanced_only"):
        raise ValueError(f"unknown balance mode {balance!r}")
    out = []
    legs = range(1, n + 1)
    for k in sizes:
        for a in combinations(legs, k):
            if 2 * k == n and 1 not in a:
                continue
            b = tuple(i for i in legs if i not in a)
            out.append(Bipartition(a, b))
    return out


def _validate_bipartition(t, p):
    union = sorted(p.a + p.b)
    if union != list(range(1, t.valence + 1)):
        raise BadBipartition(f"sides {p.a} | {p.b} do not partition 1..{t.valence}")


def _side_matrix(t, row_legs, col_legs):
    """Reshape t into a (rows, cols) matrix with the given 1-based leg groups."""
    axes = [i - 1 for i in row_legs] + [i - 1 for i in col_legs]
    rows = int(np.prod([su2.dim(t.legs[i - 1]) for i in row_legs], initial=1))
    return np.transpose(t.data, axes).reshape(rows, -1)


def gram(t, p):
    """Gram matrix G of t read as a map from the A side to the B side."""
    _validate_bipartition(t, p)
    if len(p.a) > len(p.b):
        raise BadBipartition(f"|A| = {len(p.a)} exceeds |B| = {len(p.b)}")
    m = _side_matrix(t, p.a, p.b)
    return m.conj() @ m.T


def isometry_defect(t, p):
    """(lambda_est, defect): trace-based scale and Frobenius defect of the Gram.

    defect = ||G - lambda_est * 1||_F / ||G||_F, zero exactly when the A-to-B
    map is a partial isometry.
    """
    if t.norm_squared() == 0.0:
        raise ZeroTensor("isometry defect of the zero tensor")
    g = gram(t, p)
    dim_a = g.shape[0]
    lam = float(np.trace(g).real) / dim_a
    defect = float(np.linalg.norm(g - lam * np.eye(dim_a)) / np.linalg.norm(g))
    return lam, defect


def reduced_density(t, a_legs):
    """Reduced density matrix of the legs in a_legs, normalized to trace one."""
    n2 = t.norm_squared()
    if n2 == 0.0:
        raise ZeroTensor("reduced density of the zero tensor")
    rest = tuple(i for i in range(1, t.valence + 1) if i not in a_legs)
    m = _side_matrix(t, tuple(a_legs), rest)
    return (m @ m.conj().T) / n2


def invariance_defect(t):
    """Normalized norm of the total su(2) action on t, maximized over x, y, z.

    Zero exactly for invariant tensors (the infinitesimal invariance test).
    """
    nrm = t.norm()
    if nrm == 0.0:
        raise ZeroTensor("invariance defect of the zero tensor")
    worst = 0.0
    for which in range(3):
        total = np.zeros_like(t.data)
        for axis, leg in enumerate(t.legs):
            g = su2.generators(leg)[which]
            moved = np.tensordot(g, t.data, axes=([1], [axis]))
            total += np.moveaxis(moved, 0, axis)
        worst = max(worst, float(np.linalg.norm(total)) / nrm)
    return worst


def _coupled_blocks(leg_spins):
    """Coupled-basis isometries grouped by total spin.

    Returns {twice_J: array of shape (prod dims, mult, dim(J))} with columns
    orthonormal across the whole space.
    """
    blocks = {}
    for path in su2.coupling_paths(leg_spins):
        w = su2.chain_isometry(leg_spins, path)
        blocks.setdefault(path[-1], []).append(w)
    return {tj: np.stack(ws, axis=1) for tj, ws in sorted(blocks.items())}


def schur_spectrum(t, p, tolerance=1e-10):
    """Block moduli |mu_J| of an invariant tensor read as an A-to-B map.

    Each total spin J in the A-side decomposition contributes entries
    (J, modulus, multiplicity); zero singular values pad each J block up to
    its A-side multiplicity.
    """
    _validate_bipartition(t, p)
    if len(p.a) > len(p.b):
        raise BadBipartition(f"|A| = {len(p.a)} exceeds |B| = {len(p.b)}")
    if invariance_defect(t) > tolerance:
        raise NotInvariant("schur spectrum requires an invariant tensor")
    a_spins = [t.legs[i - 1] for i in p.a]
    b_spins = [t.legs[i - 1] for i in p.b]
    blocks_a = _coupled_blocks(a_spins)
    blocks_b = _coupled_blocks(b_spins)
    n = _side_matrix(t, p.b, p.a)
    entries = []
    for tj, ua in blocks_a.items():
        mult_a = ua.shape[1]
        dj = su2.dim(tj)
        if tj in blocks_b:
            ub = blocks_b[tj]
            mult_b = ub.shape[1]
            pa = ua.reshape(ua.shape[0], mult_a * dj)
            pb = ub.reshape(ub.shape[0], mult_b * dj)
            s = pb.conj().T @ n @ pa
            # the state-as-map intertwines the conjugate A rep with the B rep,
            # so each block factors as mu (x) epsilon_J; the full singular
            # values repeat each |mu| exactly dim(J) times
            sigma = np.linalg.svd(s, compute_uv=False)[::dj]
        else:
            sigma = np.zeros(0)
        moduli = np.concatenate([sigma, np.zeros(mult_a - len(sigma))])
        grouped = {}
        for val in moduli:
            key = round(float(val), 9)
            grouped[key] = grouped.get(key, 0) + 1
        for key in sorted(grouped, reverse=True):
            entries.append((tj, key, grouped[key]))
    return SchurSpectrum(tuple(entries))


def invariant_basis(leg_spins):
    """Orthonormal basis of the SU(2)-invariant subspace for the given legs.

    One basis state per coupling path that closes at total spin 0; empty when
    no path does.
    """
    legs = tuple(leg_spins)
    out = []
    for path in su2.coupling_paths(legs):
        if path[-1] != 0:
            continue
        w = su2.chain_isometry(legs, path)
        out.append(LabeledTensor(legs, w[:, 0]))
    return out


def random_invariant(leg_spins, rng):
    """Random unit-norm invariant tensor for the given legs."""
    basis = invariant_basis(leg_spins)
    if not basis:
        raise ValueError("invariant subspace is empty")
    z = rng.normal(size=len(basis)) + 1j * rng.normal(size=len(basis))
    z /= np.linalg.norm(z)
    data = sum(c * e.data for c, e in zip(z, basis))
    return LabeledTensor(leg_spins, data)


def to_json_dict(t):
    """Tensor as {"legs": [...], "data": [[re, im], ...]}, leg 1 slowest."""
    flat = t.data.reshape(-1)
    return {
        "legs": [su2.format_spin(leg) for leg in t.legs],
        "data": [[float(z.real), float(z.imag)] for z in flat],
    }


def from_json_dict(doc):
    """Inverse of to_json_dict; round-trips bit-exactly."""
    legs = tuple(su2.parse_spin(s) for s in doc["legs"])
    size = int(np.prod([su2.dim(t) for t in legs], initial=1))
    raw = doc["data"]
    if len(raw) != size:
        raise ValueError(f"expected {size} entries, got {len(raw)}")
    flat = np.array([complex(re, im) for re, im in raw])
    return LabeledTensor(legs, flat)


def dumps_tensor(t):
    return json.dumps(to_json_dict(t))


def loads_tensor(text):
    return from_json_dict(json.loads(text))
