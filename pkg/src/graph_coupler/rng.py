"""Counter-based uniforms shared by graph samplers and coupled trees.

Every uniform is a pure function of a 64-bit key and an index, so a graph
and the tree coupled to it can replay exactly the same numbers without
materializing an n-by-n table.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_INV53 = 2.0 ** -53

_U30 = np.uint64(30)
_U27 = np.uint64(27)
_U31 = np.uint64(31)
_U11 = np.uint64(11)
_UM1 = np.uint64(_M1)
_UM2 = np.uint64(_M2)

# stream tags
_PAIR = 0x50A1
_STUB = 0x57B0
_AUX = 0xA0C5
_REJECT = 0x5EED_0F_2E1EC7
_ROW_A = 0x1234_5678_9ABC_DEF1
_ROW_B = 0x0FED_CBA9_8765_4321


def mix64(z: int) -> int:
    """splitmix64 finalizer on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix64_array(z: np.ndarray) -> np.ndarray:
    """Vectorized splitmix64 finalizer; `z` must be uint64 and is overwritten."""
    z ^= z >> _U30
    z *= _UM1
    z ^= z >> _U27
    z *= _UM2
    z ^= z >> _U31
    return z


def to_unit(z: np.ndarray) -> np.ndarray:
    """Top 53 bits of a uint64 array as floats in [0, 1)."""
    return (z >> _U11).astype(np.float64) * _INV53


def derive_key(*parts: int) -> int:
    """Fold integers into a 64-bit key; distinct paths give unrelated keys."""
    h = 0x6A09E667F3BCC909
    for p in parts:
        h = mix64(h ^ mix64((int(p) & MASK64) + _GOLDEN))
    return h


@lru_cache(maxsize=16)
def _vertex_hashes(n: int, salt: int) -> np.ndarray:
    v = np.arange(1, n + 1, dtype=np.uint64) * np.uint64(_GOLDEN)
    v ^= np.uint64(salt)
    out = mix64_array(v)
    out.setflags(write=False)
    return out


class SharedRandomness:
    """Replayable randomness for one replication.

    Three independent families are exposed:

    * pair uniforms ``U_ij`` (symmetric for undirected models, ordered for
      directed ones), a function of the key and the pair only;
    * a stub stream ``u(t)`` indexed by pairing-event order, one per stream id;
    * an auxiliary numpy generator for draws that must not touch the shared
      uniforms (rejections, independent Poisson draws, shuffles).

    Views created with :meth:`for_stream` share pair uniforms and their cache
    but have their own stub stream and auxiliary generator.
    """

    def __init__(self, key: int, n: int, stream: int = 0, _rows: dict | None = None):
        if n < 0:
            raise ValueError("n must be nonnegative")
        self.key = int(key) & MASK64
        self.n = int(n)
        self.stream = int(stream)
        self._pk = None
        self._aux_key = derive_key(self.key, _AUX, self.stream)
        self._aux_count = 0
        self._stub_key = derive_key(self.key, _STUB, self.stream)
        self._aux: np.random.Generator | None = None
        self._rows = {} if _rows is None else _rows

    def for_stream(self, stream: int) -> "SharedRandomness":
        return SharedRandomness(self.key, self.n, stream, self._rows)

    @property
    def _pair_key(self) -> np.uint64:
        if self._pk is None:
            self._pk = np.uint64(derive_key(self.key, _PAIR))
        return self._pk

    @property
    def aux(self) -> np.random.Generator:
        if self._aux is None:
            self._aux = np.random.Generator(np.random.PCG64(self._aux_key))
        return self._aux

    # stub stream -------------------------------------------------------
    def stub_uniform(self, t: int) -> float:
        z = mix64((self._stub_key + (t + 1) * _GOLDEN) & MASK64)
        return (z >> 11) * _INV53

    def aux_uniform(self) -> float:
        """Next uniform of a counter-based auxiliary sequence (disjoint from ``aux``)."""
        self._aux_count += 1
        z = mix64((self._aux_key ^ _REJECT) + self._aux_count * _GOLDEN)
        return (z >> 11) * _INV53

    # pair uniforms -----------------------------------------------------
    def pair_row(self, i: int) -> np.ndarray:
        """U_{ij} = U_{ji} for all j (undirected)."""
        key = ("u", i)
        row = self._rows.get(key)
        if row is None:
            h = _vertex_hashes(self.n, _ROW_A)
            row = to_unit(mix64_array(self._pair_key ^ (h + h[i])))
            self._rows[key] = row
        return row

    def out_row(self, i: int) -> np.ndarray:
        """U_{i->j} for all j (directed, ordered pair)."""
        key = ("o", i)
        row = self._rows.get(key)
        if row is None:
            ha = _vertex_hashes(self.n, _ROW_A)
            hb = _vertex_hashes(self.n, _ROW_B)
            row = to_unit(mix64_array(self._pair_key ^ (hb + ha[i])))
            self._rows[key] = row
        return row

    def in_col(self, j: int) -> np.ndarray:
        """U_{i->j} for all i (directed, ordered pair)."""
        key = ("i", j)
        col = self._rows.get(key)
        if col is None:
            ha = _vertex_hashes(self.n, _ROW_A)
            hb = _vertex_hashes(self.n, _ROW_B)
            col = to_unit(mix64_array(self._pair_key ^ (ha + hb[j])))
            self._rows[key] = col
        return col

    def pair_uniform(self, i: int, j: int) -> float:
        h = _vertex_hashes(self.n, _ROW_A)
        z = np.array([self._pair_key ^ (h[i] + h[j])], dtype=np.uint64)
        return float(to_unit(mix64_array(z))[0])

    def ordered_uniform(self, i: int, j: int) -> float:
        ha = _vertex_hashes(self.n, _ROW_A)
        hb = _vertex_hashes(self.n, _ROW_B)
        z = np.array([self._pair_key ^ (ha[i] + hb[j])], dtype=np.uint64)
        return float(to_unit(mix64_array(z))[0])

    def clear_cache(self) -> None:
        self._rows.clear()
