"""Words over {1..d}, truncated full Fock space coordinates and symbols.

A word is a tuple of 1-based letters; ``()`` is the vacuum word.  Words are
ordered by length, then lexicographically, and that order fixes the index of
``e_alpha`` in every truncated Fock coordinate vector.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetExceeded, DimensionMismatch
from .numerics import dag

WORD_BUDGET = 10**6

Word = tuple


def word_count(d: int, N: int) -> int:
    """Number of words of length <= N."""
    return sum(d**k for k in range(N + 1))


def level_start(d: int, k: int) -> int:
    return word_count(d, k - 1) if k > 0 else 0


def check_budget(d: int, N: int, budget: int = WORD_BUDGET) -> int:
    total = word_count(d, N)
    if total > budget:
        raise BudgetExceeded(f"{total} words for d={d}, N={N} exceed budget {budget}")
    return total


def word_index(word, d: int) -> int:
    rank = 0
    for a in word:
        if not 1 <= a <= d:
            raise ValueError(f"letter {a} outside 1..{d}")
        rank = rank * d + (a - 1)
    return level_start(d, len(word)) + rank


def index_word(index: int, d: int) -> Word:
    k = 0
    while index >= d**k:
        index -= d**k
        k += 1
    letters = []
    for _ in range(k):
        index, r = divmod(index, d)
        letters.append(r + 1)
    return tuple(reversed(letters))


def words_of_length(d: int, k: int) -> list[Word]:
    out = [()]
    for _ in range(k):
        out = [w + (a,) for w in out for a in range(1, d + 1)]
    return out


def words_up_to(d: int, N: int, budget: int = WORD_BUDGET) -> list[Word]:
    check_budget(d, N, budget)
    out = []
    for k in range(N + 1):
        out.extend(words_of_length(d, k))
    return out


def word_key(word) -> tuple:
    return (len(word), tuple(word))


def prepend_indices(d: int, N: int, letter: int) -> np.ndarray:
    """Index of ``(letter,) + alpha`` for every alpha of length <= N, in canonical order."""
    out = np.empty(word_count(d, N), dtype=np.int64)
    pos = 0
    for k in range(N + 1):
        size = d**k
        base = level_start(d, k + 1) + (letter - 1) * size
        out[pos:pos + size] = base + np.arange(size)
        pos += size
    return out


@dataclass
class MultiAnalyticSymbol:
    """Truncated coefficient family ``{theta_alpha}`` of a multi-analytic operator.

    ``coeffs[alpha]`` is an ``target_dim x source_dim`` matrix.  When
    ``target_frame`` is set (ambient_dim x target_dim, orthonormal columns),
    coefficients are coordinates with respect to that frame.  Missing words
    are zero.
    """

    d: int
    depth: int
    source_dim: int
    target_dim: int
    coeffs: dict = field(default_factory=dict)
    target_frame: np.ndarray | None = None
    truncated: bool = False

    def __post_init__(self):
        for w, c in self.coeffs.items():
            if len(w) > self.depth:
                raise ValueError(f"word {w} longer than depth {self.depth}")
            if np.shape(c) != (self.target_dim, self.source_dim):
                raise DimensionMismatch(f"coefficient at {w} has shape {np.shape(c)}")

    def __getitem__(self, word) -> np.ndarray:
        c = self.coeffs.get(tuple(word))
        if c is None:
            return np.zeros((self.target_dim, self.source_dim), dtype=complex)
        return c

    def words(self) -> list[Word]:
        return sorted(self.coeffs, key=word_key)

    def ambient(self, word) -> np.ndarray:
        c = self[word]
        return c if self.target_frame is None else self.target_frame @ c

    def stacked(self, ambient: bool = False) -> np.ndarray:
        """All coefficients stacked over the full word list (rows = word x target)."""
        blocks = []
        for w in words_up_to(self.d, self.depth):
            blocks.append(self.ambient(w) if ambient else self[w])
        return np.vstack(blocks)

    def apply_columns(self, X) -> dict:
        """word -> theta_alpha @ X for the stored words."""
        return {w: c @ X for w, c in self.coeffs.items()}


def apply_symbol(sym: MultiAnalyticSymbol, x) -> np.ndarray:
    """Fock coordinates of M_theta (e_0 (x) x) as a (num_words, target_dim) array."""
    x = np.asarray(x, dtype=complex).ravel()
    if x.shape != (sym.source_dim,):
        raise DimensionMismatch(f"vector of length {x.size}, symbol source_dim {sym.source_dim}")
    out = np.zeros((check_budget(sym.d, sym.depth), sym.target_dim), dtype=complex)
    for w, c in sym.coeffs.items():
        out[word_index(w, sym.d)] = c @ x
    return out


def symbol_gram(sym: MultiAnalyticSymbol) -> np.ndarray:
    G = np.zeros((sym.source_dim, sym.source_dim), dtype=complex)
    for w in sym.words():
        c = sym.coeffs[w]
        G += dag(c) @ c
    return G


def isometry_defect_eigenvalues(sym: MultiAnalyticSymbol) -> np.ndarray:
    """Ascending eigenvalues of 1 - sum_alpha theta_alpha^* theta_alpha."""
    D = np.eye(sym.source_dim) - symbol_gram(sym)
    return np.linalg.eigvalsh(0.5 * (D + dag(D)))


def isometry_defect(sym: MultiAnalyticSymbol) -> float:
    """|| 1 - sum_{|alpha| <= N} theta_alpha^* theta_alpha ||"""
    ev = isometry_defect_eigenvalues(sym)
    return float(np.abs(ev).max()) if ev.size else 0.0


def shift_compose(sym: MultiAnalyticSymbol, letter: int) -> MultiAnalyticSymbol:
    """Symbol of (L_letter (x) 1) M_theta: every word gets ``letter`` prepended.

    Words pushed beyond ``sym.depth`` are dropped and ``truncated`` is set.
    """
    if not 1 <= letter <= sym.d:
        raise ValueError(f"letter {letter} outside 1..{sym.d}")
    coeffs = {}
    dropped = False
    for w, c in sym.coeffs.items():
        nw = (letter,) + tuple(w)
        if len(nw) > sym.depth:
            dropped = True
            continue
        coeffs[nw] = c
    return MultiAnalyticSymbol(
        d=sym.d, depth=sym.depth, source_dim=sym.source_dim, target_dim=sym.target_dim,
        coeffs=coeffs, target_frame=sym.target_frame, truncated=sym.truncated or dropped,
    )


def fock_norm(coeffs: dict) -> float:
    """Norm of a Fock vector given as word -> coefficient vector."""
    return float(np.sqrt(sum(np.vdot(v, v).real for v in coeffs.values())))


def fock_difference(a: dict, b: dict) -> dict:
    out = {}
    for w in set(a) | set(b):
        va = a.get(w)
        vb = b.get(w)
        if va is None:
            out[w] = -vb
        elif vb is None:
            out[w] = va
        else:
            out[w] = va - vb
    return out
