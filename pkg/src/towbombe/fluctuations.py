"""Per-step fluctuation matrices added to the interface heights.

Each generator returns an ``(M, N)`` matrix (players x machines), or a
``size + (M, N)`` stack when a batch ``size`` is given. The three internal
kinds move fluid around without changing any player's or machine's total, so
all their row and column sums vanish. The external oscillation only keeps
row sums at zero.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, InputError

__all__ = [
    "FluctuationKind",
    "FluctuationSpec",
    "FIXED_MOVES",
    "internal_fixed",
    "internal_random",
    "internal_m_random",
    "external_oscillation",
    "max_fluctuation",
    "m_random_arrangements",
    "random_sheet_basis",
    "fluctuation_series",
]


class FluctuationKind(str, enum.Enum):
    NONE = "none"
    FIXED = "fixed"
    RANDOM = "random"
    M_RANDOM = "m-random"
    EXTERNAL = "external"


@dataclass(frozen=True)
class FluctuationSpec:
    kind: FluctuationKind = FluctuationKind.RANDOM
    amplitude: float = 1.0
    depth: int = 10

    def __post_init__(self):
        object.__setattr__(self, "kind", FluctuationKind(self.kind))
        if self.amplitude < 0:
            raise InputError("amplitude must be non-negative")
        if int(self.depth) != self.depth or self.depth < 1:
            raise InputError("depth must be a positive integer")
        object.__setattr__(self, "depth", int(self.depth))
        object.__setattr__(self, "amplitude", float(self.amplitude))

    @property
    def token(self) -> str:
        return self.kind.value


# Fixed moves O_0..O_4 in units of the amplitude.
FIXED_MOVES = np.array([0.0, 1.0, 0.0, -1.0, 0.0])

# Which fixed move each of the three players receives, indexed by the phase
# ``num``. Player 2 follows (num + 3) mod 5; player 3 follows no simple shift.
_FIXED_CASES = np.array([
    [0, 3, 1],
    [1, 4, 3],
    [2, 0, 4],
    [3, 1, 2],
    [4, 2, 0],
])


def internal_fixed(t: int, amplitude: float, n_players: int = 3, n_machines: int = 5,
                   generalize: bool = False) -> np.ndarray:
    """Deterministic zero-sum moves cycling with period 5.

    For machine ``k`` (0-based) the phase is ``num = (t + k - 1) mod 5``
    (non-negative modulo) and the players get the moves listed in the case
    table. Only the 3 x 5 device is defined that way; ``generalize=True``
    instead gives player ``i`` a ``+A`` at column ``(t + i) mod N`` and a
    ``-A`` at the next one (the last player closes the cycle), which keeps
    every row and column sum at zero for any ``M >= 2``, ``N >= 2``.
    """
    if (n_players, n_machines) == (3, 5) and not generalize:
        num = (t + np.arange(5) - 1) % 5
        return amplitude * FIXED_MOVES[_FIXED_CASES[num].T]
    if not generalize:
        raise InputError("internal fixed fluctuations are defined for 3 players x 5 machines; pass generalize=True")
    if n_players < 2 or n_machines < 2:
        raise InputError("need at least two players and two machines")
    out = np.zeros((n_players, n_machines))
    for i in range(n_players):
        plus = (t + i) % n_machines
        minus = (t + i + 1) % n_machines if i < n_players - 1 else t % n_machines
        out[i, plus] += amplitude
        out[i, minus] -= amplitude
    return out


def random_sheet_basis(n_players: int, n_machines: int) -> np.ndarray:
    """Unit sheets: ``basis[p]`` is the sheet for a seed of 1 at flat cell ``p``.

    Seed cell 1; rest of its column ``-1/(M-1)``; rest of its row
    ``-1/(N-1)``; everything else ``1/((M-1)(N-1))``.
    """
    m, n = n_players, n_machines
    i = np.arange(m)[:, None, None, None]
    k = np.arange(n)[None, :, None, None]
    a = np.arange(m)[None, None, :, None]
    b = np.arange(n)[None, None, None, :]
    same_row, same_col = (i == a), (k == b)
    sheet = np.where(
        same_row & same_col, 1.0,
        np.where(same_col, -1.0 / (m - 1),
                 np.where(same_row, -1.0 / (n - 1), 1.0 / ((m - 1) * (n - 1)))),
    )
    return sheet.reshape(m * n, m, n)


def internal_random(amplitude: float, depth: int, n_players: int, n_machines: int, rng,
                    size=None) -> np.ndarray:
    """Sum of ``depth`` single-seed sheets, scaled by ``amplitude / depth``.

    Draws all ``depth`` seed values first, then all seed positions.
    """
    if n_players < 2 or n_machines < 2:
        raise InputError("need at least two players and two machines")
    shape = () if size is None else tuple(np.atleast_1d(size))
    mn = n_players * n_machines
    r = rng.random(shape + (depth,))
    pos = rng.integers(0, mn, size=shape + (depth,))
    onehot = pos[..., None] == np.arange(mn)
    weights = (r[..., None] * onehot).sum(axis=-2)
    basis = random_sheet_basis(n_players, n_machines).reshape(mn, mn)
    return (amplitude / depth) * (weights @ basis).reshape(shape + (n_players, n_machines))


def m_random_arrangements(n_players: int, n_machines: int) -> int:
    """Number of ways to seed the players in distinct columns."""
    return math.perm(n_machines, n_players)


def internal_m_random(amplitude: float, depth: int, n_players: int, n_machines: int, rng,
                      size=None) -> np.ndarray:
    """Sum of ``depth`` sheets seeding every player at once, scaled by ``A/D``.

    Each repetition draws one seed ``r_i`` per player and a uniformly random
    arrangement of distinct seed columns. A seeded column holds ``r_i`` at
    its owner and ``-r_i/(M-1)`` elsewhere; the leftover cells of row ``i``
    share ``-(r_i - sum_{j != i} r_j/(M-1)) / (N - M)``.
    """
    m, n = n_players, n_machines
    if m < 2:
        raise InputError("need at least two players")
    if n <= m:
        raise DomainError(f"m-random fluctuations need more machines than players (M={m}, N={n})")
    shape = () if size is None else tuple(np.atleast_1d(size))
    r = rng.random(shape + (depth, m))
    cols = np.argsort(rng.random(shape + (depth, n)), axis=-1)[..., :m]

    others = (r.sum(axis=-1, keepdims=True) - r) / (m - 1)
    fill = -(r - others) / (n - m)
    sheet = np.broadcast_to(fill[..., None], shape + (depth, m, n)).copy()
    # vals[..., i, j]: entry of row i in the column seeded by player j
    vals = np.broadcast_to((-r / (m - 1))[..., None, :], shape + (depth, m, m)).copy()
    diag = np.arange(m)
    vals[..., diag, diag] = r
    np.put_along_axis(sheet, np.broadcast_to(cols[..., None, :], vals.shape), vals, axis=-1)
    return (amplitude / depth) * sheet.sum(axis=-3)


def external_oscillation(t, amplitude: float, n_players: int, n_machines: int) -> np.ndarray:
    """Synchronised sine waves, identical for every player.

    ``A sin(2 pi t / 5 + 2 pi k / N)`` for machine ``k`` (0-based). ``t`` may
    be an array of steps, giving a ``t.shape + (M, N)`` stack.
    """
    t = np.asarray(t, dtype=float)
    phase = 2 * np.pi * t[..., None] / 5 + 2 * np.pi * np.arange(n_machines) / n_machines
    row = amplitude * np.sin(phase)
    return np.broadcast_to(row[..., None, :], t.shape + (n_players, n_machines)).copy()


def max_fluctuation(series) -> float:
    """Largest absolute entry over a sequence (or stack) of matrices."""
    arr = np.asarray(series, dtype=float)
    if arr.size == 0:
        raise InputError("need at least one matrix")
    return float(np.abs(arr).max())


def fluctuation_series(spec: FluctuationSpec, steps: int, n_players: int, n_machines: int, rng,
                       t0: int = 0, generalize: bool = False) -> np.ndarray:
    """Fluctuation matrices for ``steps`` consecutive steps, shape ``(steps, M, N)``."""
    kind = spec.kind
    shape = (steps, n_players, n_machines)
    if kind is FluctuationKind.NONE or spec.amplitude == 0 and kind in (FluctuationKind.FIXED, FluctuationKind.EXTERNAL):
        return np.zeros(shape)
    if kind is FluctuationKind.FIXED:
        return np.stack([internal_fixed(t0 + t, spec.amplitude, n_players, n_machines, generalize)
                         for t in range(steps)])
    if kind is FluctuationKind.RANDOM:
        return internal_random(spec.amplitude, spec.depth, n_players, n_machines, rng, size=steps)
    if kind is FluctuationKind.M_RANDOM:
        return internal_m_random(spec.amplitude, spec.depth, n_players, n_machines, rng, size=steps)
    return external_oscillation(np.arange(t0, t0 + steps), spec.amplitude, n_players, n_machines)
