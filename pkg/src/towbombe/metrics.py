"""Scores, fairness and outcome classification for competitive runs."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .environment import MachineSet, machine_label, nash_pattern, social_optima
from .errors import InputError

__all__ = [
    "RunRecord",
    "OutcomeClass",
    "Summary",
    "fairness",
    "classify_outcome",
    "classify_pattern",
    "aggregate",
    "regret_curve",
    "sm_points",
]


@dataclass
class RunRecord:
    """One sample of a competitive run."""

    scores: np.ndarray  # (M,)
    histogram: np.ndarray  # (M, N) selections over the whole run
    final_modal: np.ndarray  # (M,) most frequent machine in the final window
    max_fluct: float = 0.0
    sample: int = 0
    seed: int = 0
    fingerprint: str = ""
    outcome: "OutcomeClass | None" = None

    @property
    def plays(self) -> int:
        return int(self.histogram[0].sum())

    @property
    def total(self) -> float:
        return float(np.sum(self.scores))


@dataclass(frozen=True)
class OutcomeClass:
    label: str  # "SM", "NE" or "Other"
    pattern: tuple[int, ...]

    @property
    def token(self) -> str:
        return f"{self.label}:" + "".join(machine_label(k) for k in self.pattern)


def fairness(scores) -> float:
    """Mean absolute score difference over all unordered player pairs."""
    s = np.asarray(scores, dtype=float)
    if s.shape[-1] < 2:
        raise InputError("fairness needs at least two players")
    i, j = np.triu_indices(s.shape[-1], k=1)
    out = np.abs(s[..., i] - s[..., j]).mean(axis=-1)
    return float(out) if out.ndim == 0 else out


def classify_pattern(pattern, env) -> OutcomeClass:
    """SM if the joint selection maximises total expected reward, NE if it is
    the selfish pattern (all on the best machine; E,E,E in the EPD game)."""
    pat = np.asarray(pattern, dtype=np.intp)
    m = len(pat)
    if isinstance(env, MachineSet):
        top = np.sort(env.p)[::-1][:m].sum()
        if len(set(pat.tolist())) == m and np.isclose(env.p[pat].sum(), top, rtol=0, atol=1e-12):
            return OutcomeClass("SM", tuple(pat.tolist()))
    else:
        optima = social_optima(env, m)
        if (optima == pat).all(axis=1).any():
            return OutcomeClass("SM", tuple(pat.tolist()))
    if np.array_equal(pat, nash_pattern(env, m)):
        return OutcomeClass("NE", tuple(pat.tolist()))
    return OutcomeClass("Other", tuple(pat.tolist()))


def classify_outcome(record: RunRecord, env) -> OutcomeClass:
    return classify_pattern(record.final_modal, env)


def sm_points(env, n_players: int, plays: int) -> tuple[np.ndarray, np.ndarray]:
    """Expected score vectors of every social-maximum pattern and of the NE.

    Returns ``(sm, ne)`` with ``sm`` of shape ``(n_sm, M)``.
    """
    if isinstance(env, MachineSet):
        top = env.top(n_players)
        pats = np.array(list(itertools.permutations(top)), dtype=np.intp)
    else:
        pats = social_optima(env, n_players)
    sm = plays * env.reward_probs(pats)
    ne = plays * env.reward_probs(nash_pattern(env, n_players))
    return sm, ne


@dataclass
class Summary:
    samples: int
    mean_total: float
    mean_fairness: float
    sm_freq: float
    ne_freq: float
    other_freq: float
    mean_max_fluct: float
    sm_points: np.ndarray = field(repr=False)
    # per SM point: number of records nearest to it and their mean score vector
    cluster_counts: np.ndarray = field(repr=False)
    cluster_centroids: np.ndarray = field(repr=False)
    ne_cluster_count: int = 0


def aggregate(records, env=None, n_players: int | None = None) -> Summary:
    """Sample averages over records.

    With ``env`` given, records are also assigned to the nearest of the SM
    points or the NE point in score space, and the mean score vector of each
    SM cluster is reported (NaN for empty clusters).
    """
    records = list(records)
    if not records:
        raise InputError("aggregate needs at least one record")
    scores = np.array([r.scores for r in records], dtype=float)
    labels = [r.outcome.label if r.outcome is not None else classify_outcome(r, env).label for r in records]
    n = len(records)
    m = scores.shape[1]
    if env is not None:
        pts, ne = sm_points(env, n_players or m, records[0].plays)
        allpts = np.vstack([pts, ne[None, :]])
        d = np.linalg.norm(scores[:, None, :] - allpts[None], axis=-1)
        nearest = d.argmin(axis=1)
        counts = np.bincount(nearest, minlength=len(allpts))
        cents = np.full(pts.shape, np.nan)
        for c in range(len(pts)):
            if counts[c]:
                cents[c] = scores[nearest == c].mean(axis=0)
        cluster_counts, ne_count = counts[:-1], int(counts[-1])
    else:
        pts = cents = np.empty((0, m))
        cluster_counts, ne_count = np.zeros(0, dtype=int), 0
    return Summary(
        samples=n,
        mean_total=float(scores.sum(axis=1).mean()),
        mean_fairness=float(np.mean(fairness(scores))) if m >= 2 else 0.0,
        sm_freq=labels.count("SM") / n,
        ne_freq=labels.count("NE") / n,
        other_freq=labels.count("Other") / n,
        mean_max_fluct=float(np.mean([r.max_fluct for r in records])),
        sm_points=pts,
        cluster_counts=cluster_counts,
        cluster_centroids=cents,
        ne_cluster_count=ne_count,
    )


def regret_curve(plays_b, p_a: float, p_b: float) -> np.ndarray:
    """``(t, (P_A - P_B) N_B(t))`` rows for a history of cumulative ``N_B``.

    ``plays_b`` may be one run's cumulative count or a sample mean.
    """
    nb = np.asarray(plays_b, dtype=float)
    t = np.arange(1, len(nb) + 1)
    return np.column_stack([t, (p_a - p_b) * nb])
