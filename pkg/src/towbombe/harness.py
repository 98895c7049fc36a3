"""Seeded Monte Carlo experiments: configuration, random streams, sweeps, CSV output.

Random streams: sample ``s`` of an experiment with master seed ``seed`` is
driven by ``numpy.random.Generator(PCG64(SeedSequence(seed, spawn_key=(s,))))``,
the same stream ``SeedSequence(seed).spawn(...)[s]`` would give. Within a
stream an episode draws its fluctuations, then its reward uniforms, then its
tie-break uniforms (see :func:`towbombe.bombe.draw_episode_noise`).
"""

from __future__ import annotations

import configparser
import csv
import io
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .baselines import make_strategy
from .bombe import Dynamics, draw_episode_noise, records_from_batch, simulate, stack_noise
from .environment import CANONICAL_PROBS, CollisionPolicy, EpdEnvironment, MachineSet
from .errors import ConfigError, InputError
from .fluctuations import FluctuationKind, FluctuationSpec
from .metrics import RunRecord, Summary, aggregate, fairness, regret_curve
from .tow import omega0, simulate_tow

__all__ = [
    "ExperimentConfig",
    "SweepSpec",
    "BpConfig",
    "DEFAULT_AMPLITUDES",
    "rng_stream",
    "run_experiment",
    "run_sweep",
    "run_bp",
    "load_config",
    "config_lines",
    "records_csv",
    "summary_csv",
]

DEFAULT_AMPLITUDES = (0.0, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0)
CHUNK = 100  # samples simulated together in one batch


def rng_stream(seed: int, stream_id: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=(stream_id,))))


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that determines a competitive experiment's output.

    ``omega=None`` selects adaptive weighting. Defaults are the canonical
    five-machine, three-player setting.
    """

    game: str = "machines"  # or "epd"
    machines: tuple[float, ...] = CANONICAL_PROBS
    players: int = 3
    plays: int = 1000
    samples: int = 1000
    omega: float | None = 0.08
    policy: str = CollisionPolicy.SPLIT_PROBABILITY.value
    collision_delta: str = "unit"
    prior: str = "laplace"
    window: int = 100
    fluct: str = FluctuationKind.RANDOM.value
    amplitude: float = 1.0
    depth: int = 10
    seed: int = 0
    workers: int = 1
    out: str | None = None

    def __post_init__(self):
        if self.game not in ("machines", "epd"):
            raise ConfigError(f"unknown game {self.game!r}")
        if self.plays < 1 or self.samples < 1:
            raise ConfigError("plays and samples must be at least 1")
        if self.workers < 1:
            raise ConfigError("workers must be at least 1")
        if self.game == "epd" and self.players != 3:
            raise ConfigError("the EPD game has exactly three players")
        try:
            self.dynamics()
            self.fluctuation()
            self.environment()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self.players >= self.environment().n_machines and self.omega is None:
            raise ConfigError("adaptive omega needs fewer players than machines")
        if self.fluct == "m-random" and self.players >= self.environment().n_machines:
            raise ConfigError("m-random fluctuations need more machines than players")
        if self.fluct == "fixed" and (self.players, self.environment().n_machines) != (3, 5):
            raise ConfigError("fixed fluctuations are defined for 3 players x 5 machines")
        if self.players < 2:
            raise ConfigError("the bombe needs at least two players; use run_bp for one")

    def environment(self):
        return EpdEnvironment() if self.game == "epd" else MachineSet(self.machines)

    def dynamics(self) -> Dynamics:
        return Dynamics(self.players, self.plays, self.omega, self.policy, True,
                        self.collision_delta, self.prior, self.window)

    def fluctuation(self) -> FluctuationSpec:
        return FluctuationSpec(self.fluct, self.amplitude, self.depth)

    @property
    def omega_mode(self) -> str:
        return "adaptive" if self.omega is None else f"{self.omega:g}"

    def fingerprint(self) -> str:
        return f"{self.game}|{self.fluct}|A={self.amplitude:g}|D={self.depth}|w={self.omega_mode}"


_SECTIONS = {
    "environment": ("game", "machines", "players"),
    "dynamics": ("plays", "samples", "omega", "policy", "collision_delta", "prior", "window", "seed", "workers"),
    "fluctuation": ("fluct", "amplitude", "depth"),
    "output": ("out",),
}
# Execution settings that cannot change any result; left out of the echo so
# files from different worker counts or directories are byte-identical.
_NOT_ECHOED = ("workers", "out")
_ALIASES = {"kind": "fluct", "fluct": "fluct"}


def _format_value(name, value) -> str:
    if name == "machines":
        return ",".join(f"{p:g}" for p in value)
    if name == "omega":
        return "auto" if value is None else f"{value:g}"
    if name == "out":
        return "" if value is None else str(value)
    return str(value)


def parse_value(name: str, text: str):
    """Convert a config-file or flag string to the field's type."""
    text = text.strip()
    try:
        if name == "machines":
            return tuple(float(x) for x in text.split(",") if x.strip())
        if name == "omega":
            return None if text.lower() in ("auto", "adaptive") else float(text)
        if name in ("players", "plays", "samples", "window", "depth", "seed", "workers"):
            return int(text)
        if name == "amplitude":
            return float(text)
        if name == "out":
            return text or None
    except ValueError as exc:
        raise ConfigError(f"bad value for {name}: {text!r}") from exc
    return text


def load_config(path, base: ExperimentConfig | None = None, **overrides) -> ExperimentConfig:
    """Read a ``key = value`` file with [environment], [dynamics],
    [fluctuation] and [output] sections; ``overrides`` win over the file."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as f:
            parser.read_file(f)
    except OSError as exc:
        raise OSError(f"cannot read config {path}: {exc}") from exc
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}] in {path}")
        for key, text in parser.items(section):
            name = _ALIASES.get(key, key)
            if name not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in [{section}] of {path}")
            values[name] = parse_value(name, text)
    values.update({k: v for k, v in overrides.items() if v is not None})
    return replace(base or ExperimentConfig(), **values)


def config_lines(cfg: ExperimentConfig) -> list[str]:
    lines = []
    for section, names in _SECTIONS.items():
        for name in names:
            if name in _NOT_ECHOED:
                continue
            lines.append(f"# [{section}] {name} = {_format_value(name, getattr(cfg, name))}")
    return lines


def _run_chunk(args):
    cfg, start, stop = args
    env = cfg.environment()
    dyn = cfg.dynamics()
    fl = cfg.fluctuation()
    noise = stack_noise([draw_episode_noise(rng_stream(cfg.seed, s), env, dyn, fl) for s in range(start, stop)])
    batch = simulate(env, dyn, noise)
    return records_from_batch(batch, env, range(start, stop), cfg.seed, cfg.fingerprint())


def _simulate_records(cfg: ExperimentConfig) -> list[RunRecord]:
    chunks = [(cfg, a, min(a + CHUNK, cfg.samples)) for a in range(0, cfg.samples, CHUNK)]
    if cfg.workers > 1 and len(chunks) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_run_chunk, chunks))
    else:
        parts = [_run_chunk(c) for c in chunks]
    records = [r for part in parts for r in part]
    records.sort(key=lambda r: r.sample)
    return records


def _fmt(x: float) -> str:
    return f"{x:.6f}"


def records_csv(cfg: ExperimentConfig, records) -> str:
    buf = io.StringIO()
    for line in config_lines(cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    m = cfg.players
    w.writerow(["sample", "seed", *(f"score_{i + 1}" for i in range(m)), "outcome", "max_fluct"])
    integer = CollisionPolicy(cfg.policy) is CollisionPolicy.SPLIT_PROBABILITY
    for r in records:
        scores = [str(int(round(s))) if integer else _fmt(s) for s in r.scores]
        w.writerow([r.sample, r.seed, *scores, r.outcome.token, _fmt(r.max_fluct)])
    return buf.getvalue()


SUMMARY_COLUMNS = ["kind", "A", "D", "omega_mode", "samples", "plays", "mean_total", "mean_fairness",
                   "sm_freq", "ne_freq", "other_freq", "mean_max_fluct"]


def summary_row(cfg: ExperimentConfig, s: Summary) -> list[str]:
    return [cfg.fluct, f"{cfg.amplitude:g}", str(cfg.depth), cfg.omega_mode, str(s.samples), str(cfg.plays),
            _fmt(s.mean_total), _fmt(s.mean_fairness), _fmt(s.sm_freq), _fmt(s.ne_freq), _fmt(s.other_freq),
            _fmt(s.mean_max_fluct)]


def summary_csv(cfg: ExperimentConfig, rows) -> str:
    """``rows`` is a list of ``(cell_config, Summary)`` pairs."""
    buf = io.StringIO()
    for line in config_lines(cfg):
        buf.write(line + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SUMMARY_COLUMNS)
    for c, s in rows:
        w.writerow(summary_row(c, s))
    return buf.getvalue()


def _write(directory, name: str, text: str) -> str:
    path = os.path.join(directory, name)
    try:
        os.makedirs(directory, exist_ok=True)
        with open(path, "w", newline="") as f:
            f.write(text)
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc
    return path


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list[RunRecord]
    summary: Summary
    paths: list[str] = field(default_factory=list)

    @property
    def fairness_of_means(self) -> float:
        return _fairness_of_means(self.records)


def _fairness_of_means(records) -> float:
    return float(fairness(np.mean([r.scores for r in records], axis=0)))


def run_experiment(cfg: ExperimentConfig, prefix: str = "") -> ExperimentResult:
    """Simulate every sample, classify and aggregate; write
    ``records.csv`` and ``summary.csv`` under ``cfg.out`` when set."""
    records = _simulate_records(cfg)
    env = cfg.environment()
    summary = aggregate(records, env, cfg.players)
    result = ExperimentResult(cfg, records, summary)
    if cfg.out:
        result.paths.append(_write(cfg.out, f"{prefix}records.csv", records_csv(cfg, records)))
        result.paths.append(_write(cfg.out, f"{prefix}summary.csv", summary_csv(cfg, [(cfg, summary)])))
    return result


@dataclass(frozen=True)
class SweepSpec:
    amplitudes: tuple[float, ...] = DEFAULT_AMPLITUDES
    kinds: tuple[str, ...] = ("random", "fixed", "external")
    base: ExperimentConfig = ExperimentConfig(samples=200)

    def __post_init__(self):
        if not self.amplitudes or not self.kinds:
            raise ConfigError("a sweep needs at least one amplitude and one kind")
        for k in self.kinds:
            FluctuationKind(k)

    def cells(self) -> list[ExperimentConfig]:
        return [replace(self.base, fluct=k, amplitude=float(a), out=None)
                for k in self.kinds for a in self.amplitudes]


@dataclass
class SweepRow:
    config: ExperimentConfig
    summary: Summary
    fairness_of_means: float


def run_sweep(sweep: SweepSpec) -> list[SweepRow]:
    """One aggregate row per (kind, amplitude); writes ``sweep.csv`` under
    ``sweep.base.out`` when set."""
    rows = []
    for cell in sweep.cells():
        records = _simulate_records(cell)
        s = aggregate(records, cell.environment(), cell.players)
        rows.append(SweepRow(cell, s, _fairness_of_means(records)))
    if sweep.base.out:
        _write(sweep.base.out, "sweep.csv", summary_csv(sweep.base, [(r.config, r.summary) for r in rows]))
    return rows


@dataclass(frozen=True)
class BpConfig:
    """Single-player two-machine experiment.

    ``omega`` is a number, ``"oracle"`` (omega0 from the true
    probabilities) or ``"auto"`` (adaptive, from the player's counts).
    """

    pa: float = 0.9
    pb: float = 0.2
    steps: int = 1000
    runs: int = 1000
    omega: float | str = "oracle"
    delta: float = 1.0
    baselines: tuple[str, ...] = ()
    seed: int = 0
    out: str | None = None

    def __post_init__(self):
        if not (0 <= self.pb <= 1 and 0 <= self.pa <= 1):
            raise ConfigError("probabilities must lie in [0, 1]")
        if self.pa < self.pb:
            raise ConfigError("machine A must be the better one (pa >= pb)")
        if self.steps < 1 or self.runs < 1:
            raise ConfigError("steps and runs must be at least 1")
        if isinstance(self.omega, str) and self.omega not in ("oracle", "auto"):
            raise ConfigError(f"omega must be a number, 'oracle' or 'auto', not {self.omega!r}")

    def resolved_omega(self) -> float | None:
        if self.omega == "auto":
            return None
        if self.omega == "oracle":
            return omega0(self.pa + self.pb)
        return float(self.omega)


@dataclass
class BpResult:
    config: BpConfig
    curves: dict  # name -> (steps,) mean regret
    path: str | None = None


BASELINE_PARAMS = {"egreedy": {"epsilon": 0.1}, "softmax": {"tau": 0.1}, "ucb1t": {}}


def run_bp(cfg: BpConfig) -> BpResult:
    """Mean regret curves of TOW (and optional baselines); ``regret.csv``
    under ``cfg.out`` when set. Run ``j`` uses stream ``j``; baseline ``b``
    uses stream ``runs + b`` for its whole batch of runs."""
    p = np.array([cfg.pa, cfg.pb])
    res = simulate_tow(p, cfg.steps, [rng_stream(cfg.seed, j) for j in range(cfg.runs)],
                       omega=cfg.resolved_omega(), delta_amplitude=cfg.delta)
    curves = {"tow": regret_curve(res.mean_plays_b, cfg.pa, cfg.pb)[:, 1]}
    for b, name in enumerate(cfg.baselines):
        rng = rng_stream(cfg.seed, cfg.runs + b)
        strat = make_strategy(name, 2, batch=cfg.runs, **BASELINE_PARAMS.get(name, {}))
        nb = np.empty(cfg.steps)
        total = 0
        for t in range(1, cfg.steps + 1):
            arm = strat.select(t, rng)
            strat.update(arm, (rng.random(cfg.runs) < p[arm]).astype(float))
            total += int(arm.sum())
            nb[t - 1] = total / cfg.runs
        curves[name] = regret_curve(nb, cfg.pa, cfg.pb)[:, 1]
    result = BpResult(cfg, curves)
    if cfg.out:
        buf = io.StringIO()
        for f_ in fields(cfg):
            if f_.name not in _NOT_ECHOED:
                buf.write(f"# [bp] {f_.name} = {getattr(cfg, f_.name)}\n")
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", *(f"regret_{k}" for k in curves)])
        for t in range(cfg.steps):
            w.writerow([t + 1, *(_fmt(c[t]) for c in curves.values())])
        result.path = _write(cfg.out, "regret.csv", buf.getvalue())
    return result
