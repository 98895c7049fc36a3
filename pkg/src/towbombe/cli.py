"""Command-line driver: ``towbombe <subcommand> [flags]``.

Exit status: 0 success, 1 a self-check failed, 2 bad usage or configuration,
3 data-integrity failure, 4 I/O failure. Values resolve as flags, then the
``--config`` file, then built-in defaults; output files echo the result.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from .environment import CANONICAL_PROBS
from .errors import ConfigError, DataIntegrityError, DomainError, InputError
from .harness import (BpConfig, DEFAULT_AMPLITUDES, ExperimentConfig, SweepSpec, load_config,
                      run_bp, run_experiment, run_sweep)
from .verify import verify_invariants, verify_tables

EXIT_CHECK, EXIT_USAGE, EXIT_DATA, EXIT_IO = 1, 2, 3, 4
_D = ExperimentConfig()


def _csv_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _omega(text: str):
    if text.lower() in ("auto", "adaptive", "oracle"):
        return text.lower()
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--omega takes auto or a number, got {text!r}")


def _common(bp: bool = False) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", metavar="PATH", help="key = value file with [environment], [dynamics], "
                   "[fluctuation] and [output] sections")
    p.add_argument("--seed", type=int, help=f"master seed (default {_D.seed})")
    p.add_argument("--samples", type=int, help=f"independent samples or runs (default {_D.samples})")
    p.add_argument("--plays", type=int, help=f"plays per sample (default {_D.plays})")
    p.add_argument("--machines", type=_csv_floats, metavar="P1,P2,...",
                   help="reward probabilities (default " + ",".join(f"{x:g}" for x in CANONICAL_PROBS) + ")")
    p.add_argument("--players", type=int, help=f"number of players M (default {_D.players})")
    p.add_argument("--fluct", choices=["none", "fixed", "random", "m-random", "external"],
                   help=f"fluctuation kind (default {_D.fluct})")
    p.add_argument("--amplitude", type=float, help=f"fluctuation amplitude A (default {_D.amplitude:g})")
    p.add_argument("--depth", type=int, help=f"random-sheet depth D (default {_D.depth})")
    p.add_argument("--omega", type=_omega, metavar="{auto|REAL}",
                   help="weighting parameter; 'auto' adapts it from the counts "
                   + ("(default oracle: omega0 from the true probabilities)" if bp else f"(default {_D.omega:g})"))
    p.add_argument("--policy", choices=["split-prob", "split-value"], help=f"collision rule (default {_D.policy})")
    p.add_argument("--workers", type=int, help=f"worker processes (default {_D.workers})")
    p.add_argument("--out", metavar="DIR", help="directory for CSV output (default: print a summary only)")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="towbombe", description="Tug-of-war bandit dynamics and the TOW bombe.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    bp = sub.add_parser("run-bp", parents=[_common(bp=True)], help="single-player TOW regret curves")
    bp.add_argument("--pa", type=float, default=0.9, help="probability of machine A (default 0.9)")
    bp.add_argument("--pb", type=float, default=0.2, help="probability of machine B (default 0.2)")
    bp.add_argument("--delta", type=float, default=1.0, help="amplitude of the uniform noise term (default 1)")
    bp.add_argument("--baselines", default="", metavar="NAMES",
                    help="comma-separated comparators from egreedy,softmax,ucb1t (default none)")

    sub.add_parser("run-cbp", parents=[_common()], help="bombe on the canonical competitive bandit")
    sub.add_parser("run-epd", parents=[_common()], help="bombe on the extended prisoner's dilemma")

    sw = sub.add_parser("sweep", parents=[_common()], help="summary rows over fluctuation kinds and amplitudes")
    sw.add_argument("--kinds", default="random,fixed,external", help="comma-separated kinds (default random,fixed,external)")
    sw.add_argument("--amplitudes", type=_csv_floats, default=DEFAULT_AMPLITUDES,
                    help="comma-separated A values (default " + ",".join(f"{a:g}" for a in DEFAULT_AMPLITUDES) + ")")

    vt = sub.add_parser("verify-tables", help="check payoff cells and the EPD table, report discrepancies")
    vt.add_argument("--seed", type=int, default=0, help="accepted for uniformity; the check is deterministic")
    vi = sub.add_parser("verify-invariants", help="conservation and identity checks")
    vi.add_argument("--seed", type=int, default=0, help="seed for the random steps (default 0)")
    return parser


def _experiment_config(args, **fixed) -> ExperimentConfig:
    flags = {
        "seed": args.seed, "samples": args.samples, "plays": args.plays, "machines": args.machines,
        "players": args.players, "fluct": args.fluct, "amplitude": args.amplitude, "depth": args.depth,
        "policy": args.policy, "workers": args.workers, "out": args.out,
    }
    if args.omega is not None:
        if args.omega == "oracle":
            raise ConfigError("--omega oracle applies to run-bp only")
        flags["omega"] = None if args.omega in ("auto", "adaptive") else args.omega
    flags = {k: v for k, v in flags.items() if v is not None}
    flags.update(fixed)
    if args.config:
        return load_config(args.config, **flags)
    return ExperimentConfig(**flags)


def _print_summary(cfg: ExperimentConfig, s, fairness_of_means=None) -> None:
    print(f"{cfg.fingerprint()}  samples={s.samples} plays={cfg.plays} seed={cfg.seed}")
    print(f"  mean total {s.mean_total:.2f}  mean fairness {s.mean_fairness:.2f}"
          + (f"  fairness of mean scores {fairness_of_means:.2f}" if fairness_of_means is not None else ""))
    print(f"  SM {s.sm_freq:.3f}  NE {s.ne_freq:.3f}  Other {s.other_freq:.3f}  mean max fluct {s.mean_max_fluct:.4f}")


def _run_bp(args) -> int:
    if args.players not in (None, 1) or args.fluct or args.amplitude is not None or args.depth is not None \
            or args.policy or args.workers not in (None, 1):
        raise ConfigError("run-bp takes --pa/--pb/--plays/--samples/--omega/--delta/--baselines/--seed/--out")
    if args.config:
        raise ConfigError("run-bp does not read config files")
    pa, pb = args.machines[:2] if args.machines else (args.pa, args.pb)
    omega = args.omega if args.omega is not None else "oracle"
    omega = "auto" if omega == "adaptive" else omega
    cfg = BpConfig(pa=pa, pb=pb, steps=args.plays or 1000, runs=args.samples or 1000, omega=omega,
                   delta=args.delta, baselines=tuple(b for b in args.baselines.split(",") if b),
                   seed=args.seed or 0, out=args.out)
    res = run_bp(cfg)
    print(f"run-bp pa={cfg.pa:g} pb={cfg.pb:g} steps={cfg.steps} runs={cfg.runs} omega={cfg.omega} seed={cfg.seed}")
    for name, curve in res.curves.items():
        print(f"  {name:8s} regret at end {curve[-1]:.3f}")
    if res.path:
        print(f"wrote {res.path}")
    return 0


def _run_experiment(args, **fixed) -> int:
    cfg = _experiment_config(args, **fixed)
    res = run_experiment(cfg)
    _print_summary(cfg, res.summary, res.fairness_of_means)
    for path in res.paths:
        print(f"wrote {path}")
    return 0


def _sweep(args) -> int:
    base = _experiment_config(args)
    if args.samples is None and not args.config:
        base = replace(base, samples=200)
    kinds = tuple(k for k in args.kinds.split(",") if k)
    try:
        spec = SweepSpec(tuple(args.amplitudes), kinds, base)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    rows = run_sweep(spec)
    print("kind      A      mean_total  mean_fairness  fairness_of_means  SM     NE     Other")
    for r in rows:
        s = r.summary
        print(f"{r.config.fluct:9s} {r.config.amplitude:<6g} {s.mean_total:10.2f}  {s.mean_fairness:13.2f}  "
              f"{r.fairness_of_means:17.2f}  {s.sm_freq:.3f}  {s.ne_freq:.3f}  {s.other_freq:.3f}")
    if base.out:
        print(f"wrote {base.out}/sweep.csv")
    return 0


def _verify(report) -> int:
    print(report.render())
    return 0 if report.ok else EXIT_CHECK


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "run-bp":
            return _run_bp(args)
        if args.command == "run-cbp":
            return _run_experiment(args)
        if args.command == "run-epd":
            return _run_experiment(args, game="epd")
        if args.command == "sweep":
            return _sweep(args)
        if args.command == "verify-tables":
            return _verify(verify_tables())
        return _verify(verify_invariants(seed=args.seed))
    except DataIntegrityError as exc:
        print(f"data integrity error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (ConfigError, InputError, DomainError) as exc:
        parser.print_usage(sys.stderr)
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
