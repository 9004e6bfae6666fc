"""Command-line entry point.

Every run writes its artifact(s) and one run manifest next to them.  Exit
codes: 0 success, 1 domain error (JSON on stderr), 2 usage error.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import platform
import random
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

import mpmath
import numpy as np

from . import __version__
from .baire import (
    IndexedStrategy,
    avoid_singleton,
    certifies_exclusion,
    identity_strategy,
    shrink_strategy,
    singleton_witness,
)
from .banach_mazur import (
    BallEnumeration,
    Game,
    StrategyContractViolation,
    result_scheme,
    winning_from_witness,
    witness_from_winning,
)
from .divergence_game import (
    ScheduleExhausted,
    divergence_demo,
    divergence_strategy,
    recentering_alpha,
    schedule_params,
)
from .exact_numeric import PrecisionExhausted, rat, rat_to_str
from .fourier import (
    dirichlet,
    fejer,
    kernel_coeff_sum,
    kernel_eval,
    partial_sum,
    partial_sum_perturbation_bound,
    partial_sums_grid,
    step_coeffs_grid,
    step_fourier_coeffs,
    uniform_grid,
)
from .kolmogorov import a_estimate, build_poly, freq_constraints_hold, measure_exceptional_set
from .lp_space import ApproximationScheme, RationalBall, ball_subset, check_consistency, SchemeInconsistent
from .step_functions import RationalStepFunction, common_refinement, lp_distance_pow

CONFIG_ENV = "LPBAIRE_CONFIG"
DEFAULTS = {
    "grid": 2048,
    "tol": "1/100000000",
    "precision_cap": 4096,
    "schedule_cap": 256,
    "A": "auto",
    "A_grid": 4096,
    "A_n_list": [8, 16, 32],
    "seed": 0,
}
DOMAIN_ERRORS = (ValueError, ArithmeticError, RuntimeError, StrategyContractViolation, SchemeInconsistent,
                 OSError, KeyError, AssertionError)


class UsageError(Exception):
    pass


# -- config and manifest --------------------------------------------------------

def load_config(path: str | None) -> dict:
    cfg = dict(DEFAULTS)
    path = path or os.environ.get(CONFIG_ENV)
    if path:
        with open(path) as fh:
            extra = json.load(fh)
        unknown = set(extra) - set(DEFAULTS) - {"jobs"}
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        cfg.update(extra)
    return cfg


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), default=str)


def _digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    argv: list[str]
    command: str
    config: dict
    schedule: dict | None = None
    derived: dict = field(default_factory=dict)
    outputs: dict = field(default_factory=dict)
    started_at: str = ""
    finished_at: str = ""
    wall_seconds: float = 0.0
    status: str = "ok"

    TIMESTAMP_FIELDS = ("started_at", "finished_at", "wall_seconds")

    def record(self, path: Path) -> None:
        self.outputs[str(path)] = _digest(path)

    def to_json(self) -> dict:
        return {
            "tool": "lpbaire",
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "mpmath": mpmath.__version__,
            "argv": self.argv,
            "command": self.command,
            "config": self.config,
            "precision_cap_bits": self.config.get("precision_cap"),
            "schedule": self.schedule,
            "derived": self.derived,
            "outputs": self.outputs,
            "status": self.status,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "wall_seconds": self.wall_seconds,
        }

    @classmethod
    def strip_timestamps(cls, obj: dict) -> dict:
        return {k: v for k, v in obj.items() if k not in cls.TIMESTAMP_FIELDS}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, sort_keys=True, indent=1, default=str) + "\n")
    return path


def _read_json(path: str):
    with open(path) as fh:
        return json.load(fh)


# -- registries ----------------------------------------------------------------

def _resolve_A(cfg: dict, man: RunManifest) -> Fraction:
    if str(cfg["A"]) != "auto":
        A = rat(Fraction(str(cfg["A"])))
        man.derived["A"] = {"value": rat_to_str(A), "source": "config"}
        return A
    est = a_estimate(tuple(cfg["A_n_list"]), int(cfg["A_grid"]))
    man.derived["A"] = {"value": rat_to_str(est.value), "source": "estimate", **est.to_json()}
    return est.value


def make_strategy(name: str, cfg: dict, man: RunManifest) -> IndexedStrategy:
    """``identity``, ``shrink[:factor]``, ``recentering[:seed]``, ``divergence[:policy]``."""
    base, _, arg = name.partition(":")
    if base == "identity":
        return identity_strategy()
    if base == "shrink":
        return shrink_strategy(Fraction(arg) if arg else Fraction(1, 4))
    if base == "recentering":
        return recentering_alpha(int(arg) if arg else int(cfg["seed"]))
    if base == "divergence":
        sched = schedule_params(_resolve_A(cfg, man), int(cfg["schedule_cap"]))
        man.schedule = sched.to_json()
        return divergence_strategy(sched, arg or "budget", grid=int(cfg["grid"]))
    raise UsageError(f"unknown strategy {name!r} (identity, shrink[:f], recentering[:seed], divergence[:policy])")


def _load_ball(path: str | None) -> RationalBall:
    if path is None:
        return RationalBall(RationalStepFunction.constant(0), Fraction(1))
    return RationalBall.from_json(_read_json(path))


def _load_fn(path: str) -> RationalStepFunction:
    return RationalStepFunction.from_json(_read_json(path))


# -- commands ------------------------------------------------------------------

def cmd_game_run(args, cfg, man) -> list[Path]:
    alpha = make_strategy(args.alpha, cfg, man)
    beta = make_strategy(args.beta, cfg, man)
    game = Game(alpha, beta, _load_ball(args.ball))
    for _ in range(args.rounds):
        game.play_round()
    return [_write_json(Path(args.out), game.transcript.to_json())]


def cmd_avoid(args, cfg, man) -> list[Path]:
    ball = _load_ball(args.ball)
    f = _load_fn(args.fn)
    scheme = ApproximationScheme.constant(f, ball.p, Path(args.fn).stem)
    out = avoid_singleton(ball, scheme)
    report = {
        "input": ball.to_json(),
        "output": out.to_json(),
        "contained": ball_subset(out, ball),
        "excluded": certifies_exclusion(out, scheme, 8),
    }
    return [_write_json(Path(args.out), report)]


def cmd_fourier_coeffs(args, cfg, man) -> list[Path]:
    tol = Fraction(args.tol) if args.tol else rat(Fraction(cfg["tol"]))
    c = step_fourier_coeffs(_load_fn(args.fn), args.L, tol, cap_bits=int(cfg["precision_cap"]))
    return [_write_json(Path(args.out), c.to_json())]


def cmd_fourier_sums(args, cfg, man) -> list[Path]:
    grid = args.grid or int(cfg["grid"])
    f = _load_fn(args.fn)
    num, den = uniform_grid(grid)
    sums = partial_sums_grid(step_coeffs_grid(f, args.l), [args.l], num, den)[args.l]
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_over_pi", "S_l_lo", "S_l_hi"])
        for k in range(grid):
            w.writerow([str(Fraction(int(num[k]), den)), repr(float(sums.lo[k])), repr(float(sums.hi[k]))])
    return [out]


def cmd_kolmogorov_build(args, cfg, man) -> list[Path]:
    P = build_poly(args.n)
    obj = P.to_json()
    obj["constraints_hold"] = freq_constraints_hold(P)
    return [_write_json(Path(args.out), obj)]


def cmd_kolmogorov_verify(args, cfg, man) -> list[Path]:
    if args.A is not None:
        cfg["A"] = args.A
    A = _resolve_A(cfg, man)
    grid = args.grid or 4096
    rep = measure_exceptional_set(build_poly(args.n), A, grid)
    man.derived["fraction"] = rep.fraction
    return [_write_json(Path(args.out), rep.to_json(with_rows=True))]


def cmd_diverge(args, cfg, man) -> list[Path]:
    if args.schedule_cap is not None:
        cfg["schedule_cap"] = args.schedule_cap
    alpha = make_strategy(args.alpha, cfg, man)
    sched = schedule_params(_resolve_A(cfg, man), int(cfg["schedule_cap"]))
    man.schedule = sched.to_json()
    rep = divergence_demo(alpha, args.rounds, sched, _load_ball(args.ball), grid=int(cfg["grid"]),
                          policy=args.policy)
    out = Path(args.out)
    csv_path = out.with_suffix(".csv")
    _write_json(out, rep.to_json())
    with csv_path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x_over_pi", "max_abs_S_lo", "max_abs_S_hi"])
        for row in rep.final_rows():
            w.writerow([row[0], repr(row[1]), repr(row[2])])
    man.derived["final_fraction"] = rep.final_fraction
    return [out, csv_path]


# -- selftest ------------------------------------------------------------------

def _random_step(rng: random.Random, pieces: int = 5) -> RationalStepFunction:
    cuts = sorted({Fraction(rng.randrange(1, 64), 32) for _ in range(pieces - 1)})
    return RationalStepFunction((Fraction(0), *cuts, Fraction(2)),
                                tuple(Fraction(rng.randrange(-40, 41), rng.randrange(1, 9)) for _ in range(len(cuts) + 1)))


def _check_geometry(seed: int) -> dict:
    rng = random.Random(seed)
    bad = 0
    for _ in range(60):
        f, g, h = (_random_step(rng) for _ in range(3))
        fg, gh, fh = lp_distance_pow(f, g), lp_distance_pow(g, h), lp_distance_pow(f, h)
        bad += not fh <= fg + gh
        a, b = common_refinement(f, g)
        bad += lp_distance_pow(a, b) != fg
    return {"instances": 60, "violations": bad, "passed": bad == 0}


def _check_avoid(seed: int) -> dict:
    rng = random.Random(seed)
    bad = 0
    for _ in range(10):
        ball = RationalBall(_random_step(rng), Fraction(rng.randrange(1, 9), 4))
        f = ApproximationScheme.constant(_random_step(rng))
        out = avoid_singleton(ball, f)
        bad += not (ball_subset(out, ball) and certifies_exclusion(out, f, 8))
    return {"pairs": 10, "violations": bad, "passed": bad == 0}


def _check_game(seed: int) -> dict:
    rng = random.Random(seed)
    bad, digests = 0, []
    for k in range(6):
        alpha = recentering_alpha(rng.randrange(1000)) if k % 2 else identity_strategy()
        beta = shrink_strategy(Fraction(1, rng.choice((3, 4, 5))))
        B = RationalBall(_random_step(rng), Fraction(1))
        game = Game(alpha, beta, B)
        for _ in range(8):
            game.play_round()
        r = game.transcript.radii
        bad += any(not r[i] < B.radius / 2 ** (i + 1) for i in range(len(r)))
        scheme = result_scheme(alpha, beta, B, game)
        bad += len(check_consistency(scheme, 5))
        digests.append(hashlib.sha256(canonical_json(game.transcript.to_json()).encode()).hexdigest()[:16])
    return {"runs": 6, "violations": bad, "transcripts": digests, "passed": bad == 0}


def _check_transformers(seed: int) -> dict:
    rng = random.Random(seed)
    f = ApproximationScheme.constant(_random_step(rng), name="target")
    beta = winning_from_witness(singleton_witness(f))
    gamma = witness_from_winning(beta).avoider
    enum = BallEnumeration()
    bad = 0
    for _ in range(4):
        o = RationalBall(_random_step(rng), Fraction(1, 2))
        i = enum.index_of(o, rng.randrange(3))
        out = gamma(o, i)
        bad += not (ball_subset(out, o) and certifies_exclusion(out, f, 12))
    return {"probes": 4, "violations": bad, "passed": bad == 0}


def _check_fourier(seed: int) -> dict:
    rng = random.Random(seed)
    f = _random_step(rng)
    c = step_fourier_coeffs(f, 16, Fraction(1, 10**10))
    grid = step_coeffs_grid(f, 16)
    bad = 0
    for n in range(16):
        for exact, fast in ((c.a[n], grid.a), (c.b[n], grid.b)):
            bad += not (Fraction(float(fast.lo[n])) <= exact.hi and exact.lo <= Fraction(float(fast.hi[n])))
    for _ in range(10):
        x = Fraction(rng.randrange(0, 4096), 2048)
        for k in (dirichlet(rng.randrange(0, 33)), fejer(rng.randrange(0, 33))):
            bad += not kernel_eval(k, x).intersects(kernel_coeff_sum(k, x, 128))
    p, q = _random_step(rng), _random_step(rng)
    perturb = partial_sum_perturbation_bound(p, q, 8, grid=256, n_random=8, seed=seed)
    bad += not perturb.holds
    s = partial_sum(f, 4, Fraction(1, 3))
    return {"violations": bad, "perturbation_margin": float(perturb.margin), "S4_at_pi_over_3": float(s.mid),
            "passed": bad == 0}


def _check_kolmogorov(seed: int) -> dict:
    freqs = {n: list(build_poly(n).freqs) for n in (2, 3, 4)}
    ok = all(freq_constraints_hold(build_poly(n)) for n in (2, 3, 4)) and freqs[4] == [256, 517, 1039, 2083]
    sched = schedule_params(Fraction(1, 8), 256)
    ok &= sched.spectral_separation() and sched.summable_prefix()
    rep = measure_exceptional_set(build_poly(4), Fraction(1, 8), 512)
    return {"freqs": {str(k): v for k, v in freqs.items()}, "q_seq": [str(q) for q in sched.q_seq],
            "fraction_n4_grid512": rep.fraction, "passed": bool(ok)}


SELFTEST_CHECKS = {
    "geometry": _check_geometry,
    "avoid_singleton": _check_avoid,
    "game": _check_game,
    "transformers": _check_transformers,
    "fourier": _check_fourier,
    "kolmogorov": _check_kolmogorov,
}


def cmd_selftest(args, cfg, man) -> list[Path]:
    seed = int(cfg["seed"])
    names = list(SELFTEST_CHECKS)
    with ThreadPoolExecutor(max_workers=max(1, args.jobs)) as pool:
        results = list(pool.map(lambda n: SELFTEST_CHECKS[n](seed), names))
    report = dict(zip(names, results))
    report["passed"] = all(r["passed"] for r in results)
    man.derived["selftest_passed"] = report["passed"]
    out = _write_json(Path(args.out), report)
    if not report["passed"]:
        man.status = "failed"
    return [out]


# -- parser and dispatch -------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(2, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lpbaire", description=__doc__.splitlines()[0])
    p.add_argument("--config", help=f"JSON config file (default: ${CONFIG_ENV})")
    p.add_argument("--jobs", type=int, default=os.cpu_count() or 1, help="parallel workers (default: cores)")
    p.add_argument("--manifest", help="manifest path (default: <out>.manifest.json)")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="group", required=True, parser_class=_Parser)

    game = sub.add_parser("game", help="Banach-Mazur game runs").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    g = game.add_parser("run", help="play a Banach-Mazur game")
    g.add_argument("--alpha", default="identity")
    g.add_argument("--beta", default="shrink")
    g.add_argument("--ball")
    g.add_argument("--rounds", type=int, default=8)
    g.add_argument("--out", default="transcript.json")
    g.set_defaults(func=cmd_game_run)

    a = sub.add_parser("avoid-singleton", help="sub-ball excluding a step function")
    a.add_argument("--ball")
    a.add_argument("--fn", required=True)
    a.add_argument("--out", default="avoid.json")
    a.set_defaults(func=cmd_avoid)

    four = sub.add_parser("fourier", help="coefficients and partial sums").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    c = four.add_parser("coeffs")
    c.add_argument("--fn", required=True)
    c.add_argument("-L", type=int, default=64)
    c.add_argument("--tol")
    c.add_argument("--out", default="coeffs.json")
    c.set_defaults(func=cmd_fourier_coeffs)
    s = four.add_parser("partial-sums")
    s.add_argument("--fn", required=True)
    s.add_argument("-l", type=int, default=64)
    s.add_argument("--grid", type=int)
    s.add_argument("--out", default="sums.csv")
    s.set_defaults(func=cmd_fourier_sums)

    kol = sub.add_parser("kolmogorov", help="Kolmogorov polynomials").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    b = kol.add_parser("build")
    b.add_argument("-n", type=int, required=True)
    b.add_argument("--out", default="poly.json")
    b.set_defaults(func=cmd_kolmogorov_build)
    v = kol.add_parser("verify")
    v.add_argument("-n", type=int, required=True)
    v.add_argument("--grid", type=int)
    v.add_argument("--A", help="'auto' or a rational")
    v.add_argument("--out", default="report.json")
    v.set_defaults(func=cmd_kolmogorov_verify)

    div = sub.add_parser("diverge", help="divergence strategy demo").add_subparsers(dest="cmd", required=True, parser_class=_Parser)
    d = div.add_parser("demo")
    d.add_argument("--alpha", default="identity")
    d.add_argument("--rounds", type=int, default=4)
    d.add_argument("--ball")
    d.add_argument("--schedule-cap", type=int)
    d.add_argument("--policy", choices=("budget", "full"), default="budget")
    d.add_argument("--out", default="demo.json")
    d.set_defaults(func=cmd_diverge)

    t = sub.add_parser("selftest", help="run the invariant suite")
    t.add_argument("--out", default="selftest.json")
    t.set_defaults(func=cmd_selftest)
    return p


def _error(exc: BaseException) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.jobs < 1:
        parser.error("--jobs must be >= 1")
    try:
        cfg = load_config(args.config)
    except UsageError as exc:
        print(json.dumps(_error(exc)), file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(json.dumps(_error(exc)), file=sys.stderr)
        return 1
    command = " ".join(x for x in (args.group, getattr(args, "cmd", None)) if x)
    man = RunManifest(argv, command, dict(cfg), started_at=_now())
    t0 = time.perf_counter()
    try:
        outputs = args.func(args, cfg, man)
    except UsageError as exc:
        print(json.dumps(_error(exc)), file=sys.stderr)
        return 2
    except (ScheduleExhausted, PrecisionExhausted) + DOMAIN_ERRORS as exc:
        print(json.dumps(_error(exc)), file=sys.stderr)
        return 1
    for path in outputs:
        man.record(path)
    man.config = dict(cfg)
    man.finished_at = _now()
    man.wall_seconds = round(time.perf_counter() - t0, 3)
    mpath = Path(args.manifest) if args.manifest else outputs[0].with_name(outputs[0].name + ".manifest.json")
    _write_json(mpath, man.to_json())
    if man.status != "ok":
        print(json.dumps({"error": "SelfTestFailed", "message": f"see {outputs[0]}"}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
