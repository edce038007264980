"""Command line entry points: ``generate``, ``discover``, ``bench``,
``oracle`` and ``eval``.

Every command is deterministic given its flags. ``--config FILE`` reads a
JSON object whose keys (flag names, dashes or underscores) override the
command line; unknown keys are an error. Per-trial seeds derive from the
master ``--seed`` with :func:`derive_seed`, and ``generate --seed S`` with a
derived seed replays a single benchmark trial.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .cpd import CpConfig
from .discovery import ALPHA_MATRIX, ALPHA_TENSOR, DiscoveryResult, MeasurementModel, discover
from .exceptions import DegenerateModel, LatentRankError, NoSeparatorFound
from .graph import PartialDag, d_separated, minimal_dsep_support
from .metrics import MEASUREMENT_FIELDS, STRUCTURE_FIELDS, EvalReport, evaluate, summarize
from .simulate import MEASUREMENTS, STRUCTURES, LsmSpec, build_spec, oracle_joint, sample
from .tensor import read_dataset, write_dataset

EXIT_USAGE = 2
EXIT_DEGENERATE = 3

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def splitmix64(x: int) -> int:
    """One splitmix64 output for state ``x``."""
    z = (x + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master: int, index: int) -> int:
    """Seed of stream ``index`` under ``master``: the ``index``-th splitmix64
    output started from ``master``."""
    return splitmix64((int(master) + int(index) * _GOLDEN) & _MASK64)


def trial_seeds(master: int) -> tuple:
    """``(spec_seed, data_seed)`` used by ``generate`` for one master seed."""
    return derive_seed(master, 0), derive_seed(master, 1)


class ConfigError(LatentRankError, ValueError):
    pass


def _positive(kind):
    def parse(text):
        value = kind(text)
        if value <= 0:
            raise argparse.ArgumentTypeError(f"expected a positive value, got {text}")
        return value
    return parse


def _probability(text):
    value = float(text)
    if not 0.0 < value < 1.0:
        raise argparse.ArgumentTypeError(f"expected a level in (0, 1), got {text}")
    return value


def _add_test_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--alpha-matrix", type=_probability, default=ALPHA_MATRIX,
                   help="level of the pairwise matrix-rank tests")
    p.add_argument("--alpha-tensor", type=_probability, default=ALPHA_TENSOR,
                   help="level of the tensor-rank goodness-of-fit tests")
    p.add_argument("--restarts", type=_positive(int), default=CpConfig.restarts,
                   help="random restarts per CP fit")
    p.add_argument("--max-iter", type=_positive(int), default=CpConfig.max_iter)
    p.add_argument("--max-cond", type=int, default=2, help="largest number of conditioning latents")
    p.add_argument("--hetero", action="store_true", help="allow a different support per latent")
    p.add_argument("--r", type=int, default=None, help="latent support (skips its estimation)")
    p.add_argument("--max-checks", type=_positive(int), default=None,
                   help="subsample the four-way cluster checks per triple")
    p.add_argument("--votes", type=_positive(int), default=1,
                   help="child selections voting on each latent CI query")


def _add_model_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--mm", default="MM1", choices=sorted(MEASUREMENTS))
    p.add_argument("--d", type=int, default=4, help="observed support")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="latentrank", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="draw a model and a dataset from it")
    g.add_argument("--sm", default="SM1", choices=sorted(STRUCTURES))
    _add_model_flags(g)
    g.add_argument("--r", type=int, nargs="+", default=[3], help="latent support, one or one per latent")
    g.add_argument("--n", type=int, default=50000, help="number of samples")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="lsm", help="output prefix for PREFIX.spec.json and PREFIX.csv")

    d = sub.add_parser("discover", help="learn a model from a dataset")
    d.add_argument("data", help="CSV dataset with a header row")
    _add_test_flags(d)
    d.add_argument("--seed", type=int, default=0)
    d.add_argument("--out", default="-", help="report path, '-' for stdout")

    b = sub.add_parser("bench", help="repeat generate, discover and eval and tabulate the scores")
    b.add_argument("--sm", nargs="+", default=["SM1"], choices=sorted(STRUCTURES))
    _add_model_flags(b)
    b.add_argument("--true-r", type=int, nargs="+", default=[3], help="latent support of the generated models")
    b.add_argument("--sizes", type=_positive(int), nargs="+", default=[5000, 10000, 50000])
    b.add_argument("--trials", type=_positive(int), default=10)
    _add_test_flags(b)
    b.add_argument("--seed", type=int, default=0, help="master seed")
    b.add_argument("--out", default="-", help="TSV table path, '-' for stdout")
    b.add_argument("--reports", default=None, help="directory for per-trial score files")

    o = sub.add_parser("oracle", help="population answers from a model file")
    o.add_argument("spec", help="model file written by generate")
    o.add_argument("--vars", nargs="+", required=True, help="observed (or latent) labels")
    o.add_argument("--mode", choices=("support", "dsep", "rank"), default="support",
                   help="minimal separating support, d-separation of two --vars given --given, "
                        "or CP rank of the exact joint")
    o.add_argument("--given", nargs="*", default=[])
    o.add_argument("--max-size", type=_positive(int), default=3)
    o.add_argument("--restarts", type=_positive(int), default=20)
    o.add_argument("--seed", type=int, default=0)

    e = sub.add_parser("eval", help="score a discovery report against the true model")
    e.add_argument("spec")
    e.add_argument("report")
    e.add_argument("--exhaustive", action="store_true", help="optimal latent matching")
    e.add_argument("--out", default="-")

    for p in (g, d, b, o, e):
        p.add_argument("--config", default=None, help="JSON file overriding the flags")
    return parser


def apply_config(args: argparse.Namespace) -> argparse.Namespace:
    """Overlay ``args.config`` on parsed flags; unknown keys raise ConfigError."""
    if not args.config:
        return args
    with open(args.config) as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        raise ConfigError("config file must hold a JSON object")
    known = set(vars(args)) - {"command", "config"}
    for key, value in overrides.items():
        name = key.replace("-", "_")
        if name not in known:
            raise ConfigError(f"unknown config key {key!r} for {args.command}")
        setattr(args, name, value)
    return args


def _cp_config(args) -> CpConfig:
    return CpConfig(restarts=args.restarts, max_iter=args.max_iter, seed=args.seed)


def _resolved(args) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("verbose",)}


def _emit(text: str, out: str) -> None:
    if out == "-":
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")


def _validate_generate(args) -> None:
    if args.n < 1:
        raise ConfigError("--n must be at least 1")
    if args.d < 2 or any(r < 2 for r in args.r):
        raise ConfigError("supports must be at least 2")


def cmd_generate(args) -> int:
    _validate_generate(args)
    spec_seed, data_seed = trial_seeds(args.seed)
    r = args.r[0] if len(args.r) == 1 else args.r
    spec = build_spec(args.sm, args.mm, r=r, d=args.d, seed=spec_seed)
    data = sample(spec, args.n, seed=data_seed)
    Path(f"{args.out}.spec.json").write_text(spec.to_json() + "\n")
    write_dataset(data, f"{args.out}.csv")
    return 0


def _run_discovery(data, args) -> DiscoveryResult:
    return discover(data, alpha_matrix=args.alpha_matrix, alpha_tensor=args.alpha_tensor,
                    cfg=_cp_config(args), max_cond=args.max_cond, hetero=args.hetero, r=args.r,
                    max_checks=args.max_checks, votes=args.votes, seed=args.seed)


def cmd_discover(args) -> int:
    data = read_dataset(args.data)
    try:
        result = _run_discovery(data, args)
    except DegenerateModel as exc:
        print(f"degenerate model: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    result.config["command"] = _resolved(args)
    _emit(result.to_json(), args.out)
    return 0


def _empty_result(data) -> tuple:
    return MeasurementModel(clusters=(), names=data.names), None


BENCH_FIELDS = MEASUREMENT_FIELDS + STRUCTURE_FIELDS


def run_trial(sm: str, mm: str, r, d: int, n: int, seed: int, args) -> EvalReport:
    """One benchmark trial, replayable from ``seed`` alone. A degenerate
    discovery counts as learning nothing."""
    spec_seed, data_seed = trial_seeds(seed)
    spec = build_spec(sm, mm, r=r, d=d, seed=spec_seed)
    data = sample(spec, n, seed=data_seed)
    try:
        result = _run_discovery(data, args)
        learned, pattern = result.measurement, result.structure.pattern if result.structure else None
    except DegenerateModel:
        learned, pattern = _empty_result(data)
    return evaluate(spec, learned, pattern)


def bench_table(args) -> str:
    r = args.true_r[0] if len(args.true_r) == 1 else args.true_r
    header = ["structure", "mm", "n", "trials", *BENCH_FIELDS]
    lines = ["\t".join(header)]
    for sm in args.sm:
        for n in args.sizes:
            reports = []
            for t in range(args.trials):
                seed = derive_seed(args.seed, t)
                report = run_trial(sm, args.mm, r, args.d, n, seed, args)
                reports.append(report)
                if args.reports:
                    out = Path(args.reports)
                    out.mkdir(parents=True, exist_ok=True)
                    body = {"trial": t, "seed": seed, **report.to_dict()}
                    (out / f"{sm}_{args.mm}_{n}_{t}.json").write_text(json.dumps(body, indent=1) + "\n")
            cells = summarize(reports, BENCH_FIELDS)
            lines.append("\t".join([sm, args.mm, str(n), str(args.trials)] + [cells[f] for f in BENCH_FIELDS]))
    return "\n".join(lines) + "\n"


def cmd_bench(args) -> int:
    _emit(bench_table(args), args.out)
    return 0


def _exact_rank(spec: LsmSpec, names, args, tol: float = 1e-6) -> int:
    from .cpd import nncp

    t = oracle_joint(spec, names)
    cfg = CpConfig(restarts=args.restarts, seed=args.seed)
    bound = min(int(t.values.size), 64)
    for r in range(1, bound + 1):
        if nncp(t, r, cfg)[1] < tol:
            return r
    raise NoSeparatorFound(f"no exact CP fit up to rank {bound}")


def cmd_oracle(args) -> int:
    spec = LsmSpec.from_json(Path(args.spec).read_text())
    out = {"vars": list(args.vars), "mode": args.mode}
    if args.mode == "dsep":
        if len(args.vars) != 2:
            raise ConfigError("dsep mode takes exactly two --vars")
        out["given"] = list(args.given)
        out["d_separated"] = d_separated(spec.graph, {args.vars[0]}, {args.vars[1]}, set(args.given))
    elif args.mode == "support":
        try:
            support, witness = minimal_dsep_support(spec.graph, args.vars, args.max_size)
        except NoSeparatorFound as exc:
            support, witness = exc.support, exc.witness
        out["support"], out["separator"] = support, list(witness)
    else:
        out["rank"] = _exact_rank(spec, args.vars, args)
    print(json.dumps(out))
    return 0


def cmd_eval(args) -> int:
    spec = LsmSpec.from_json(Path(args.spec).read_text())
    report = json.loads(Path(args.report).read_text())
    mm, pattern = DiscoveryResult.read_model(report)
    if not mm.names:
        mm = MeasurementModel(mm.clusters, mm.latent_support, spec.observed)
    if pattern is None:
        pattern = PartialDag(tuple(mm.latents))
    _emit(evaluate(spec, mm, pattern, exhaustive=args.exhaustive).to_json(), args.out)
    return 0


COMMANDS = {
    "generate": cmd_generate,
    "discover": cmd_discover,
    "bench": cmd_bench,
    "oracle": cmd_oracle,
    "eval": cmd_eval,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = apply_config(args)
        return COMMANDS[args.command](args)
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
