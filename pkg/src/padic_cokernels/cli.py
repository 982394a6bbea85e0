"""Command-line front end.

Exit codes: 0 success, 1 usage/config/infrastructure error, 2 an ``--assert``
threshold was violated.
"""

from __future__ import annotations

import argparse
import csv
import datetime as dt
import json
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

import numpy as np
import yaml

from . import __version__, invariants, limits, montecarlo
from .montecarlo import ConfigError, ExperimentConfig
from .rings import is_prime
from .smith import CokernelClass

EXIT_OK, EXIT_ERROR, EXIT_ASSERT = 0, 1, 2

RECORD_FIELDS = (
    "kind", "experiment", "n", "side", "key", "count", "frequency",
    "stderr", "theoretical", "truncation_error", "value", "manifest",
)
MANIFEST_NAME = "manifest.yaml"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def parse_partition(text: str) -> tuple[int, ...]:
    text = text.strip()
    if not text:
        return ()
    try:
        parts = tuple(int(x) for x in text.split(","))
    except ValueError:
        raise UsageError(f"malformed partition {text!r}; expected e.g. '3,1' or ''") from None
    if any(x < 1 for x in parts):
        raise UsageError(f"partition parts must be positive: {text!r}")
    return parts


def parse_shift(text: str, n: int) -> np.ndarray:
    """``zero``, ``diag:a,b,...`` or ``rows:a,b;c,d`` as an n x n integer matrix."""
    text = text.strip()
    try:
        if text == "zero":
            return np.zeros((n, n), dtype=np.int64)
        if text.startswith("diag:"):
            vals = [int(x) for x in text[5:].split(",")]
            if len(vals) != n:
                raise UsageError(f"shift diagonal has {len(vals)} entries, expected {n}")
            return np.diag(vals).astype(np.int64)
        if text.startswith("rows:"):
            mat = np.array([[int(x) for x in row.split(",")] for row in text[5:].split(";")], dtype=np.int64)
            if mat.shape != (n, n):
                raise UsageError(f"shift matrix has shape {mat.shape}, expected {(n, n)}")
            return mat
    except ValueError:
        pass
    raise UsageError(f"malformed shift {text!r}; expected 'zero', 'diag:1,0' or 'rows:1,0;0,0'")


# --- config files ---------------------------------------------------------------


def load_config(path: str, experiment: str | None = None) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError(f"{path}: YAML error at {where}: {getattr(exc, 'problem', exc)}") from None
    if isinstance(data, dict) and experiment is not None:
        declared = data.setdefault("experiment", experiment)
        if declared != experiment:
            raise ConfigError(f"{path}: experiment: file says {declared!r} but command is {experiment!r}")
    try:
        return ExperimentConfig.from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


# --- records ----------------------------------------------------------------------


def _record(**fields) -> dict:
    return {name: fields.get(name) for name in RECORD_FIELDS}


def _class_records(emp, config, n, theory, side=None):
    out = []
    for key in emp.sorted_keys():
        lv = theory(key) if theory else None
        out.append(_record(
            kind="class", experiment=config.experiment, n=n, side=side, key=emp.key_string(key),
            count=emp.counts[key], frequency=emp.frequency(key), stderr=emp.stderr(key),
            theoretical=None if lv is None else lv.value,
            truncation_error=None if lv is None else lv.truncation_error,
        ))
    u = emp.undetermined_mass
    out.append(_record(
        kind="undetermined", experiment=config.experiment, n=n, side=side, key="undetermined",
        count=emp.undetermined_count, frequency=u, stderr=(u * (1 - u) / emp.total) ** 0.5,
    ))
    return out


def _marginal_record(emp, config, n, side, exact: Fraction):
    count = emp.marginal(0)[CokernelClass(())]
    f = count / emp.total
    return _record(
        kind="marginal", experiment=config.experiment, n=n, side=side, key=f"{emp.labels[0]}:[]",
        count=count, frequency=f, stderr=(f * (1 - f) / emp.total) ** 0.5,
        theoretical=float(exact), truncation_error=0.0,
    )


def simulate_records(config: ExperimentConfig, workers: int) -> list[dict]:
    records = []
    for cfg in config.sweep():
        n = cfg.n
        if cfg.experiment == "joint":
            emp = montecarlo.run_joint(cfg, workers)
            records += _class_records(emp, cfg, n, lambda key: montecarlo.theoretical_joint(cfg, key))
        elif cfg.experiment == "shift":
            emp = montecarlo.run_shift(cfg, workers)
            records += _class_records(emp, cfg, n, lambda key: montecarlo.theoretical_shift(cfg, key))
        else:
            res = montecarlo.run_linearization(cfg, workers)
            alpha_n = limits.alpha(cfg.p, n)
            records += _class_records(res.gl_side, cfg, n, None, side="GL")
            records.append(_marginal_record(
                res.gl_side, cfg, n, "GL", limits.prob_no_eigenvalues(n, cfg.p, 2) / alpha_n))
            records += _class_records(res.m_side, cfg, n, None, side="M")
            records.append(_marginal_record(res.m_side, cfg, n, "M", alpha_n))
            records.append(_record(kind="tv", experiment=cfg.experiment, n=n, key="tv_distance", value=res.tv))
    return records


def check_records(records, tol: float) -> list[str]:
    bad = []
    for rec in records:
        if rec["kind"] == "class" and rec["theoretical"] is not None:
            slack = tol + rec["truncation_error"]
        elif rec["kind"] == "marginal":
            # exact finite-n value: three standard errors
            slack = max(3 * rec["stderr"], 1e-12)
        else:
            continue
        gap = abs(rec["frequency"] - rec["theoretical"])
        if gap > slack:
            where = f"n={rec['n']}" + (f" side={rec['side']}" if rec["side"] else "")
            bad.append(f"{where} {rec['key']}: frequency {rec['frequency']:.5f} vs "
                       f"theory {rec['theoretical']:.5f} (|diff| {gap:.5f} > {slack:.5f})")
    return bad


def write_outputs(records, config: ExperimentConfig, out_dir: Path, write_csv: bool, manifest: dict) -> list[Path]:
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = config.experiment
    jsonl = out_dir / f"{stem}.jsonl"
    paths = [jsonl]
    with jsonl.open("w") as fh:
        for rec in records:
            fh.write(json.dumps(dict(rec, manifest=MANIFEST_NAME), sort_keys=False) + "\n")
    if write_csv:
        path = out_dir / f"{stem}.csv"
        with path.open("w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=RECORD_FIELDS)
            writer.writeheader()
            for rec in records:
                writer.writerow(dict(rec, manifest=MANIFEST_NAME))
        paths.append(path)
    manifest["outputs"] = [p.name for p in paths]
    (out_dir / MANIFEST_NAME).write_text(yaml.safe_dump(manifest, sort_keys=False))
    return paths


def print_table(records, limit: int = 12):
    rows = [r for r in records if r["kind"] != "class"] + [r for r in records if r["kind"] == "class"][:limit]
    print(f"{'n':>4} {'side':>4}  {'key':<32} {'count':>8} {'freq':>9} {'stderr':>9} {'theory':>9}")
    for r in rows:
        if r["kind"] == "tv":
            print(f"{r['n']:>4} {'':>4}  {'tv_distance':<32} {'':>8} {r['value']:>9.5f}")
            continue
        theo = "" if r["theoretical"] is None else f"{r['theoretical']:.5f}"
        print(f"{r['n']:>4} {r['side'] or '':>4}  {r['key']:<32} {r['count']:>8} "
              f"{r['frequency']:>9.5f} {r['stderr']:>9.5f} {theo:>9}")


# --- commands -----------------------------------------------------------------------


def cmd_limits(args) -> int:
    for flag, value in (("--p", args.p), ("--alpha", args.alpha)):
        if value is not None and not is_prime(value):
            raise UsageError(f"{flag} {value} is not prime")
    rows = []
    if args.alpha is not None:
        k = 0 if args.k is None else args.k
        val = limits.alpha(args.alpha, k)
        rows.append((f"alpha(p={args.alpha}, k={k})", str(val), float(val), 0.0))
    if args.cnr is not None:
        if args.p is None:
            raise UsageError("--cnr needs --p")
        n, r = args.cnr
        try:
            val = limits.full_rank_prob(n, r, args.p)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        rows.append((f"c(n={n}, r={r}, p={args.p})", str(val), float(val), 0.0))
    if args.shift_limit is not None:
        if args.p is None:
            raise UsageError("--shift-limit needs --p")
        lv = limits.bounded_shift_limit(args.p, args.shift_limit, args.tol)
        rows.append((f"alpha(p={args.p}, inf) * alpha(p={args.p}, k={args.shift_limit})", "", lv.value, lv.truncation_error))
    if args.partition is not None:
        if args.p is None:
            raise UsageError("--partition needs --p")
        parts = parse_partition(args.partition)
        q = args.p**args.d
        mod = limits.ModuleType(q, parts)
        lv = limits.cohen_lenstra_mass(mod, args.tol)
        label = CokernelClass(parts).key()
        rows.append((f"mass(q={q}, {label})", f"|Aut| = {limits.aut_order(mod)}", lv.value, lv.truncation_error))
    if not rows:
        raise UsageError("nothing requested; pass --partition, --alpha, --cnr or --shift-limit")
    for name, exact, value, err in rows:
        extra = f"  [{exact}]" if exact else ""
        print(f"{name} = {value:.12g}  (+/- {err:.1e}){extra}")
    if args.out:
        payload = [{"quantity": n, "exact": e or None, "value": v, "truncation_error": err} for n, e, v, err in rows]
        Path(args.out).write_text(json.dumps(payload, indent=2) + "\n")
    return EXIT_OK


def cmd_simulate(args) -> int:
    config = load_config(args.config, args.experiment)
    if args.seed is not None:
        config = replace(config, seed=args.seed)
    started = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
    records = simulate_records(config, args.workers)
    manifest = {
        "artifact_version": __version__,
        "command": f"simulate {args.experiment}",
        "seed": config.seed,
        "workers": args.workers,
        "started": started,
        "finished": dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds"),
        "config": config.to_dict(),
    }
    paths = write_outputs(records, config, Path(args.out), args.csv, manifest)
    print_table(records)
    print("wrote " + ", ".join(str(p) for p in paths) + f", {Path(args.out) / MANIFEST_NAME}")
    if args.assert_:
        bad = check_records(records, args.tol)
        if bad:
            for line in bad:
                print(f"ASSERT FAILED: {line}", file=sys.stderr)
            return EXIT_ASSERT
        print(f"all checks within tolerance (tol={args.tol})")
    return EXIT_OK


def cmd_oracle(args) -> int:
    try:
        if args.which == "aut":
            if args.partition is None:
                raise UsageError("oracle aut needs --partition")
            parts = parse_partition(args.partition)
            brute = limits.aut_order_bruteforce(args.p, parts, cap=args.cap)
            formula = limits.aut_order(limits.ModuleType(args.p, parts))
            print(f"|Aut({CokernelClass(parts).key()})| over Z_{args.p}: brute force {brute} vs formula {formula}")
            return EXIT_OK if brute == formula else EXIT_ERROR
        if args.n is None:
            raise UsageError("oracle enum-fp needs --n")
        shift = parse_shift(args.shift, args.n)
        exact = montecarlo.enum_fp_exact(args.n, args.p, shift)
        total = args.p ** (args.n * args.n)
        count = exact * total
        print(f"Prob(A, A+shift invertible over F_{args.p}, n={args.n}) = {count}/{total} = {float(exact):.6g}")
        return EXIT_OK
    except limits.TooLarge as exc:
        raise UsageError(str(exc)) from None


def cmd_selftest(args) -> int:
    ok = True
    for res in invariants.run_all(args.seed):
        print(res.summary())
        for line in res.failures[:5]:
            print(f"  {line}")
        ok &= res.ok
    return EXIT_OK if ok else EXIT_ERROR


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="padic-cokernels", description="Cokernels of random p-adic matrices.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("limits", help="closed-form limiting probabilities")
    p.add_argument("--p", type=int)
    p.add_argument("--partition", help="module type, e.g. '3,1'; '' for the trivial module")
    p.add_argument("--d", type=int, default=1, help="residue degree (q = p^d)")
    p.add_argument("--alpha", type=int, metavar="P", help="alpha(P, K) = prod_{i<=K} (1 - P^-i)")
    p.add_argument("--k", type=int, metavar="K")
    p.add_argument("--cnr", type=int, nargs=2, metavar=("N", "R"), help="full column rank probability")
    p.add_argument("--shift-limit", type=int, metavar="K", help="alpha(p, inf) * alpha(p, K)")
    p.add_argument("--tol", type=float, default=1e-12)
    p.add_argument("--out", help="also write JSON here")
    p.set_defaults(func=cmd_limits)

    p = sub.add_parser("simulate", help="Monte Carlo experiments")
    p.add_argument("experiment", choices=["joint", "shift", "linearize"])
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="results")
    p.add_argument("--assert", dest="assert_", action="store_true", help="exit 2 if any check fails")
    p.add_argument("--tol", type=float, default=0.01)
    p.add_argument("--csv", action="store_true", help="also write a CSV file")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="exhaustive enumeration oracles")
    p.add_argument("which", choices=["aut", "enum-fp"])
    p.add_argument("--p", type=int, required=True)
    p.add_argument("--partition")
    p.add_argument("--n", type=int)
    p.add_argument("--shift", default="zero", help="'zero', 'diag:1,0' or 'rows:1,0;0,0'")
    p.add_argument("--cap", type=int, default=2**12, help="largest module order to enumerate")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("selftest", help="run the structural invariant suites")
    p.add_argument("--seed", type=int, default=invariants.DEFAULT_SEED)
    p.set_defaults(func=cmd_selftest)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "simulate" and args.workers < 1:
        parser.error("--workers must be >= 1")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except ValueError as exc:
        # e.g. a non-prime p
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR
