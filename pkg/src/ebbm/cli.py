"""Command-line front end.

Subcommands: generate (sample a dataset), estimate (closed-form fit of a
dataset file), experiment (grid reproduction runs), oracle (brute-force
verification suites), advise (sample-size heuristic).

Exit codes: 0 success, 1 oracle failure, 2 bad flags/input files,
3 degenerate dataset (|M| = 1).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys

import numpy as np

from . import harness
from .errors import DegenerateMagnetizationError, DegenerateObjectiveError
from .estimator import advise_sample_size, run_algorithm1
from .model import PriorFamily, PriorSpec, sample_parameters
from .moments import Dataset, compute_stats
from .oracle import eb_likelihood_mc, georges_check, ml_fit_exact, psi_identity_check
from .sampler import SamplerConfig, generate_dataset

RESULT_VERSION = 1
EXIT_OK, EXIT_ORACLE_FAIL, EXIT_USAGE, EXIT_DEGENERATE = 0, 1, 2, 3

_PRIORS = {"gauss": PriorFamily.GAUSSIAN, "laplace": PriorFamily.LAPLACE}


def write_dataset_file(dataset: Dataset, path: str) -> None:
    """Text format: header line "n N", then N rows of n +/-1 tokens."""
    with open(path, "w") as fh:
        fh.write(f"{dataset.n} {dataset.N}\n")
        for row in dataset.samples:
            fh.write(" ".join(f"{int(v):+d}" for v in row) + "\n")


class DatasetParseError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


def read_dataset_file(path: str) -> Dataset:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines:
        raise DatasetParseError(1, "empty file")
    header = lines[0].split()
    if len(header) != 2:
        raise DatasetParseError(1, f"expected header 'n N', got {lines[0]!r}")
    try:
        n, N = int(header[0]), int(header[1])
    except ValueError:
        raise DatasetParseError(1, f"non-integer header {lines[0]!r}") from None
    body = [ln for ln in lines[1:] if ln.strip()]
    if len(body) != N:
        raise DatasetParseError(len(lines), f"header promises {N} rows, found {len(body)}")
    samples = np.empty((N, n), dtype=np.int8)
    for k, ln in enumerate(body):
        tokens = ln.split()
        if len(tokens) != n:
            raise DatasetParseError(k + 2, f"expected {n} tokens, found {len(tokens)}")
        try:
            row = [int(t) for t in tokens]
        except ValueError:
            raise DatasetParseError(k + 2, "non-integer token") from None
        if any(v not in (-1, 1) for v in row):
            raise DatasetParseError(k + 2, "tokens must be -1 or +1")
        samples[k] = row
    return Dataset(samples=samples)


def _result_document(result, digest: str, seed) -> dict:
    finite_gamma = math.isfinite(result.gamma_hat)
    return {
        "version": RESULT_VERSION,
        "seed": seed,
        "input_sha256": digest,
        "branch": result.branch.value,
        "gamma_hat": result.gamma_hat if finite_gamma else None,
        "J_hat": result.J_hat if finite_gamma else None,
        "H_hat": result.H_hat,
        "diagnostics": {
            k: (v if not isinstance(v, float) or math.isfinite(v) else None)
            for k, v in result.diagnostics.items()
        },
    }


def cmd_generate(args) -> int:
    prior = PriorSpec(family=_PRIORS[args.prior], gamma=args.J**2, H=args.H)
    machine = sample_parameters(prior, args.n, np.random.SeedSequence(entropy=args.seed, spawn_key=(0,)))
    config = SamplerConfig(delta_beta=args.delta_beta, sweeps_per_beta=args.sweeps)
    dataset = generate_dataset(machine, args.N, config, np.random.SeedSequence(entropy=args.seed, spawn_key=(1,)))
    write_dataset_file(dataset, args.out)
    print(f"wrote {args.out}: n={args.n} N={args.N} prior={args.prior} "
          f"J_true={args.J:.17g} H_true={args.H:.17g} seed={args.seed}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    try:
        dataset = read_dataset_file(args.infile)
    except (OSError, DatasetParseError) as exc:
        print(f"error: cannot read dataset {args.infile}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    with open(args.infile, "rb") as fh:
        digest = hashlib.sha256(fh.read()).hexdigest()
    try:
        result = run_algorithm1(compute_stats(dataset))
    except DegenerateMagnetizationError as exc:
        print(f"error: degenerate magnetization: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    except DegenerateObjectiveError as exc:
        print(f"error: degenerate objective: {exc}", file=sys.stderr)
        return EXIT_DEGENERATE
    doc = _result_document(result, digest, None)
    if args.format == "json":
        print(json.dumps(doc, indent=2))
    else:
        keys = ["branch", "gamma_hat", "J_hat", "H_hat"]
        print(",".join(keys))
        print(",".join("" if doc[k] is None else (f"{doc[k]:.17g}" if isinstance(doc[k], float) else str(doc[k])) for k in keys))
    return EXIT_OK


_CONFIG_KEYS = {"n", "N", "H_true", "J_grid", "prior", "repeats", "seed", "delta_beta", "sweeps"}


def parse_experiment_config(path: str) -> harness.ExperimentConfig:
    values = {}
    with open(path) as fh:
        for raw in fh:
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"expected key=value, got {line!r}")
            key, val = (part.strip() for part in line.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"unknown config key {key!r}")
            values[key] = val
    for required in ("n", "N", "H_true", "J_grid"):
        if required not in values:
            raise ValueError(f"missing required config key {required!r}")
    return harness.ExperimentConfig(
        n=int(values["n"]),
        N=int(values["N"]),
        H_true=float(values["H_true"]),
        J_grid=tuple(float(tok) for tok in values["J_grid"].split(",")),
        prior_family=_PRIORS[values.get("prior", "gauss")],
        repeats=int(values.get("repeats", "300")),
        master_seed=int(values.get("seed", "0")),
        sampler=SamplerConfig(
            delta_beta=float(values.get("delta_beta", "0.03")),
            sweeps_per_beta=int(values.get("sweeps", "1")),
        ),
    )


def cmd_experiment(args) -> int:
    try:
        config = parse_experiment_config(args.config)
    except (OSError, ValueError, KeyError) as exc:
        print(f"error: bad experiment config {args.config}: {exc}", file=sys.stderr)
        return EXIT_USAGE
    summary = harness.run_experiment(config, log=print)
    paths = harness.emit_outputs(summary, args.out_dir)
    print(f"wrote {paths['trials']}, {paths['summary']}")
    return EXIT_OK


def _oracle_psi(seed) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    worst_case = None
    for _ in range(25):
        n = int(rng.integers(2, 5))
        tau = int(rng.integers(1, 4))
        if n * tau > 12:
            tau = 12 // n
        N = int(rng.integers(1, 5))
        data = Dataset(samples=rng.choice([-1, 1], size=(N, n)).astype(np.int8))
        H = float(rng.uniform(-0.5, 0.5))
        gamma = float(rng.uniform(0.0, 0.5))
        _, _, gap = psi_identity_check(data, H, gamma, tau)
        if gap > worst:
            worst, worst_case = gap, (n, tau, N, H, gamma)
    ok = worst <= 1e-9
    return ok, f"psi: max gap {worst:.3e} at {worst_case} (tolerance 1e-9)"


def _oracle_georges(seed) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n, tau in ((3, 2), (3, 3), (4, 2), (4, 3)):
        N = int(rng.integers(2, 5))
        data = Dataset(samples=rng.choice([-1, 1], size=(N, n)).astype(np.int8))
        for m in (0.0, 0.3, -0.3, 0.7, -0.7):
            report = georges_check(data, m, tau)
            worst = max(worst, report.first_order_gap, report.second_order_gap, abs(report.u0_mean))
    ok = worst <= 1e-10
    return ok, f"georges: max gap {worst:.3e} (tolerance 1e-10)"


def _oracle_mc(seed) -> tuple[bool, str]:
    rng = np.random.default_rng(seed)
    data = Dataset(samples=rng.choice([-1, 1], size=(10, 6)).astype(np.int8))
    prior = PriorSpec(family=PriorFamily.GAUSSIAN, gamma=0.2, H=0.1)
    est1, se1 = eb_likelihood_mc(data, prior, 2000, seed=1234)
    est2, se2 = eb_likelihood_mc(data, prior, 2000, seed=5678)
    gap = abs(est1 - est2)
    bound = 3.0 * math.hypot(se1, se2)
    ok = gap <= bound
    return ok, f"mc: seed-to-seed gap {gap:.3e} vs 3-sigma bound {bound:.3e}"


def _oracle_ml(seed) -> tuple[bool, str]:
    from .model import BoltzmannMachine, exact_moments

    rng = np.random.default_rng(seed)
    data = Dataset(samples=rng.choice([-1, 1], size=(50, 5)).astype(np.int8))
    h_ml, j_upper = ml_fit_exact(data)
    stats = compute_stats(data)
    machine = BoltzmannMachine.from_upper(5, h_ml, j_upper)
    site, pair = exact_moments(machine)
    iu = np.triu_indices(5, k=1)
    gap = max(abs(site.sum() - stats.d_i.sum()) / 5, np.abs(pair[iu] - stats.d_ij[iu]).max())
    ok = gap <= 1e-7
    return ok, f"ml: stationarity gap {gap:.3e} (tolerance 1e-7)"


def cmd_oracle(args) -> int:
    suites = {"psi": _oracle_psi, "georges": _oracle_georges, "mc": _oracle_mc, "ml": _oracle_ml}
    selected = suites if args.suite == "all" else {args.suite: suites[args.suite]}
    all_ok = True
    for name, fn in selected.items():
        ok, message = fn(args.seed)
        print(("PASS " if ok else "FAIL ") + message)
        all_ok &= ok
    return EXIT_OK if all_ok else EXIT_ORACLE_FAIL


def cmd_advise(args) -> int:
    n_rec = advise_sample_size(args.H, args.n)
    print(f"advised N = {n_rec} for n = {args.n}, |H| ~ {abs(args.H):g}")
    print("anchors: N = 0.4 n at H = 0; N = 30 at |H| = 0.2; N = 5 at |H| >= 0.4 "
          "(linear in |H| between; heuristic only)")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ebbm", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="sample a dataset from a prior-drawn machine")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--H", type=float, default=0.0)
    p.add_argument("--J", type=float, default=0.0, help="coupling scale, gamma = J^2")
    p.add_argument("--prior", choices=sorted(_PRIORS), default="gauss")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--delta-beta", type=float, default=0.03)
    p.add_argument("--sweeps", type=int, default=1)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("estimate", help="closed-form hyperparameter estimate for a dataset file")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--format", choices=["json", "csv"], default="json")
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("experiment", help="grid experiment from a key=value config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_experiment)

    p = sub.add_parser("oracle", help="run brute-force verification suites")
    p.add_argument("--suite", choices=["psi", "georges", "mc", "ml", "all"], default="all")
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("advise", help="sample-size heuristic")
    p.add_argument("--H", type=float, required=True)
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_advise)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
