"""Command-line orchestration: states, sampling, estimation, scans.

Subcommands: state, sample, estimate, optimize-params, profile,
witness-scan.  Every output file gets a sidecar ``<out>.manifest.json``
recording the exact command line, input/output digests, seeds, and
versions, sufficient to regenerate the output byte-for-byte.  All errors
carry machine-readable codes; exit status is 0 only on full success.

The environment variable STELLARQ_WORKERS sets the default worker count
for sampling.
"""

from __future__ import annotations

import argparse
import cmath
import hashlib
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import dhd, estimator, negativity, stellar
from . import fockspace as fs
from .errors import StellarQError, UsageError

_EXIT_USAGE = 64
_EXIT_ERROR = 2


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(argv, inputs, outputs, seed, t0) -> None:
    import scipy

    cfg = json.dumps(argv, sort_keys=True).encode()
    manifest = {
        "command": ["stellarq"] + list(argv),
        "config_hash": hashlib.sha256(cfg).hexdigest(),
        "seed": seed,
        "versions": {
            "stellarq": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": sys.version.split()[0],
        },
        "inputs": {str(p): _sha256(p) for p in inputs},
        "outputs": {str(p): _sha256(p) for p in outputs},
        "wall_time_s": time.monotonic() - t0,
    }
    for out in outputs:
        _write_json(f"{out}.manifest.json", manifest)


def _complex_arg(text: str, what: str) -> complex:
    try:
        if "," in text:
            re_s, im_s = text.split(",")
            return complex(float(re_s), float(im_s))
        return complex(float(text), 0.0)
    except ValueError as exc:
        raise UsageError(f"cannot parse {what} {text!r}; expected re or re,im") from exc


# ---------------------------------------------------------------------------
# State construction from a JSON spec
# ---------------------------------------------------------------------------

_CONSTRUCTORS = ("fock", "lossy_fock", "squeezed_thermal", "core")
_CHANNELS = ("photon_subtract", "photon_add", "gaussian")


def _need(params: dict, key: str, pointer: str, types, checker=None):
    if key not in params:
        raise UsageError(f"missing required field at {pointer}/{key}", pointer=f"{pointer}/{key}")
    val = params[key]
    if not isinstance(val, types):
        raise UsageError(
            f"field {pointer}/{key} has wrong type {type(val).__name__}",
            pointer=f"{pointer}/{key}",
        )
    if checker and not checker(val):
        raise UsageError(f"field {pointer}/{key} = {val!r} out of range", pointer=f"{pointer}/{key}")
    return val


def _gaussian_params(params: dict, pointer: str) -> fs.GaussianUnitaryParams:
    r = params.get("r")
    if r is None and "db" in params:
        r = fs.db_to_r(_need(params, "db", pointer, (int, float)))
    r = float(r or 0.0)
    theta = float(params.get("theta", 0.0))
    beta = 0j
    if "beta" in params:
        b = _need(params, "beta", pointer, list, lambda v: len(v) == 2)
        beta = complex(float(b[0]), float(b[1]))
    return fs.GaussianUnitaryParams(r, theta, beta)


def _build_step(state, op: str, params: dict, pointer: str):
    if state is None and op not in _CONSTRUCTORS:
        raise UsageError(
            f"pipeline must start with a constructor, got {op!r} at {pointer}",
            pointer=pointer,
        )
    if state is not None and op in _CONSTRUCTORS:
        raise UsageError(
            f"constructor {op!r} cannot follow an existing state at {pointer}",
            pointer=pointer,
        )
    if op == "fock":
        n = _need(params, "n", pointer, int, lambda v: v >= 0)
        dim = _need(params, "dim", pointer, int, lambda v: v > 0)
        return fs.make_fock(n, dim)
    if op == "lossy_fock":
        n = _need(params, "n", pointer, int, lambda v: v >= 0)
        eta = _need(params, "eta", pointer, (int, float), lambda v: 0 <= v <= 1)
        dim = _need(params, "dim", pointer, int, lambda v: v > 0)
        return fs.make_lossy_fock(n, float(eta), dim)
    if op == "squeezed_thermal":
        g = _gaussian_params(params, pointer)
        purity = _need(params, "purity", pointer, (int, float), lambda v: 0 < v <= 1)
        dim = _need(params, "dim", pointer, int, lambda v: v > 0)
        return fs.make_squeezed_thermal(g.squeeze_r, g.squeeze_theta, float(purity), dim)
    if op == "core":
        raw = _need(params, "coeffs", pointer, list, lambda v: len(v) >= 1)
        coeffs = [complex(float(c[0]), float(c[1])) if isinstance(c, list) else complex(c) for c in raw]
        g = _gaussian_params(params, pointer)
        dim = _need(params, "dim", pointer, int, lambda v: v > 0)
        core = fs.CoreState.from_unnormalized(coeffs, g)
        return core.to_state(dim)
    if op == "photon_subtract":
        return fs.photon_subtract(state)
    if op == "photon_add":
        return fs.photon_add(state)
    if op == "gaussian":
        g = _gaussian_params(params, pointer)
        out_dim = params.get("out_dim")
        return fs.apply_gaussian(state, g, out_dim=out_dim)
    raise UsageError(f"unknown state operation {op!r} at {pointer}", pointer=pointer)


def build_state_from_spec(spec: dict) -> fs.TruncatedState:
    if not isinstance(spec, dict) or not spec:
        raise UsageError("state spec must be a nonempty JSON object", pointer="/")
    if "pipeline" in spec:
        steps = spec["pipeline"]
        if not isinstance(steps, list) or not steps:
            raise UsageError("field /pipeline must be a nonempty array", pointer="/pipeline")
        state = None
        for i, step in enumerate(steps):
            if not isinstance(step, dict) or len(step) != 1:
                raise UsageError(
                    f"pipeline step /pipeline/{i} must be a single-key object",
                    pointer=f"/pipeline/{i}",
                )
            (op, params), = step.items()
            state = _build_step(state, op, params or {}, f"/pipeline/{i}/{op}")
        return state
    if len(spec) != 1:
        raise UsageError("state spec must contain exactly one operation", pointer="/")
    (op, params), = spec.items()
    return _build_step(None, op, params or {}, f"/{op}")


def _load_state(path) -> fs.TruncatedState:
    with open(path, "r", encoding="utf-8") as fh:
        return fs.TruncatedState.from_json_dict(json.load(fh))


# ---------------------------------------------------------------------------
# Target specs
# ---------------------------------------------------------------------------


def _parse_target(text: str):
    """`fock:N`, `witness:N` / `witness:n=N`, or a JSON core/operator spec."""
    if text.startswith("fock:"):
        n = int(text.split(":", 1)[1])
        return fs.TargetOperator.fock_projector(n), ("fock", n)
    if text.startswith("witness:"):
        tail = text.split(":", 1)[1]
        n = int(tail.split("=", 1)[1]) if "=" in tail else int(tail)
        return negativity.witness_operator(n), ("witness", n)
    try:
        spec = json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"cannot parse target spec {text!r}") from exc
    if "coeffs" in spec:
        coeffs = [complex(float(c[0]), float(c[1])) if isinstance(c, list) else complex(c) for c in spec["coeffs"]]
        core = fs.CoreState.from_unnormalized(coeffs)
        return fs.TargetOperator.core_projector(core), ("core", core)
    raise UsageError("target spec must be fock:N, witness:N, or JSON with coeffs")


def _parse_core_target(text: str) -> fs.CoreState:
    if text.startswith("fock:"):
        return fs.CoreState.fock(int(text.split(":", 1)[1]))
    spec = json.loads(text)
    coeffs = [complex(float(c[0]), float(c[1])) if isinstance(c, list) else complex(c) for c in spec["coeffs"]]
    return fs.CoreState.from_unnormalized(coeffs)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_state(args, argv) -> int:
    t0 = time.monotonic()
    if args.spec_file:
        with open(args.spec_file, "r", encoding="utf-8") as fh:
            spec = json.load(fh)
        inputs = [args.spec_file]
    else:
        try:
            spec = json.loads(args.spec)
        except json.JSONDecodeError as exc:
            raise UsageError(f"state spec is not valid JSON: {exc}") from exc
        inputs = []
    state = build_state_from_spec(spec)
    _write_json(args.out, state.to_json_dict())
    print(
        json.dumps(
            {
                "out": args.out,
                "dim": state.dim,
                "trace_deficit": state.trace_deficit,
                "purity": state.purity,
            }
        )
    )
    _write_manifest(argv, inputs, [args.out], None, t0)
    return 0


def cmd_sample(args, argv) -> int:
    t0 = time.monotonic()
    state = _load_state(args.state)
    zeta = _complex_arg(args.zeta, "--zeta") if args.zeta else 0j
    workers = args.workers or int(os.environ.get("STELLARQ_WORKERS", "1"))
    batch = dhd.sample_unbalanced(state, zeta, args.n, args.seed, n_workers=workers)
    dhd.save_csv(batch, args.out)
    print(
        json.dumps(
            {
                "out": args.out,
                "n": batch.n,
                "acceptance_rate": batch.acceptance_rate,
                "proposal_sigma": batch.proposal_sigma,
            }
        )
    )
    _write_manifest(argv, [args.state], [args.out], args.seed, t0)
    return 0


def cmd_estimate(args, argv) -> int:
    t0 = time.monotonic()
    batch = dhd.load_csv(args.samples)
    target, kind = _parse_target(args.target)
    delta = None if args.delta in (None, "none") else float(args.delta)
    if args.p is not None and args.eta is not None:
        p, eta = args.p, args.eta
    elif target.is_diagonal:
        n_top = max(k for k, _ in target.diagonal_entries())
        opt = estimator.optimize_params(n_top, args.epsilon, delta if delta else 0.05)
        p, eta = opt.config.p, opt.config.eta
    else:
        raise UsageError("non-diagonal targets need explicit --p and --eta")
    config = estimator.EstimatorConfig(
        target=target,
        p=p,
        eta=eta,
        epsilon=args.epsilon,
        delta=delta,
        bound_method=args.method,
    )
    if kind[0] == "witness":
        alpha = _complex_arg(args.translate, "--translate") if args.translate else 0j
        wit = negativity.estimate_omega(batch, alpha, kind[1], config)
        report = wit.estimate.to_report_dict()
        report.update(
            {
                "omega": wit.omega_estimate,
                "omega_lower_bound": wit.lower_bound,
                "negativity_certified": wit.negativity_certified,
                "wigner_upper_bound": wit.wigner_upper_bound,
                "one_sided_confidence": wit.confidence,
                "alpha": [wit.alpha.real, wit.alpha.imag],
            }
        )
    else:
        if args.translate:
            batch = dhd.translate_samples(batch, _complex_arg(args.translate, "--translate"))
        res = estimator.estimate(batch, config)
        report = res.to_report_dict()
    _write_json(args.out, report)
    print(json.dumps({"out": args.out, "value": report["value"], "confidence": report["confidence"]}))
    _write_manifest(argv, [args.samples], [args.out], batch.seed, t0)
    return 0


def cmd_optimize_params(args, argv) -> int:
    t0 = time.monotonic()
    result = estimator.optimize_params(args.n, args.epsilon, args.delta)
    report = result.to_report_dict()
    _write_json(args.out, report)
    print(json.dumps(report))
    _write_manifest(argv, [], [args.out], None, t0)
    return 0


def cmd_profile(args, argv) -> int:
    t0 = time.monotonic()
    if args.rank1_sweep:
        phis = np.linspace(0.0, math.pi / 2.0, args.rank1_sweep)
        with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("phi,max_fidelity\n")
            for phi in phis:
                fh.write(
                    f"{phi:.12g},{stellar.rank1_core_profile(float(phi), seed=args.seed):.12g}\n"
                )
    else:
        target = _parse_core_target(args.target)
        k_max = args.k_max or target.stellar_rank
        points = stellar.fidelity_profile(target, k_max, restarts=args.restarts, seed=args.seed)
        stellar.profile_to_csv(points, args.out)
    print(json.dumps({"out": args.out}))
    _write_manifest(argv, [], [args.out], args.seed, t0)
    return 0


def cmd_witness_scan(args, argv) -> int:
    t0 = time.monotonic()
    state = _load_state(args.state)
    try:
        nx_ny, extent_s = args.grid.split(":")
        nx, ny = (int(t) for t in nx_ny.lower().split("x"))
        extent = float(extent_s)
    except ValueError as exc:
        raise UsageError(f"cannot parse --grid {args.grid!r}; expected NXxNY:EXTENT") from exc
    re = np.linspace(-extent, extent, nx)
    im = np.linspace(-extent, extent, ny)
    alphas = (re[:, None] + 1j * im[None, :]).ravel()
    if args.p is not None and args.eta is not None:
        config = estimator.EstimatorConfig(
            target=negativity.witness_operator(args.n),
            p=args.p,
            eta=args.eta,
            epsilon=args.epsilon,
            delta=None,
            bound_method=args.method,
        )
    else:
        config = negativity.choose_witness_params(state, args.n, args.epsilon, args.n_samples)
    workers = args.workers or int(os.environ.get("STELLARQ_WORKERS", "1"))
    results = negativity.witness_scan(
        state, alphas, args.n, config, args.seed, args.n_samples, n_workers=workers
    )
    negativity.scan_to_csv(results, args.out)
    certified = sum(1 for r in results if r.negativity_certified)
    print(json.dumps({"out": args.out, "points": len(results), "certified": certified}))
    _write_manifest(argv, [args.state], [args.out], args.seed, t0)
    return 0


# ---------------------------------------------------------------------------
# Parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="stellarq",
        description=(
            "Simulate double homodyne detection of single-mode states and certify "
            "stellar rank and Wigner negativity with finite-sample confidence."
        ),
    )
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("state", help="construct a state file from a JSON spec")
    p.add_argument("--spec", help="JSON spec, e.g. '{\"fock\":{\"n\":2,\"dim\":8}}'")
    p.add_argument("--spec-file", help="path to a JSON spec file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_state)

    p = sub.add_parser("sample", help="simulate double homodyne detection")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--zeta", help="unbalancing squeeze, re,im")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("estimate", help="estimate Tr(A rho) from a sample file")
    p.add_argument("--samples", required=True)
    p.add_argument("--target", required=True, help="fock:N | witness:N | JSON coeffs")
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", default="0.05", help="confidence parameter, or 'none'")
    p.add_argument("--method", choices=("hoeffding", "clt"), default="hoeffding")
    p.add_argument("--translate", help="displacement to revert, re,im")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_estimate)

    p = sub.add_parser("optimize-params", help="optimized (p, eta, N) for Fock targets")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--epsilon", type=float, required=True)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_optimize_params)

    p = sub.add_parser("profile", help="achievable-fidelity profile of a target")
    p.add_argument("--target", help="fock:N or JSON coeffs")
    p.add_argument("--k-max", type=int, default=None)
    p.add_argument("--rank1-sweep", type=int, default=None, help="emit the rank-1 core-state curve instead")
    p.add_argument("--restarts", type=int, default=32)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_profile)

    p = sub.add_parser("witness-scan", help="Wigner-negativity witness over an alpha grid")
    p.add_argument("--state", required=True)
    p.add_argument("--grid", default="32x32:2.5", help="NXxNY:EXTENT where alpha in [-EXTENT, EXTENT]^2")
    p.add_argument("--n", type=int, default=1)
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--n-samples", type=int, default=550_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", choices=("hoeffding", "clt"), default="clt")
    p.add_argument("--p", type=int, default=None)
    p.add_argument("--eta", type=float, default=None)
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_witness_scan)
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, argv)
    except UsageError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return _EXIT_USAGE
    except StellarQError as exc:
        print(json.dumps(exc.to_dict()), file=sys.stderr)
        return _EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
