"""Command-line front end: ``ergoq <command> [flags]``.

Every command needs ``--seed`` (from a flag or the ``--config`` file). The
numerical payload goes to ``--out`` (or stdout) and a manifest with the
effective configuration, payload checksum, version and timing goes to
``OUT.manifest.json`` (or stderr). Exit codes: 0 success, 2 invalid input,
1 numerical failure; errors are printed to stderr as a JSON object.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from ._rng import index_rng, task_rng
from .errors import ErgoqError, NumericalError, ValidationError
from .io import SCHEMA_VERSION, dumps, matrix_to_json, to_csv, validate_payload

COMMANDS = (
    "fixed-point",
    "estimate-mu",
    "rank-one-residual",
    "haar-moments",
    "wg-table",
    "mps-expect",
    "mps-correlation",
    "mps-entropy",
    "oracle-compare",
)
MONTE_CARLO = {"haar-moments", "estimate-mu"}
PROCESS_KINDS = ("iid-haar", "constant-haar", "markov-haar", "quasiperiodic-haar")
CHAIN_KINDS = ("iid", "constant", "quasiperiodic")
# Monte Carlo work is split into this many seeded tasks regardless of --threads.
N_TASKS = 8

DEFAULTS = {
    "fixed-point": {"D": 3, "r": 3, "process": "iid-haar", "start": 0, "end": 40},
    "estimate-mu": {"D": 3, "r": 3, "process": "iid-haar", "steps": 100, "pairs": 8},
    "rank-one-residual": {"D": 3, "r": 3, "process": "iid-haar", "windows": "5,10,15,20", "samples": 200},
    "haar-moments": {"D": 2, "r": 2, "samples": 10000, "burn_in": None, "stride": 5},
    "wg-table": {"n": 2, "L": 4},
    "mps-expect": {"d": 2, "D": 2, "chain": "iid", "observable": "z", "site": 0, "window": "-20,20",
                   "boundary": "periodic", "thermo": False},
    "mps-correlation": {"d": 2, "D": 2, "chain": "iid", "observable": "z", "observable2": "x", "x": 0,
                        "ells": "2..15"},
    "mps-entropy": {"d": 2, "D": 2, "chain": "iid", "bonds": "0..9", "alpha": 1.0},
    "oracle-compare": {"d": 2, "D": 2, "chain": "iid", "window": "0,9"},
}


class UsageError(ValidationError):
    """Bad command-line usage."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _common(p: argparse.ArgumentParser):
    S = argparse.SUPPRESS
    p.add_argument("--seed", type=int, default=S, help="random seed (required)")
    p.add_argument("--config", default=None, help="JSON file with parameter values")
    p.add_argument("--out", default=None, help="payload path; manifest goes to OUT.manifest.json")
    p.add_argument("--format", choices=("json", "csv"), default=S)
    p.add_argument("--threads", type=int, default=None, help="worker threads (env ERGOQ_THREADS)")


def build_parser() -> argparse.ArgumentParser:
    S = argparse.SUPPRESS
    parser = _Parser(prog="ergoq", description="Ergodic quantum channels and matrix product states.")
    parser.add_argument("--version", action="version", version=f"ergoq {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def process_flags(p):
        p.add_argument("--D", type=int, default=S, help="system dimension")
        p.add_argument("--r", type=int, default=S, help="environment dimension")
        p.add_argument("--process", choices=PROCESS_KINDS, default=S)

    def chain_flags(p):
        p.add_argument("--d", type=int, default=S, help="physical dimension")
        p.add_argument("--D", type=int, default=S, help="bond dimension")
        p.add_argument("--chain", choices=CHAIN_KINDS, default=S)

    p = sub.add_parser("fixed-point", help="equilibrium trajectory Z_j of a channel process")
    process_flags(p)
    p.add_argument("--start", type=int, default=S)
    p.add_argument("--end", type=int, default=S)
    _common(p)

    p = sub.add_parser("estimate-mu", help="contraction rate in the Hennion metric")
    process_flags(p)
    p.add_argument("--steps", type=int, default=S)
    p.add_argument("--pairs", type=int, default=S)
    _common(p)

    p = sub.add_parser("rank-one-residual", help="distance of window compositions from their rank-one limit")
    process_flags(p)
    p.add_argument("--windows", default=S, help="comma-separated window lengths n - m")
    p.add_argument("--samples", type=int, default=S)
    _common(p)

    p = sub.add_parser("haar-moments", help="Monte Carlo moments of the iid Haar equilibrium")
    p.add_argument("--D", type=int, default=S)
    p.add_argument("--r", type=int, default=S)
    p.add_argument("--samples", type=int, default=S)
    p.add_argument("--burn-in", dest="burn_in", type=int, default=S)
    p.add_argument("--stride", type=int, default=S)
    _common(p)

    p = sub.add_parser("wg-table", help="exact Weingarten values")
    p.add_argument("--n", type=int, default=S)
    p.add_argument("--L", type=int, default=S)
    _common(p)

    p = sub.add_parser("mps-expect", help="finite-window and thermodynamic expectation")
    chain_flags(p)
    p.add_argument("--observable", default=S, help="identity | z | x | random")
    p.add_argument("--site", type=int, default=S)
    p.add_argument("--window", default=S, help="lo,hi")
    p.add_argument("--boundary", choices=("open", "periodic"), default=S)
    p.add_argument("--thermo", action="store_true", default=S)
    _common(p)

    p = sub.add_parser("mps-correlation", help="connected two-point correlator vs distance")
    chain_flags(p)
    p.add_argument("--observable", default=S)
    p.add_argument("--observable2", default=S)
    p.add_argument("--x", type=int, default=S)
    p.add_argument("--ells", default=S, help="a..b or comma list")
    _common(p)

    p = sub.add_parser("mps-entropy", help="entanglement spectrum and entropy per bond")
    chain_flags(p)
    p.add_argument("--bonds", default=S, help="a..b or comma list")
    p.add_argument("--alpha", type=float, default=S)
    _common(p)

    p = sub.add_parser("oracle-compare", help="library results against brute-force oracles")
    chain_flags(p)
    p.add_argument("--window", default=S)
    _common(p)
    return parser


# ---------------------------------------------------------------------------
# helpers


def _int_list(spec) -> list[int]:
    if isinstance(spec, (list, tuple)):
        return [int(x) for x in spec]
    s = str(spec).strip()
    try:
        if ".." in s:
            a, b = s.split("..")
            return list(range(int(a), int(b) + 1))
        return [int(x) for x in s.split(",") if x.strip()]
    except ValueError as exc:
        raise ValidationError(f"cannot parse integer list {spec!r}") from exc


def _pos(cfg, *names):
    for n in names:
        if not isinstance(cfg[n], int) or cfg[n] < 1:
            raise ValidationError(f"--{n} must be a positive integer")


def _process(cfg):
    from .ergodic import ChannelProcess
    from .haar import HaarChannelSpec, haar_channel

    D, r, seed = cfg["D"], cfg["r"], cfg["seed"]
    spec = HaarChannelSpec(D, r)  # validates D, r for every kind
    kind = cfg["process"]
    if kind == "iid-haar":
        return ChannelProcess.iid_haar(D, r, seed)
    base = [haar_channel(spec, index_rng(seed, k, "cli-base")) for k in range(2)]
    if kind == "constant-haar":
        return ChannelProcess.constant(base[0])
    if kind == "markov-haar":
        return ChannelProcess.markov(base, [[0.9, 0.1], [0.2, 0.8]], seed)
    return ChannelProcess.quasiperiodic(base, seed)


def _chain(cfg, boundary="open"):
    from .mps import MPSChain

    d, D, seed = cfg["d"], cfg["D"], cfg["seed"]
    _pos(cfg, "d", "D")
    kind = cfg["chain"]
    if kind == "iid":
        return MPSChain.iid(d, D, seed, boundary)
    if kind == "constant":
        return MPSChain.random_constant(d, D, seed, boundary)
    return MPSChain.quasiperiodic(d, D, seed, boundary=boundary)


def _observable(name: str, d: int, start: int, seed: int):
    from .mps import LocalObservable

    if name == "identity":
        M = np.eye(d)
    elif name == "z":
        M = np.diag([1.0 if k % 2 == 0 else -1.0 for k in range(d)])
    elif name == "x":
        S = np.roll(np.eye(d), 1, axis=0)
        M = S + S.T if d > 2 else np.array([[0.0, 1.0], [1.0, 0.0]])[:d, :d]
    elif name == "random":
        rng = index_rng(seed, start, "cli-observable")
        G = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        M = (G + G.conj().T) / 2
    else:
        raise ValidationError(f"unknown observable {name!r}; use identity, z, x or random")
    return LocalObservable(start, M, d)


def _fit(xs, ys):
    xs, ys = np.asarray(xs, float), np.asarray(ys, float)
    c = np.polyfit(xs, ys, 1)
    pred = np.polyval(c, xs)
    ss = np.sum((ys - ys.mean()) ** 2)
    return float(c[0]), float(1 - np.sum((ys - pred) ** 2) / ss) if ss > 0 else 1.0


# ---------------------------------------------------------------------------
# commands; each returns (result dict, csv header, csv rows)


def cmd_fixed_point(cfg, threads):
    from .ergodic import z_forward

    if cfg["start"] > cfg["end"]:
        raise ValidationError("--start must not exceed --end")
    proc = _process(cfg)
    traj = z_forward(proc, cfg["start"], cfg["end"])
    ev = np.linalg.eigvalsh(traj.matrices)
    rows = [(traj.start + k, float(traj.residuals[k]), float(ev[k, 0]), float(ev[k, -1]))
            for k in range(len(traj.matrices))]
    result = {
        "start": traj.start,
        "end": traj.end,
        "converged": traj.converged,
        "final_state": matrix_to_json(traj.matrices[-1]),
        "residuals": [float(x) for x in traj.residuals],
    }
    return result, ["j", "residual", "lambda_min", "lambda_max"], rows


def cmd_estimate_mu(cfg, threads):
    from .ergodic import estimate_mu

    _pos(cfg, "steps", "pairs")
    est = estimate_mu(_process(cfg), cfg["steps"], cfg["pairs"], index_rng(cfg["seed"], 0, "cli-mu"),
                      threads=threads)
    rows = [(n, float(v)) for n, v in enumerate(est.log_distance)]
    return est.to_dict(), ["n", "log_distance"], rows


def cmd_rank_one(cfg, threads):
    from .ergodic import burn_in_steps, rank_one_residual

    windows = _int_list(cfg["windows"])
    if not windows or min(windows) < 0:
        raise ValidationError("--windows must be non-negative integers")
    proc = _process(cfg)
    burn = burn_in_steps(proc, 0)
    res = [rank_one_residual(proc, 0, w, samples=cfg["samples"], rng=task_rng(cfg["seed"], w, "cli-r1"), burn=burn)
           for w in windows]
    slope, r2 = _fit(windows, np.log(np.maximum(res, 1e-300))) if len(windows) > 1 else (float("nan"), float("nan"))
    result = {"windows": windows, "residuals": res, "slope": slope, "r_squared": r2, "burn_in": burn}
    return result, ["window", "residual"], list(zip(windows, res))


def _haar_task(D, r, n, burn, stride, seed, k):
    from .haar import HaarChannelSpec, stationary_samples

    return stationary_samples(HaarChannelSpec(D, r), n, burn, task_rng(seed, k, "cli-haar"), stride)


def cmd_haar_moments(cfg, threads):
    from .ergodic import ChannelProcess, burn_in_steps
    from .haar import HaarChannelSpec, entropy_deficit_second_order, von_neumann_entropy, w_statistics
    from .weingarten import second_moment_exact

    D, r, n = cfg["D"], cfg["r"], cfg["samples"]
    spec = HaarChannelSpec(D, r)
    _pos(cfg, "samples", "stride")
    burn = cfg["burn_in"]
    if burn is None:
        burn = burn_in_steps(ChannelProcess.iid_haar(D, r, cfg["seed"]), 0)
    if burn < 0:
        raise ValidationError("--burn-in must be non-negative")
    tasks = min(N_TASKS, n)
    counts = [n // tasks + (1 if k < n % tasks else 0) for k in range(tasks)]
    args = [(D, r, counts[k], burn, cfg["stride"], cfg["seed"], k) for k in range(tasks)]
    with ThreadPoolExecutor(max(1, threads)) as ex:
        parts = list(ex.map(lambda a: _haar_task(*a), args))
    Z = np.concatenate(parts)
    stats = w_statistics(spec, Z, burn_in=burn)
    purity = np.einsum("nab,nba->n", Z, Z).real
    m2 = purity.mean()
    exact = second_moment_exact(r, D)
    result = {
        "m2": {"value": float(m2), "standard_error": float(purity.std(ddof=1) / math.sqrt(n)) if n > 1 else 0.0},
        "m2_exact": {"rational": exact.m2, "value": float(exact.m2)},
        "mean_state": matrix_to_json(Z.mean(axis=0)),
        "entropy_deficit_second_order": entropy_deficit_second_order(D, r),
        "burn_in": burn,
        "tasks": tasks,
        **stats.to_dict(),
    }
    S = von_neumann_entropy(Z)
    ev = np.linalg.eigvalsh(Z)
    rows = [(k, float(purity[k]), float(S[k]), float(ev[k, 0]), float(ev[k, -1])) for k in range(n)]
    return result, ["index", "tr_z2", "entropy", "lambda_min", "lambda_max"], rows


def cmd_wg_table(cfg, threads):
    from .weingarten import weingarten_table

    t = weingarten_table(cfg["n"], cfg["L"])
    d = t.to_dict()
    rows = [(k, d["values"][k], d["floats"][k]) for k in d["values"]]
    return d, ["class", "exact", "float"], rows


def cmd_mps_expect(cfg, threads):
    from .mps import expectation_finite, expectation_thermo

    lo, hi = _int_list(cfg["window"])
    chain = _chain(cfg, cfg["boundary"])
    O = _observable(cfg["observable"], cfg["d"], cfg["site"], cfg["seed"])
    re, im = expectation_finite(chain, O, (lo, hi), return_imag=True)
    result = {"finite": re, "finite_imag": im, "window": [lo, hi]}
    rows = [("finite", re)]
    if cfg["thermo"]:
        th = expectation_thermo(chain, O)
        result["thermo"] = th
        result["difference"] = abs(th - re)
        rows.append(("thermo", th))
    return result, ["quantity", "value"], rows


def cmd_mps_correlation(cfg, threads):
    from .ergodic import estimate_mu
    from .mps import correlation_profile

    chain = _chain(cfg)
    ells = _int_list(cfg["ells"])
    O1 = _observable(cfg["observable"], cfg["d"], 0, cfg["seed"])
    O2 = _observable(cfg["observable2"], cfg["d"], 0, cfg["seed"] + 1)
    c = correlation_profile(chain, O1, O2, cfg["x"], ells)
    mu = estimate_mu(chain, 200, 4, index_rng(cfg["seed"], 0, "cli-mu")).mu_hat
    result = {"ells": ells, "connected": [float(v) for v in c], "mu_hat": mu}
    return result, ["ell", "connected"], list(zip(ells, c))


def cmd_mps_entropy(cfg, threads):
    from .mps import entanglement_spectrum, entropy

    chain = _chain(cfg)
    bonds = _int_list(cfg["bonds"])
    spectra = [entanglement_spectrum(chain, j) for j in bonds]
    ent = [entropy(s, cfg["alpha"]) for s in spectra]
    result = {"bonds": bonds, "entropy": ent, "spectra": [s.tolist() for s in spectra], "alpha": cfg["alpha"]}
    return result, ["bond", "entropy"], list(zip(bonds, ent))


def cmd_oracle_compare(cfg, threads):
    from .mps import (LocalObservable, brute_force_expectation, brute_force_state, entanglement_spectrum_finite,
                      expectation_finite, schmidt_oracle)
    from .weingarten import verify_gram_identity, weingarten_table

    lo, hi = _int_list(cfg["window"])
    checks = []
    rng = index_rng(cfg["seed"], 0, "cli-oracle")
    for boundary in ("open", "periodic"):
        chain = _chain(cfg, boundary)
        psi = brute_force_state(chain, (lo, hi))
        G = rng.standard_normal((cfg["d"],) * 2) + 1j * rng.standard_normal((cfg["d"],) * 2)
        O = LocalObservable((lo + hi) // 2, (G + G.conj().T) / 2, cfg["d"])
        dev = abs(expectation_finite(chain, O, (lo, hi)) - brute_force_expectation(psi, O, (lo, hi), cfg["d"]))
        checks.append({"name": f"expectation_{boundary}", "deviation": dev, "tolerance": 1e-12, "passed": dev <= 1e-12})
        if boundary == "open":
            cut = (lo + hi) // 2
            a = entanglement_spectrum_finite(chain, (lo, hi), cut)
            b = schmidt_oracle(psi, cut - lo + 1, cfg["d"])[: a.size]
            dev = float(np.abs(a - b).max())
            checks.append({"name": "spectrum_open", "deviation": dev, "tolerance": 1e-10, "passed": dev <= 1e-10})
    ok = all(verify_gram_identity(weingarten_table(n, n + 2)) for n in (2, 3, 4))
    checks.append({"name": "weingarten_gram_identity", "deviation": 0.0 if ok else 1.0, "tolerance": 0.0,
                   "passed": ok})
    result = {"checks": checks, "all_passed": all(c["passed"] for c in checks)}
    return result, ["check", "deviation", "passed"], [(c["name"], c["deviation"], c["passed"]) for c in checks]


HANDLERS = {
    "fixed-point": cmd_fixed_point,
    "estimate-mu": cmd_estimate_mu,
    "rank-one-residual": cmd_rank_one,
    "haar-moments": cmd_haar_moments,
    "wg-table": cmd_wg_table,
    "mps-expect": cmd_mps_expect,
    "mps-correlation": cmd_mps_correlation,
    "mps-entropy": cmd_mps_entropy,
    "oracle-compare": cmd_oracle_compare,
}


# ---------------------------------------------------------------------------
# driver


def _load_config(path):
    if path is None:
        return {}, None
    try:
        with open(path) as fh:
            text = fh.read()
        data = json.loads(text)
    except (OSError, json.JSONDecodeError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationError("config file must hold a JSON object")
    return data, text


def _threads(flag, command) -> int:
    if flag is not None:
        n = flag
    elif os.environ.get("ERGOQ_THREADS"):
        try:
            n = int(os.environ["ERGOQ_THREADS"])
        except ValueError as exc:
            raise ValidationError("ERGOQ_THREADS must be an integer") from exc
    else:
        n = (os.cpu_count() or 1) if command in MONTE_CARLO else 1
    if n < 1:
        raise ValidationError("thread count must be positive")
    return n


def resolve_config(args) -> dict:
    """Effective parameters: flags over config file over defaults."""
    command = args.command
    file_cfg, _ = _load_config(args.config)
    cfg = dict(DEFAULTS[command])
    cfg["format"] = "json"
    known = set(cfg) | {"seed", "format"}
    unknown = set(file_cfg) - known - {"command", "threads", "out"}
    if unknown:
        raise ValidationError(f"unknown config keys for {command}: {sorted(unknown)}")
    cfg.update({k: v for k, v in file_cfg.items() if k in known})
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "out", "threads")}
    cfg.update(flags)
    if "seed" not in cfg or cfg["seed"] is None:
        raise ValidationError("a seed is required (--seed or 'seed' in the config file)")
    if not isinstance(cfg["seed"], int) or cfg["seed"] < 0:
        raise ValidationError("seed must be a non-negative integer")
    return cfg


def run(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    t0 = time.perf_counter()
    try:
        args = build_parser().parse_args(argv)
        cfg = resolve_config(args)
        threads = _threads(args.threads, args.command)
        _, raw = _load_config(args.config)
        result, header, rows = HANDLERS[args.command](cfg, threads)
        params = {k: v for k, v in cfg.items() if k != "format"}
        payload = {"schema_version": SCHEMA_VERSION, "command": args.command, "params": params, "result": result}
        validate_payload(args.command, payload)
        text = dumps(payload) if cfg["format"] == "json" else to_csv(header, rows)
        digest = hashlib.sha256(text.encode()).hexdigest()
        manifest = {
            "command": args.command,
            "config": params,
            "config_file": raw,
            "format": cfg["format"],
            "threads": threads,
            "version": __version__,
            "payload_sha256": digest,
            "elapsed_seconds": time.perf_counter() - t0,
            "summary": _summary(args.command, result),
        }
        if args.out:
            with open(args.out, "w") as fh:
                fh.write(text)
            with open(args.out + ".manifest.json", "w") as fh:
                fh.write(dumps(manifest))
        else:
            sys.stdout.write(text)
            sys.stderr.write(dumps(manifest))
        return 0
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except ValidationError as exc:
        return _fail(exc, 2)
    except NumericalError as exc:
        return _fail(exc, 1)
    except ErgoqError as exc:
        return _fail(exc, 1)
    except (ValueError, TypeError, KeyError) as exc:
        return _fail(exc, 2)
    except (ArithmeticError, np.linalg.LinAlgError) as exc:
        return _fail(exc, 1)


def _summary(command, result) -> dict:
    keys = {"mu_hat", "slope", "r_squared", "m2", "all_passed", "finite", "thermo", "converged", "ks_semicircle"}
    return {k: v for k, v in result.items() if k in keys}


def _fail(exc, code) -> int:
    err = {"error": {"type": type(exc).__name__, "message": str(exc), "exit_code": code}}
    for attr in ("index", "residual", "iterations"):
        if getattr(exc, attr, None) is not None:
            err["error"][attr] = getattr(exc, attr)
    sys.stderr.write(json.dumps(err) + "\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
